"""Benchmark registry: maps with closed-form invariants, their samplers,
and the per-case configuration the verification harness runs with.

Every known quantity carries a provenance note; the registry refuses
entries without one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import models
from .models import (
    ChebyshevModel,
    CircleModel,
    ShiftedSquareModel,
    TentModel,
    chebyshev_quartic_spec,
    lattes_degree2_spec,
    power_map_spec,
    quadratic_spec,
)

LOG2 = math.log(2.0)


@dataclass
class BenchmarkCase:
    name: str
    kind: str                       # circle / tent / interval / disk / sphere
    known: dict
    provenance: dict
    map_spec: object = None
    model_factory: object = None
    base: tuple = (0.0, 0.5)
    verify_items: tuple = ("dbb", "pesin", "dimension", "markov")
    flags: tuple = ()
    transfer: dict = field(default_factory=dict)

    def __post_init__(self):
        missing = [k for k in self.known if k not in self.provenance]
        if missing:
            raise ValueError(f"known quantities without provenance: {missing}")

    def model(self):
        return self.model_factory()


def circle_uniform_sampler(rng, n):
    return rng.uniform(0.0, 1.0, n)


def tent_uniform_sampler(rng, n):
    return rng.uniform(0.0, 1.0, n)


def chebyshev_acip_sampler(rng, n):
    # inverse-CDF sampling of the arcsine law
    return ChebyshevModel.from_tent(rng.uniform(0.0, 1.0, n))


def zsq2_acip_sampler(rng, n):
    # pushforward of the arcsine law through the conjugacy x -> 2 - 4x
    return 2.0 - 4.0 * chebyshev_acip_sampler(rng, n)


_REGISTRY: dict = {}


def register(case: BenchmarkCase):
    _REGISTRY[case.name] = case
    return case


def get_case(name: str) -> BenchmarkCase:
    if name not in _REGISTRY:
        raise KeyError(f"unknown benchmark case {name!r}; have {sorted(_REGISTRY)}")
    return _REGISTRY[name]


def case_names():
    return sorted(_REGISTRY)


register(BenchmarkCase(
    name="z2-circle",
    kind="circle",
    map_spec=power_map_spec(2),
    model_factory=lambda: CircleModel(2),
    base=(0.0, 0.5),
    known={"chi": LOG2, "entropy": LOG2, "t": 1.0, "phi_const": 0.0,
           "hd": 1.0, "pressure_slope": -LOG2, "degree": 2},
    provenance={
        "chi": "derivative of z^2 is constant 2 on the unit circle",
        "entropy": "angle doubling is Bernoulli(1/2, 1/2)",
        "t": "arc length has Jacobian |Df| = 2 and P(1) = 0",
        "phi_const": "natural potential, no extra weight",
        "hd": "the invariant circle has dimension 1",
        "pressure_slope": "P(t) = (1 - t) log 2 from the constant derivative",
        "degree": "z^2 is 2-to-1",
    },
))

register(BenchmarkCase(
    name="z3-circle",
    kind="circle",
    map_spec=power_map_spec(3),
    model_factory=lambda: CircleModel(3),
    base=(0.0, 1.0 / 3.0),
    known={"chi": math.log(3.0), "entropy": math.log(3.0), "t": 1.0,
           "phi_const": 0.0, "hd": 1.0, "degree": 3},
    provenance={
        "chi": "derivative of z^3 is constant 3 on the unit circle",
        "entropy": "angle tripling is Bernoulli(1/3, 1/3, 1/3)",
        "t": "arc length has Jacobian 3 and P(1) = 0",
        "phi_const": "natural potential",
        "hd": "the invariant circle has dimension 1",
        "degree": "z^3 is 3-to-1",
    },
    verify_items=("dbb", "pesin", "markov"),
))

register(BenchmarkCase(
    name="chebyshev",
    kind="tent",
    map_spec=chebyshev_quartic_spec(),
    model_factory=TentModel,
    base=(0.0, 0.5),
    known={"chi": LOG2, "entropy": LOG2, "t": 1.0, "phi_const": 0.0,
           "hd": 1.0, "acip": "arcsine", "degree": 2},
    provenance={
        "chi": "conjugate to the tent map of slope 2",
        "entropy": "tent conjugacy: Bernoulli(1/2, 1/2)",
        "t": "Lebesgue is 1-conformal for interval maps",
        "phi_const": "natural potential",
        "hd": "the invariant segment has dimension 1",
        "acip": "density 1/(pi sqrt(x(1-x))) from the sine conjugacy",
        "degree": "quadratic",
    },
))

register(BenchmarkCase(
    name="z2-minus-2",
    kind="interval",
    map_spec=models.RationalMapSpec.build([-2.0, 0.0, 1.0], [1.0]),
    model_factory=ShiftedSquareModel,
    base=(-2.0, 0.0),
    known={"t0": 1.0, "chi": LOG2, "degree": 2},
    provenance={
        "t0": "the Julia set is the segment [-2, 2], dimension 1",
        "chi": "affine conjugate of the Chebyshev map",
        "degree": "quadratic",
    },
    verify_items=("pressure_zero",),
))

register(BenchmarkCase(
    name="z2-plus-c",
    kind="disk",
    map_spec=quadratic_spec(0.1),
    model_factory=lambda: models.SphereMapModel(quadratic_spec(0.1), "z2+0.1"),
    known={"degree": 2},
    provenance={"degree": "quadratic"},
    verify_items=("dimension", "markov"),
    transfer={"rect": (-1.6, 1.6, -1.6, 1.6), "resolution": 128,
              "cloud_points": 40000},
    flags=("hyperbolic-by-expansion-sampling",),
))

register(BenchmarkCase(
    name="lattes-deg2",
    kind="sphere",
    map_spec=lattes_degree2_spec(),
    model_factory=lambda: models.SphereMapModel(lattes_degree2_spec(), "lattes"),
    known={"entropy": LOG2, "chi": 0.5 * LOG2, "t": 2.0, "phi_const": 0.0,
           "degree": 2},
    provenance={
        "entropy": "degree-2 map: topological entropy log 2, attained",
        "chi": "torus cover multiplies by 1+i, |1+i| = sqrt 2",
        "t": "the smooth invariant measure is Lebesgue-conformal (t = 2)",
        "phi_const": "natural potential",
        "degree": "(i/2)(z - 1/z) is 2-to-1",
    },
    verify_items=("pesin",),
    transfer={"rect": (-1.06, 1.06, -1.06, 1.06), "resolution": 64,
              "active_disk_radius": 1.05, "fold": "lattes",
              "samples_per_cell": 24},
    flags=("exceptional-measure caution",),
))


def sampler_for(case: BenchmarkCase):
    if case.name.startswith("z2-circle") or case.kind == "circle":
        return circle_uniform_sampler
    if case.name == "chebyshev":
        return tent_uniform_sampler
    if case.name == "z2-minus-2":
        return zsq2_acip_sampler
    raise KeyError(f"no invariant sampler registered for {case.name}")
