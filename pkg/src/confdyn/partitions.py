"""Cylinder trees over an induced base and the (d+1)-class partition.

The tree holds every pullback component of the base U to a given depth,
addressed by inverse-branch words (prepend convention, so f(Q_w) is the
node at word w[1:]).  The first-entry nodes, whose suffix pullbacks all
avoid U, realise the countable partition by entry time; distributing them
greedily over at most d+1 classes, lowest available index first, yields a
partition on which the map stays injective classwise, with the base as
its own class and the last class never meeting f^{-1}(f(U)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AssignmentOverflow, BoundaryAmbiguity
from .induced import InducedMarkovMap
from .models import Interval, Model1D

CODING_TOL = 1e-9


@dataclass
class CylinderNode:
    word: tuple
    depth: int
    interval: Interval
    rel_base: str            # inside / disjoint / partial
    first_entry: bool = False


@dataclass
class CylinderTree:
    model: object
    base: Interval
    depth: int
    nodes: dict              # word -> CylinderNode, includes the root ()
    zeta: list               # first-entry words per level, root first

    def node(self, word) -> CylinderNode:
        return self.nodes[word]

    def image_zeta_word(self, word):
        """The first-entry element containing f(Q_word): for zeta nodes
        this is simply the word with its leading letter dropped (the root
        for depth-1 nodes)."""
        return word[1:]

    def leaves(self):
        return [n for n in self.nodes.values() if n.depth == self.depth]


def build_cylinder_tree(imap: InducedMarkovMap, depth: int) -> CylinderTree:
    """All pullback components of the base to the given depth, with their
    first-entry (zeta) selection."""
    model = imap.model
    if not isinstance(model, Model1D):
        raise NotImplementedError("cylinder trees are built over 1-d models")
    base = imap.base
    nodes = {(): CylinderNode(word=(), depth=0, interval=base,
                              rel_base="inside", first_entry=True)}
    frontier = [()]
    for n in range(1, depth + 1):
        nxt = []
        for w in frontier:
            iv = nodes[w].interval
            for b in range(model.degree):
                piece = model.pullback_interval(b, iv)
                word = (b,) + w
                rel = _rel_to_base(piece, base, model)
                nodes[word] = CylinderNode(word=word, depth=n,
                                           interval=piece, rel_base=rel)
                nxt.append(word)
        frontier = nxt
    zeta = [()]
    for word, node in sorted(nodes.items(), key=lambda kv: (kv[1].depth, kv[1].interval.a)):
        if node.depth == 0:
            continue
        ok = True
        for j in range(node.depth):
            if nodes[word[j:]].rel_base != "disjoint":
                ok = False
                break
        node.first_entry = ok
        if ok:
            zeta.append(word)
    return CylinderTree(model=model, base=base, depth=depth, nodes=nodes, zeta=zeta)


def _rel_to_base(piece: Interval, base: Interval, model, tol: float = 1e-12) -> str:
    if base.contains(piece, tol):
        return "inside"
    if base.disjoint(piece, tol):
        return "disjoint"
    return "partial"


def verify_tree_invariants(tree: CylinderTree, tol: float = 0.0) -> bool:
    """Exhaustive checks: images land in a unique lower-iterate node, and
    all node realisations are pairwise nested or disjoint."""
    for word, node in tree.nodes.items():
        if node.depth == 0:
            continue
        parent = tree.nodes[word[1:]]
        if parent.depth != node.depth - 1:
            return False
    realised = list(tree.nodes.values())
    for i in range(len(realised)):
        for j in range(i + 1, len(realised)):
            a, b = realised[i].interval, realised[j].interval
            if a.contains(b, tol) or b.contains(a, tol) or a.disjoint(b, tol):
                continue
            return False
    return True


# -- the finite partition ------------------------------------------------------

@dataclass
class FinitePartition:
    d: int
    classes: list            # d+1 lists of zeta words; classes[0] = [()]
    tree: CylinderTree
    class_images: list = field(default_factory=list)

    def n_nonempty(self) -> int:
        return sum(1 for c in self.classes if c)

    def class_of_word(self, word):
        for i, c in enumerate(self.classes):
            if word in c:
                return i
        return None

    def to_json(self) -> str:
        import json
        return json.dumps({str(i): ["".join(map(str, w)) or "base" for w in c]
                           for i, c in enumerate(self.classes)})


def _image_intervals(tree: CylinderTree, word) -> list:
    """f(Q_word) as a list of intervals (exact for 1-d models)."""
    model = tree.model
    if word == ():
        # image of the base: union of monotone-piece images
        base = tree.base
        cuts = sorted({base.a, base.b} |
                      {c for c in _cuts(model) if base.a < c < base.b})
        out = []
        for a, b in zip(cuts[:-1], cuts[1:]):
            fa = float(model.apply(a))
            fb = float(model.apply(np.nextafter(b, a)))
            lo, hi = min(fa, fb), max(fa, fb)
            out.append(Interval(lo, max(hi, lo + 1e-15)))
        return out
    return [tree.nodes[word[1:]].interval]


def _cuts(model):
    if model.circle:
        return [k / model.degree for k in range(1, model.degree)]
    if model.name == "tent":
        return [0.5]
    if model.name.startswith("chebyshev"):
        return [0.5]
    if model.name.startswith("zsq"):
        return [0.0]
    return []


def _unions_meet(a: list, b: list, tol: float = 1e-12) -> bool:
    for x in a:
        for y in b:
            if not x.disjoint(y, tol):
                return True
    return False


def distribute(tree: CylinderTree, d: int | None = None) -> FinitePartition:
    """Greedy level-by-level assignment of first-entry cylinders.

    Processes zeta elements in (entry time, leftmost point) order and puts
    each into the lowest-indexed class i >= 1 whose current image set is
    disjoint from the element's image, exactly the inductive rule that
    keeps the map injective on every class.  AssignmentOverflow signals a
    violated tree invariant (more than d collisions for one element).
    """
    d = d or tree.model.degree
    classes = [[] for _ in range(d + 1)]
    classes[0] = [()]
    images = [[] for _ in range(d + 1)]
    images[0] = _image_intervals(tree, ())
    for word in tree.zeta:
        if word == ():
            continue
        img = _image_intervals(tree, word)
        placed = False
        for i in range(1, d + 1):
            if not _unions_meet(images[i], img):
                classes[i].append(word)
                images[i].extend(img)
                placed = True
                break
        if not placed:
            raise AssignmentOverflow(
                f"cylinder {word} collides with every class; tree invariants broken"
            )
    return FinitePartition(d=d, classes=classes, tree=tree, class_images=images)


def verify_partition_invariants(p: FinitePartition, tol: float = 0.0):
    """The five structural invariants, returned as a dict of booleans."""
    tree = p.tree
    out = {}
    out["at_most_d_plus_1"] = len(p.classes) <= p.d + 1
    out["base_is_class0"] = p.classes[0] == [()]
    inj = True
    for c in p.classes:
        imgs = [iv for w in c for iv in _image_intervals(tree, w)]
        for i in range(len(imgs)):
            for j in range(i + 1, len(imgs)):
                if not imgs[i].disjoint(imgs[j], tol):
                    inj = False
    out["classwise_injective"] = inj
    f_u = _image_intervals(tree, ())
    excl = True
    for w in p.classes[p.d]:
        if _unions_meet(_image_intervals(tree, w), f_u):
            excl = False
    out["last_class_avoids_f_base"] = excl
    assigned = [w for c in p.classes for w in c]
    out["each_cylinder_once"] = (sorted(assigned) == sorted(tree.zeta)
                                 and len(assigned) == len(set(assigned)))
    return out


# -- coding and separation ------------------------------------------------------

def _zeta_lookup(tree: CylinderTree):
    """Sorted first-entry intervals for point classification (cached)."""
    cached = getattr(tree, "_zeta_lookup_cache", None)
    if cached is not None:
        return cached
    items = []
    for w in tree.zeta:
        iv = tree.nodes[w].interval if w != () else tree.base
        items.append((iv.a, iv.b, w))
    items.sort()
    tree._zeta_lookup_cache = items
    return items


def classify_point(tree: CylinderTree, partition: FinitePartition, x: float,
                   tol: float = CODING_TOL):
    """Class index of the zeta element containing x; BoundaryAmbiguity
    within tol of an element boundary, None when x is in no element
    (deeper than the tree or in the pruned remainder)."""
    for a, b, w in _zeta_lookup(tree):
        if a + tol < x < b - tol:
            return partition.class_of_word(w)
        if abs(x - a) <= tol or abs(x - b) <= tol:
            raise BoundaryAmbiguity(f"point {x} lies within {tol} of a cylinder boundary")
    return None


def refine_and_code(partition: FinitePartition, orbit, tol: float = CODING_TOL) -> str:
    """Symbol string of an orbit: the class of the cylinder of f^i(x)."""
    tree = partition.tree
    pts = orbit.points if hasattr(orbit, "points") else list(orbit)
    symbols = []
    for x in pts:
        c = classify_point(tree, partition, float(x), tol)
        symbols.append("?" if c is None else str(c))
    return "".join(symbols)


@dataclass
class SeparationStats:
    depths: list
    max_distances: list
    slope: float


def separation_check(partition: FinitePartition, tree: CylinderTree,
                     pairs: int = 2000, seed: int = 0,
                     code_len: int | None = None) -> SeparationStats:
    """Max distance between random points sharing a code prefix of depth k;
    decays geometrically for a generating partition."""
    model = tree.model
    rng = np.random.default_rng(seed)
    code_len = code_len or tree.depth
    pts = rng.uniform(model.lo, model.hi, size=pairs)
    codes = []
    kept = []
    for x in pts:
        try:
            cur = float(x)
            syms = []
            for _ in range(code_len):
                c = classify_point(tree, partition, cur)
                syms.append("?" if c is None else str(c))
                cur = float(model.apply(cur))
            codes.append("".join(syms))
            kept.append(float(x))
        except BoundaryAmbiguity:
            continue
    depths, maxd = [], []
    for k in range(1, code_len + 1):
        buckets: dict = {}
        for x, c in zip(kept, codes):
            buckets.setdefault(c[:k], []).append(x)
        worst = 0.0
        for vals in buckets.values():
            if len(vals) >= 2:
                worst = max(worst, max(vals) - min(vals))
        if worst > 0:
            depths.append(k)
            maxd.append(worst)
    slope = 0.0
    if len(depths) >= 2:
        slope = float(np.polyfit(depths, np.log(maxd), 1)[0])
    return SeparationStats(depths=depths, max_distances=maxd, slope=slope)


def empirical_entropy(symbols: str, k: int = 8) -> float:
    """Conditional block-entropy estimate H_k - H_(k-1) of a symbol stream."""
    if len(symbols) < 10 * k:
        raise ValueError("symbol stream too short for the requested block size")

    def block_h(m):
        counts: dict = {}
        total = 0
        for i in range(len(symbols) - m + 1):
            blk = symbols[i:i + m]
            if "?" in blk:
                continue
            counts[blk] = counts.get(blk, 0) + 1
            total += 1
        p = np.array(list(counts.values()), dtype=float) / total
        return float(-(p * np.log(p)).sum())

    return block_h(k) - block_h(k - 1)


def coded_blocks(partition: FinitePartition, sampler, n_blocks: int,
                 block_len: int, seed: int = 0) -> list:
    """Independent orbit-code blocks from sampled starting points.

    Short fresh orbits per sample avoid the float-orbit degeneracy of
    binary-shift-like models (long float orbits of the doubling map
    collapse onto 0), while still coding genuine consecutive dynamics.
    """
    tree = partition.tree
    model = tree.model
    rng = np.random.default_rng(seed)
    starts = sampler(rng, n_blocks)
    blocks = []
    for x in np.asarray(starts, dtype=float):
        cur = float(x)
        syms = []
        try:
            for _ in range(block_len):
                c = classify_point(tree, partition, cur)
                syms.append("?" if c is None else str(c))
                cur = float(model.apply(cur))
        except BoundaryAmbiguity:
            continue
        blocks.append("".join(syms))
    return blocks


def block_entropy(blocks: list, k: int) -> float:
    """H_k - H_(k-1) from independent code blocks of length >= k."""

    def block_h(m):
        counts: dict = {}
        total = 0
        for blk in blocks:
            s = blk[:m]
            if len(s) < m or "?" in s:
                continue
            counts[s] = counts.get(s, 0) + 1
            total += 1
        if total == 0:
            raise ValueError("no clean blocks")
        p = np.array(list(counts.values()), dtype=float) / total
        return float(-(p * np.log(p)).sum())

    return block_h(k) - block_h(k - 1)
