"""Strong amalgamation and generic (limit-approximating) construction.

Amalgamation of two H4-free extensions over a common part works through the
hypergraph encoding: order the points so the new points of one side sit
below everything and the new points of the other side above, amalgamate
freely (no mixed hyperedges), and decode.  The only candidate H4 patterns
then straddle both sides and are excluded because R(b1, b2, a) holds for
every shared point a.

`build_generic` grows a structure of a prescribed 4-constrained class until
every admissible one-point extension type over every small subset is
realized, as far as the point budget allows; a stochastic repair phase
(seeded, deterministic) handles the demands growth alone cannot meet.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable

from .core import (
    CLASS_BY_MASK,
    ALL_CLASSES,
    H4_FREE,
    BudgetError,
    DomainError,
    FourClass,
    Hypertournament,
    PartialHypertournament,
    triple_index,
    triples,
)

ClassSet = frozenset[FourClass]

AMALGAMATION_CLASSES: tuple[ClassSet, ...] = (
    ALL_CLASSES,
    H4_FREE,
    frozenset((FourClass.C4, FourClass.H4)),
    frozenset((FourClass.C4,)),
)


@dataclass(frozen=True)
class Embedding:
    """Injective structure-preserving map, stored as mapping[src point] = dst point."""

    mapping: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(set(self.mapping)) != len(self.mapping):
            raise DomainError("embedding is not injective")

    def apply(self, p: int) -> int:
        return self.mapping[p]

    @classmethod
    def identity(cls, n: int) -> "Embedding":
        return cls(tuple(range(n)))

    def check(self, src: Hypertournament, dst: Hypertournament) -> None:
        if len(self.mapping) != src.n:
            raise DomainError("embedding domain does not match the source structure")
        if any(not 0 <= q < dst.n for q in self.mapping):
            raise DomainError("embedding image out of range")
        for a, b, c in triples(src.n):
            if src.eval_r(a, b, c) != dst.eval_r(*(self.mapping[p] for p in (a, b, c))):
                raise DomainError(f"map does not preserve R on {(a, b, c)}")


@dataclass(frozen=True)
class OnePointType:
    """Full specification of R between a new point x and every pair of a subset.

    pair_bits follows the lexicographic pair order of base_points;
    bit value is the truth of R(x, a, b).
    """

    base_points: tuple[int, ...]
    pair_bits: tuple[int, ...]

    def __post_init__(self) -> None:
        if list(self.base_points) != sorted(set(self.base_points)):
            raise DomainError("base points must be sorted and distinct")
        want = len(self.base_points) * (len(self.base_points) - 1) // 2
        if len(self.pair_bits) != want:
            raise DomainError(f"need {want} pair bits, got {len(self.pair_bits)}")

    def pairs(self) -> tuple[tuple[int, int], ...]:
        return tuple(combinations(self.base_points, 2))

    def truth(self, a: int, b: int) -> bool:
        """Truth of R(x, a, b)."""
        if a > b:
            return not self.truth(b, a)
        for bit, pair in zip(self.pair_bits, combinations(self.base_points, 2)):
            if pair == (a, b):
                return bool(bit)
        raise DomainError(f"pair ({a}, {b}) is not inside the type's base")

    @classmethod
    def of_point(cls, ht: Hypertournament, p: int, base: Iterable[int]) -> "OnePointType":
        """The type the existing point p realizes over base."""
        pts = tuple(sorted(set(base)))
        if p in pts:
            raise DomainError("point lies inside the base")
        bits = tuple(int(ht.eval_r(p, a, b)) for a, b in combinations(pts, 2))
        return cls(pts, bits)

    @classmethod
    def clone_of(cls, ht: Hypertournament, astar: int, base: Iterable[int]) -> "OnePointType":
        """Type copying astar: R(x, astar, b) always, other pairs read off astar.

        This is admissible in every 4-constrained class: 4-sets through both
        x and astar repeat an orientation on a shared pair, the rest are
        isomorphic to 4-sets of the ambient structure.
        """
        pts = tuple(sorted(set(base)))
        bits = []
        for a, b in combinations(pts, 2):
            if astar == a:
                bits.append(1)
            elif astar == b:
                bits.append(0)
            else:
                bits.append(int(ht.eval_r(astar, a, b)))
        return cls(pts, tuple(bits))


ENUM_BASE_CAP = 6


def _extension_mask(ht: Hypertournament, t: OnePointType, tri: tuple[int, int, int]) -> int:
    """Pattern of the 4-set {x} + tri when x realizes t, in the x-last convention."""
    a, b, c = tri
    idx = triple_index(ht.n)
    beta = ht.bits[idx[tri]]
    # eval_r(a, b, x) = R(x, a, b) by cyclic invariance
    return (
        beta
        | int(t.truth(a, b)) << 1
        | int(t.truth(a, c)) << 2
        | int(t.truth(b, c)) << 3
    )


def type_is_admissible(ht: Hypertournament, t: OnePointType, classes: ClassSet) -> bool:
    """Would realizing t keep every 4-subset of base+{x} inside the class set?"""
    pts = t.base_points
    for quad in combinations(pts, 4):
        if CLASS_BY_MASK[ht.four_set_mask(quad)] not in classes:
            return False
    for tri in combinations(pts, 3):
        if CLASS_BY_MASK[_extension_mask(ht, t, tri)] not in classes:
            return False
    return True


def enumerate_one_point_types(
    ht: Hypertournament, base: Iterable[int], classes: ClassSet
) -> list[OnePointType]:
    """All admissible one-point types over base, in pair-bit order."""
    pts = tuple(sorted(set(base)))
    npairs = len(pts) * (len(pts) - 1) // 2
    if len(pts) > ENUM_BASE_CAP:
        raise BudgetError(
            f"type enumeration is capped at bases of {ENUM_BASE_CAP} points, got {len(pts)}"
        )
    out = []
    for mask in range(1 << npairs):
        bits = tuple((mask >> i) & 1 for i in range(npairs))
        t = OnePointType(pts, bits)
        if type_is_admissible(ht, t, classes):
            out.append(t)
    return out


def realize_type(
    ht: Hypertournament, t: OnePointType, classes: ClassSet
) -> int | None:
    """Smallest point outside the base realizing t exactly, or None."""
    if not type_is_admissible(ht, t, classes):
        raise DomainError("type is not admissible over its base")
    base = set(t.base_points)
    pairs = t.pairs()
    for p in range(ht.n):
        if p in base:
            continue
        if all(ht.eval_r(p, a, b) == t.truth(a, b) for a, b in pairs):
            return p
    return None


def amalgamate_one_point(
    base: Hypertournament, t1: OnePointType, t2: OnePointType
) -> Hypertournament:
    """Amalgamate the two one-point extensions of base given by t1 and t2.

    Output points: base unchanged, b1 = base.n, b2 = base.n + 1, with
    R(b1, b2, a) for every base point a.  The result is H4-free and keeps
    b1 and b2 distinct whenever the inputs meet their preconditions.
    """
    all_pts = tuple(range(base.n))
    for t in (t1, t2):
        if t.base_points != all_pts:
            raise DomainError("one-point types must cover every point of the base")
    if not base.is_h4_free():
        raise DomainError("base structure is not H4-free")
    from .solver import extend_by_point

    for name, t in (("t1", t1), ("t2", t2)):
        if extend_by_point(base, t) is None:
            raise DomainError(f"{name} does not extend the base H4-freely")

    b1, b2 = base.n, base.n + 1
    part = PartialHypertournament.empty(base.n + 2)
    for key in triples(base.n):
        part.orient[key] = base.bits[triple_index(base.n)[key]]
    for a, b in combinations(range(base.n), 2):
        part.set_r(b1, a, b, t1.truth(a, b))
        part.set_r(b2, a, b, t2.truth(a, b))
    for a in range(base.n):
        part.set_r(b1, b2, a, True)
    result = part.to_hypertournament()
    if not result.is_h4_free():
        raise AssertionError("one-point amalgam failed the H4-freeness scan")
    return result


def strong_amalgamate(
    base: Hypertournament,
    side1: Hypertournament,
    side2: Hypertournament,
    f1: Embedding,
    f2: Embedding,
) -> tuple[Hypertournament, Embedding, Embedding]:
    """Strong amalgam of side1 and side2 over base along f1, f2.

    Returns (C, g1, g2) with g1 . f1 == g2 . f2, the images overlapping
    exactly in the copy of base, and C H4-free.
    """
    f1.check(base, side1)
    f2.check(base, side2)
    for name, side in (("side1", side1), ("side2", side2)):
        if not side.is_h4_free():
            raise DomainError(f"{name} is not H4-free")

    # C ids: base copy at 0..nA-1, then new side-1 points, then new side-2 points.
    nA = base.n
    im1, im2 = set(f1.mapping), set(f2.mapping)
    new1 = [p for p in range(side1.n) if p not in im1]
    new2 = [p for p in range(side2.n) if p not in im2]
    g1 = {f1.apply(a): a for a in range(nA)}
    for i, p in enumerate(new1):
        g1[p] = nA + i
    g2 = {f2.apply(a): a for a in range(nA)}
    for i, p in enumerate(new2):
        g2[p] = nA + len(new1) + i
    n_total = nA + len(new1) + len(new2)

    inv1 = {v: k for k, v in g1.items()}
    inv2 = {v: k for k, v in g2.items()}

    def order_key(p: int) -> tuple[int, int]:
        if p in inv1 and p >= nA:
            return (0, p)
        if p < nA:
            return (1, p)
        return (2, p)

    part = PartialHypertournament.empty(n_total)
    for key in triples(n_total):
        if all(p in inv1 for p in key):
            a, b, c = (inv1[p] for p in key)
            part.set_r(key[0], key[1], key[2], side1.eval_r(a, b, c))
        elif all(p in inv2 for p in key):
            a, b, c = (inv2[p] for p in key)
            part.set_r(key[0], key[1], key[2], side2.eval_r(a, b, c))
        else:
            o1, o2, o3 = sorted(key, key=order_key)
            part.set_r(o1, o2, o3, False)
    result = part.to_hypertournament()
    if not result.is_h4_free():
        raise AssertionError("amalgam failed the H4-freeness scan")
    emb1 = Embedding(tuple(g1[p] for p in range(side1.n)))
    emb2 = Embedding(tuple(g2[p] for p in range(side2.n)))
    emb1.check(side1, result)
    emb2.check(side2, result)
    return result, emb1, emb2


def random_structure(
    n: int, classes: ClassSet, rng: random.Random, reject_tries: int = 64
) -> Hypertournament:
    """Random structure of the class, grown one point at a time.

    Each point first tries rejection-sampled random types; the clone type of
    a random existing point is the always-admissible fallback.
    """
    if n < 1:
        raise DomainError("need at least one point")
    part = PartialHypertournament.empty(min(n, 3))
    if n >= 3:
        part.orient[(0, 1, 2)] = rng.randrange(2)
    ht = part.to_hypertournament()
    while ht.n < n:
        pts = tuple(range(ht.n))
        chosen = None
        for _ in range(reject_tries):
            bits = tuple(rng.randrange(2) for _ in range(len(pts) * (len(pts) - 1) // 2))
            t = OnePointType(pts, bits)
            if type_is_admissible(ht, t, classes):
                chosen = t
                break
        if chosen is None:
            chosen = OnePointType.clone_of(ht, rng.randrange(ht.n), pts)
        ht = _install_point(ht, chosen)
    return ht


def _install_point(ht: Hypertournament, t: OnePointType) -> Hypertournament:
    part = PartialHypertournament.empty(ht.n + 1)
    for key in triples(ht.n):
        part.orient[key] = ht.bits[triple_index(ht.n)[key]]
    x = ht.n
    for a, b in combinations(range(ht.n), 2):
        part.set_r(x, a, b, t.truth(a, b))
    return part.to_hypertournament()


def missing_demands(
    ht: Hypertournament, classes: ClassSet, depth: int
) -> list[tuple[tuple[int, ...], OnePointType]]:
    """Admissible (subset, type) pairs of size 2..depth realized by no point."""
    out = []
    for size in range(2, depth + 1):
        for base in combinations(range(ht.n), size):
            realized = set()
            base_set = set(base)
            pairs = tuple(combinations(base, 2))
            for p in range(ht.n):
                if p in base_set:
                    continue
                realized.add(tuple(int(ht.eval_r(p, a, b)) for a, b in pairs))
            for t in enumerate_one_point_types(ht, base, classes):
                if t.pair_bits not in realized:
                    out.append((base, t))
    return out


@dataclass
class GenericBuildReport:
    """Outcome of a generic build: what was requested and what was achieved."""

    n: int
    classes: tuple[str, ...]
    depth: int
    seed: int
    complete: bool
    missing: list[tuple[tuple[int, ...], tuple[int, ...]]] = field(default_factory=list)
    grown_points: int = 0
    repair_steps: int = 0
    elapsed: float = 0.0

    def summary(self) -> str:
        status = "complete" if self.complete else f"{len(self.missing)} demands unrealized"
        return (
            f"generic build n={self.n} classes={'+'.join(self.classes)} depth={self.depth} "
            f"seed={self.seed}: {status} "
            f"(grown {self.grown_points} points, {self.repair_steps} repair steps, "
            f"{self.elapsed:.1f}s)"
        )


GENERIC_DEPTH_CAP = 3


def build_generic(
    n: int,
    classes: ClassSet,
    depth: int,
    seed: int,
    time_budget: float = 45.0,
) -> tuple[Hypertournament, GenericBuildReport]:
    """Structure of the class on n points realizing every admissible one-point
    type over every subset of size <= depth, as far as n permits.

    Deterministic in seed.  When the demands cannot all be met within the
    point count and budget, the best structure found is returned together
    with a report listing what is missing.
    """
    classes = frozenset(classes)
    if classes not in AMALGAMATION_CLASSES:
        raise DomainError("class set is not one of the four 4-constrained amalgamation classes")
    if depth < 1:
        raise DomainError("depth must be at least 1")
    if depth > GENERIC_DEPTH_CAP:
        raise BudgetError(f"witness depth is capped at {GENERIC_DEPTH_CAP}")
    if n < depth + 1:
        raise DomainError("need at least depth+1 points")

    t0 = time.time()
    rng = random.Random(seed)
    ht = random_structure(min(n, depth + 1), classes, rng)
    grown = 0

    # Growth: realize an outstanding demand with each fresh point.
    while ht.n < n:
        demands = missing_demands(ht, classes, depth)
        target = demands[grown % len(demands)] if demands else None
        t = _grow_type(ht, classes, target, rng)
        ht = _install_point(ht, t)
        grown += 1

    repair_steps = 0
    if missing_demands(ht, classes, depth):
        ht, repair_steps = _repair(ht, classes, depth, rng, t0, time_budget)

    missing = missing_demands(ht, classes, depth)
    report = GenericBuildReport(
        n=n,
        classes=tuple(sorted(c.value for c in classes)),
        depth=depth,
        seed=seed,
        complete=not missing and ht.in_constrained_class(classes),
        missing=[(base, t.pair_bits) for base, t in missing],
        grown_points=grown,
        repair_steps=repair_steps,
        elapsed=time.time() - t0,
    )
    return ht, report


def _grow_type(
    ht: Hypertournament,
    classes: ClassSet,
    target: tuple[tuple[int, ...], OnePointType] | None,
    rng: random.Random,
    tries: int = 200,
) -> OnePointType:
    """A type for the next point, matching the target demand when possible."""
    pts = tuple(range(ht.n))
    all_pairs = tuple(combinations(pts, 2))
    fixed: dict[tuple[int, int], int] = {}
    if target is not None:
        base, t = target
        for (a, b), bit in zip(t.pairs(), t.pair_bits):
            fixed[(a, b)] = bit
    for _ in range(tries):
        bits = tuple(
            fixed.get(pair, rng.randrange(2)) for pair in all_pairs
        )
        cand = OnePointType(pts, bits)
        if type_is_admissible(ht, cand, classes):
            return cand
    # Fall back to a clone; it ignores the target but always extends.
    return OnePointType.clone_of(ht, rng.randrange(ht.n), pts)


def _repair(
    ht: Hypertournament,
    classes: ClassSet,
    depth: int,
    rng: random.Random,
    t0: float,
    time_budget: float,
) -> tuple[Hypertournament, int]:
    """Seeded stochastic repair of unmet demands at fixed n."""
    if depth >= 3:
        from ._genkernel import repair_depth3

        return repair_depth3(ht, classes, rng.randrange(1 << 30), t0, time_budget)
    # depth <= 2: demands are single pair orientations; fix them greedily.
    steps = 0
    for _ in range(200):
        demands = missing_demands(ht, classes, depth)
        if not demands:
            break
        (base, t) = demands[0]
        a, b = base
        want = bool(t.pair_bits[0])
        fixed = False
        for p in range(ht.n):
            if p in base:
                continue
            flipped = _with_r_flipped(ht, p, a, b, want)
            steps += 1
            if flipped.in_constrained_class(classes) and len(
                missing_demands(flipped, classes, depth)
            ) < len(demands):
                ht = flipped
                fixed = True
                break
        if not fixed:
            p = rng.choice([q for q in range(ht.n) if q not in base])
            ht = _with_r_flipped(ht, p, a, b, want)
            steps += 1
        if time.time() - t0 > time_budget:
            break
    return ht, steps


def _with_r_flipped(ht: Hypertournament, p: int, a: int, b: int, want: bool) -> Hypertournament:
    part = PartialHypertournament.of(ht)
    key = tuple(sorted((p, a, b)))
    del part.orient[key]
    part.set_r(p, a, b, want)
    return part.to_hypertournament()
