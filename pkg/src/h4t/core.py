"""Core representation of finite 3-hypertournaments.

A 3-hypertournament assigns one of the two cyclic orientation classes to
every 3-element subset of its points: the ternary relation R is invariant
under cyclic shifts of its arguments and negated by transpositions.  We
store one bit per sorted triple and recover every R-atom through
permutation parity, so the axioms hold by construction rather than by
stored redundancy.

Relative to a linear order on the points, a 3-hypertournament is the same
data as a 3-uniform hypergraph (`encode` / `decode`).  Under that
correspondence every 4-point structure falls into exactly one of three
isomorphism classes C4 / O4 / H4; the class of interest here is the
structures omitting H4.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations, permutations
from typing import Iterable, Mapping, Sequence


class DomainError(ValueError):
    """An argument violates an operation's domain (bad points, wrong sizes)."""


class BudgetError(RuntimeError):
    """An input exceeds a hard size cap meant to keep every run interactive."""


class Orientation(enum.IntEnum):
    """Orientation of a sorted triple (i, j, k) with i < j < k.

    PLUS means R(i, j, k) holds in that listed order, MINUS means the
    reversed reading R(i, k, j) holds.  Exactly one of the two is true for
    every 3-set.
    """

    MINUS = 0
    PLUS = 1


class FourClass(enum.Enum):
    """Isomorphism class of a 4-point substructure."""

    C4 = "C4"
    O4 = "O4"
    H4 = "H4"


ALL_CLASSES = frozenset((FourClass.C4, FourClass.O4, FourClass.H4))
H4_FREE = frozenset((FourClass.C4, FourClass.O4))

TripleKey = tuple[int, int, int]


@lru_cache(maxsize=None)
def triples(n: int) -> tuple[TripleKey, ...]:
    """All sorted triples over n points, in lexicographic order."""
    return tuple(combinations(range(n), 3))


@lru_cache(maxsize=None)
def triple_index(n: int) -> dict[TripleKey, int]:
    return {t: r for r, t in enumerate(triples(n))}


def perm_parity(seq: Sequence[int]) -> int:
    """Parity (0 even, 1 odd) of a short sequence, by inversion count."""
    inv = 0
    k = len(seq)
    for i in range(k):
        for j in range(i + 1, k):
            if seq[i] > seq[j]:
                inv += 1
    return inv & 1


def check_triple_key(key: TripleKey, n: int) -> None:
    i, j, k = key
    if not (0 <= i < j < k < n):
        raise DomainError(f"invalid triple key {key!r} for {n} points")


@dataclass(frozen=True)
class Hypertournament:
    """Total 3-hypertournament on points 0..n-1.

    ``bits[r]`` is the orientation of the r-th sorted triple in
    lexicographic order: 1 for PLUS, 0 for MINUS.  Instances are immutable;
    all operations are pure reads and safe to use concurrently.
    """

    n: int
    bits: bytes

    def __post_init__(self) -> None:
        want = len(triples(self.n))
        if len(self.bits) != want:
            raise DomainError(
                f"need {want} orientation bits for {self.n} points, got {len(self.bits)}"
            )
        if any(b not in (0, 1) for b in self.bits):
            raise DomainError("orientation bits must be 0 or 1")

    @classmethod
    def from_orient(cls, n: int, orient: Mapping[TripleKey, int]) -> "Hypertournament":
        idx = triple_index(n)
        if len(orient) != len(idx):
            missing = set(idx) - set(orient)
            raise DomainError(f"orientation map is not total; missing e.g. {sorted(missing)[:3]}")
        buf = bytearray(len(idx))
        for key, val in orient.items():
            check_triple_key(key, n)
            buf[idx[key]] = 1 if val else 0
        return cls(n, bytes(buf))

    def orientation(self, key: TripleKey) -> Orientation:
        check_triple_key(key, self.n)
        return Orientation(self.bits[triple_index(self.n)[key]])

    def eval_r(self, a: int, b: int, c: int) -> bool:
        """Truth of R(a, b, c) for distinct points, via permutation parity."""
        if a == b or a == c or b == c:
            raise DomainError(f"R needs distinct points, got ({a}, {b}, {c})")
        for p in (a, b, c):
            if not 0 <= p < self.n:
                raise DomainError(f"point {p} out of range for {self.n} points")
        key = (a, b, c) if a < b < c else tuple(sorted((a, b, c)))
        pos = (key.index(a), key.index(b), key.index(c))
        return bool(self.bits[triple_index(self.n)[key]] ^ perm_parity(pos))

    def four_set_mask(self, pts: Iterable[int]) -> int:
        """Orientation pattern of a 4-set: bits of its four sorted triples."""
        p0, p1, p2, p3 = sorted(pts)
        if len({p0, p1, p2, p3}) != 4:
            raise DomainError("four_set_mask needs 4 distinct points")
        idx = triple_index(self.n)
        return (
            self.bits[idx[(p0, p1, p2)]]
            | self.bits[idx[(p0, p1, p3)]] << 1
            | self.bits[idx[(p0, p2, p3)]] << 2
            | self.bits[idx[(p1, p2, p3)]] << 3
        )

    def classify_4set(self, pts: Iterable[int]) -> FourClass:
        return CLASS_BY_MASK[self.four_set_mask(pts)]

    def four_class_counts(self) -> dict[FourClass, int]:
        counts = {cls: 0 for cls in FourClass}
        for quad in combinations(range(self.n), 4):
            counts[CLASS_BY_MASK[self.four_set_mask(quad)]] += 1
        return counts

    def is_h4_free(self) -> bool:
        idx = triple_index(self.n)
        bits = self.bits
        for p0, p1, p2, p3 in combinations(range(self.n), 4):
            mask = (
                bits[idx[(p0, p1, p2)]]
                | bits[idx[(p0, p1, p3)]] << 1
                | bits[idx[(p0, p2, p3)]] << 2
                | bits[idx[(p1, p2, p3)]] << 3
            )
            if CLASS_BY_MASK[mask] is FourClass.H4:
                return False
        return True

    def h4_violations(self) -> list[tuple[int, int, int, int]]:
        """All 4-sets classified H4, for diagnostics."""
        return [
            quad
            for quad in combinations(range(self.n), 4)
            if CLASS_BY_MASK[self.four_set_mask(quad)] is FourClass.H4
        ]

    def in_constrained_class(self, classes: Iterable[FourClass]) -> bool:
        allowed = frozenset(classes)
        return all(
            CLASS_BY_MASK[self.four_set_mask(quad)] in allowed
            for quad in combinations(range(self.n), 4)
        )

    def substructure(self, pts: Sequence[int]) -> "Hypertournament":
        """Induced structure on the given points, relabelled 0..len(pts)-1 in sorted order."""
        pts = sorted(pts)
        if len(set(pts)) != len(pts):
            raise DomainError("substructure points must be distinct")
        orient = {}
        for i, j, k in combinations(range(len(pts)), 3):
            orient[(i, j, k)] = int(self.eval_r(pts[i], pts[j], pts[k]))
        return Hypertournament.from_orient(len(pts), orient)

    def qf_type(self, tup: Sequence[int], base: Iterable[int]) -> "QfType":
        return qf_type(self, tup, base)


@dataclass
class PartialHypertournament:
    """Partial orientation assignment; the input shape for completion solving."""

    n: int
    orient: dict[TripleKey, int]

    def __post_init__(self) -> None:
        for key, val in self.orient.items():
            check_triple_key(key, self.n)
            if val not in (0, 1):
                raise DomainError(f"orientation for {key} must be 0 or 1")

    @classmethod
    def empty(cls, n: int) -> "PartialHypertournament":
        return cls(n, {})

    @classmethod
    def of(cls, total: Hypertournament) -> "PartialHypertournament":
        return cls(total.n, {t: total.bits[r] for r, t in enumerate(triples(total.n))})

    def assign(self, key: TripleKey, val: int) -> None:
        check_triple_key(key, self.n)
        if key in self.orient and self.orient[key] != val:
            raise DomainError(f"triple {key} already assigned the opposite orientation")
        self.orient[key] = val

    def set_r(self, a: int, b: int, c: int, truth: bool = True) -> None:
        """Record the truth of R(a, b, c); stored against the sorted key."""
        if len({a, b, c}) != 3:
            raise DomainError("set_r needs distinct points")
        key = tuple(sorted((a, b, c)))
        pos = (key.index(a), key.index(b), key.index(c))
        self.assign(key, int(truth) ^ perm_parity(pos))

    def is_total(self) -> bool:
        return len(self.orient) == len(triples(self.n))

    def to_hypertournament(self) -> Hypertournament:
        if not self.is_total():
            raise DomainError(
                f"partial structure assigns {len(self.orient)} of {len(triples(self.n))} triples"
            )
        return Hypertournament.from_orient(self.n, self.orient)


@dataclass(frozen=True)
class LinearOrder:
    """A linear order on points, stored as positions[p] = rank of p."""

    positions: tuple[int, ...]

    def __post_init__(self) -> None:
        if sorted(self.positions) != list(range(len(self.positions))):
            raise DomainError("positions must be a permutation of 0..n-1")

    @classmethod
    def natural(cls, n: int) -> "LinearOrder":
        return cls(tuple(range(n)))

    @classmethod
    def from_sequence(cls, seq: Sequence[int]) -> "LinearOrder":
        """Order in which seq lists the points from least to greatest."""
        pos = [0] * len(seq)
        for rank, p in enumerate(seq):
            pos[p] = rank
        return cls(tuple(pos))

    @property
    def n(self) -> int:
        return len(self.positions)

    def sort(self, pts: Iterable[int]) -> list[int]:
        return sorted(pts, key=lambda p: self.positions[p])


@dataclass(frozen=True)
class Hypergraph3:
    """3-uniform hypergraph on points 0..n-1."""

    n: int
    edges: frozenset[frozenset[int]]

    def __post_init__(self) -> None:
        for e in self.edges:
            if len(e) != 3 or any(not 0 <= p < self.n for p in e):
                raise DomainError(f"bad hyperedge {set(e)!r}")


def encode(ht: Hypertournament, order: LinearOrder) -> Hypergraph3:
    """Hypergraph whose edges are the triples with R holding in order-increasing listing."""
    if order.n != ht.n:
        raise DomainError("order and structure have different point counts")
    edges = set()
    for key in triples(ht.n):
        a, b, c = order.sort(key)
        if ht.eval_r(a, b, c):
            edges.add(frozenset(key))
    return Hypergraph3(ht.n, frozenset(edges))


def decode(graph: Hypergraph3, order: LinearOrder) -> Hypertournament:
    """Inverse of `encode`: the unique structure whose encoding under order is graph."""
    if order.n != graph.n:
        raise DomainError("order and hypergraph have different point counts")
    partial = PartialHypertournament.empty(graph.n)
    for key in triples(graph.n):
        a, b, c = order.sort(key)
        partial.set_r(a, b, c, frozenset(key) in graph.edges)
    return partial.to_hypertournament()


def _mask_is_h4_by_conjunction(mask: int) -> bool:
    # Ground truth for the class table: some labelling (a,b,c,d) of the four
    # points satisfies R(a,b,c) & R(a,c,d) & R(a,d,b) & R(b,d,c).
    ht = Hypertournament(4, bytes((mask & 1, (mask >> 1) & 1, (mask >> 2) & 1, (mask >> 3) & 1)))
    for a, b, c, d in permutations(range(4)):
        if ht.eval_r(a, b, c) and ht.eval_r(a, c, d) and ht.eval_r(a, d, b) and ht.eval_r(b, d, c):
            return True
    return False


def _build_class_table() -> tuple[FourClass, ...]:
    table = []
    for mask in range(16):
        if bin(mask).count("1") & 1:
            cls = FourClass.O4
        elif _mask_is_h4_by_conjunction(mask):
            cls = FourClass.H4
        else:
            cls = FourClass.C4
        table.append(cls)
    return tuple(table)


CLASS_BY_MASK: tuple[FourClass, ...] = _build_class_table()

# The two orientation patterns of a 4-set that form H4; everything even is C4.
H4_MASKS: frozenset[int] = frozenset(
    m for m in range(16) if CLASS_BY_MASK[m] is FourClass.H4
)


Label = tuple[str, int]  # ('t', position in tuple) or ('b', point id)


@dataclass(frozen=True)
class QfType:
    """Quantifier-free type of an ordered tuple over a base set.

    Records the sign of every R-atom whose support meets the tuple and lies
    inside tuple + base.  Tuple entries appear as symbolic slots, so equality
    of QfType values is invariant under relabelling the tuple while fixing
    the base pointwise.  With quantifier elimination for the ambient theory
    this equality is the working stand-in for full type equality; that
    assumption is a modelling choice, not a theorem about finite structures.
    """

    length: int
    base: tuple[int, ...]
    atoms: frozenset[tuple[tuple[Label, Label, Label], bool]]

    def sign(self, support: tuple[Label, Label, Label]) -> bool:
        for sup, sgn in self.atoms:
            if sup == support:
                return sgn
        raise DomainError(f"no atom with support {support!r}")


def qf_type(ht: Hypertournament, tup: Sequence[int], base: Iterable[int]) -> QfType:
    """Quantifier-free type of tup over base inside ht."""
    tup = tuple(tup)
    if len(set(tup)) != len(tup):
        raise DomainError("tuple points must be distinct")
    base_set = sorted(set(base))
    label: dict[int, Label] = {}
    for i, p in enumerate(tup):
        label[p] = ("t", i)
    for p in base_set:
        label.setdefault(p, ("b", p))
    support_pts = sorted(set(tup) | set(base_set))
    tup_set = set(tup)
    atoms = set()
    for sup in combinations(support_pts, 3):
        if not any(p in tup_set for p in sup):
            continue
        ordered = sorted(sup, key=lambda p: label[p])
        key = (label[ordered[0]], label[ordered[1]], label[ordered[2]])
        atoms.add((key, ht.eval_r(*ordered)))
    return QfType(len(tup), tuple(base_set), frozenset(atoms))


def _pair_profile(ht: Hypertournament) -> list[list[int]]:
    # profile[p][q] = number of r with R(p, q, r); isomorphism-invariant.
    prof = [[0] * ht.n for _ in range(ht.n)]
    for p in range(ht.n):
        for q in range(ht.n):
            if p == q:
                continue
            prof[p][q] = sum(
                1 for r in range(ht.n) if r != p and r != q and ht.eval_r(p, q, r)
            )
    return prof


ISO_POINT_CAP = 8


def find_isomorphism(h1: Hypertournament, h2: Hypertournament) -> dict[int, int] | None:
    """Brute-force isomorphism search with pair-profile pruning, capped at 8 points."""
    if h1.n != h2.n:
        return None
    n = h1.n
    if n > ISO_POINT_CAP:
        raise BudgetError(f"isomorphism search is capped at {ISO_POINT_CAP} points, got {n}")
    if n < 3:
        return {i: i for i in range(n)}
    prof1, prof2 = _pair_profile(h1), _pair_profile(h2)
    sig1 = [tuple(sorted(prof1[p])) for p in range(n)]
    sig2 = [tuple(sorted(prof2[p])) for p in range(n)]
    if sorted(sig1) != sorted(sig2):
        return None

    mapping: list[int] = []
    used = [False] * n

    def extend(p: int) -> bool:
        if p == n:
            return True
        for q in range(n):
            if used[q] or sig1[p] != sig2[q]:
                continue
            ok = all(prof1[p][a] == prof2[q][mapping[a]] for a in range(p))
            if ok:
                for a, b in combinations(range(p), 2):
                    if h1.eval_r(a, b, p) != h2.eval_r(mapping[a], mapping[b], q):
                        ok = False
                        break
            if ok:
                mapping.append(q)
                used[q] = True
                if extend(p + 1):
                    return True
                mapping.pop()
                used[q] = False
        return False

    if extend(0):
        return {i: mapping[i] for i in range(n)}
    return None


# Orientation bits of the canonical H4 on points 0..3: the labelling
# (a,b,c,d) = (0,1,2,3) satisfies the defining conjunction.
H4_CANONICAL = Hypertournament.from_orient(
    4, {(0, 1, 2): 1, (0, 1, 3): 0, (0, 2, 3): 1, (1, 2, 3): 0}
)
