"""Completion solving for partial 3-hypertournaments under signed R-literals.

`solve` decides whether a partial structure plus a set of literals extends to
a total H4-free structure, by depth-first backtracking over the unset triples
in lexicographic key order (PLUS tried first), with forced-value propagation
on 4-sets.  `count_completions` is the independent brute-force oracle: a
plain enumeration in reverse key order whose only pruning is a violated
constraint, so the two can cross-check each other.

Every SAT answer is re-verified against the H4-freeness scan and the literal
list before it is returned.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import TYPE_CHECKING, Iterable, Sequence

from .core import (
    CLASS_BY_MASK,
    BudgetError,
    DomainError,
    FourClass,
    Hypertournament,
    PartialHypertournament,
    perm_parity,
    triple_index,
    triples,
)

if TYPE_CHECKING:  # pragma: no cover
    from .amalgam import OnePointType

Name = int | str  # point id or declared variable name


@dataclass(frozen=True)
class Literal:
    """R(a, b, c) holds (sign True) or fails (sign False) in the written order."""

    a: Name
    b: Name
    c: Name
    sign: bool = True

    def __post_init__(self) -> None:
        if len({self.a, self.b, self.c}) != 3:
            raise DomainError(f"literal arguments must be distinct, got {self}")

    def args(self) -> tuple[Name, Name, Name]:
        return (self.a, self.b, self.c)


@dataclass(frozen=True)
class ConstraintSet:
    """Fresh variables plus signed literals over base points and variables."""

    variables: tuple[str, ...] = ()
    literals: tuple[Literal, ...] = ()

    def __post_init__(self) -> None:
        if len(set(self.variables)) != len(self.variables):
            raise DomainError("duplicate variable names")

    @classmethod
    def build(cls, variables: Iterable[str] = (), literals: Iterable[Literal] = ()) -> "ConstraintSet":
        return cls(tuple(variables), tuple(literals))


@dataclass(frozen=True)
class SolveOutcome:
    sat: bool
    structure: Hypertournament | None = None
    assignment: dict[str, int] = field(default_factory=dict)
    conflict: str | None = None

    def require_model(self) -> Hypertournament:
        if self.structure is None:
            raise DomainError(f"outcome is UNSAT ({self.conflict or 'search exhausted'})")
        return self.structure


_H4_MASKS = frozenset(m for m in range(16) if CLASS_BY_MASK[m] is FourClass.H4)


@lru_cache(maxsize=32)
def _fourset_tables(n: int):
    """For each 4-set its 4 triple ranks; for each triple its incident 4-sets."""
    idx = triple_index(n)
    fs_ranks: list[tuple[int, int, int, int]] = []
    fs_of: list[list[int]] = [[] for _ in range(len(idx))]
    for p0, p1, p2, p3 in combinations(range(n), 4):
        ranks = (
            idx[(p0, p1, p2)],
            idx[(p0, p1, p3)],
            idx[(p0, p2, p3)],
            idx[(p1, p2, p3)],
        )
        fid = len(fs_ranks)
        fs_ranks.append(ranks)
        for r in ranks:
            fs_of[r].append(fid)
    return tuple(fs_ranks), tuple(tuple(x) for x in fs_of)


def _normalize(
    lit: Literal, var_ids: dict[str, int], n_total: int
) -> tuple[int, int]:
    """Resolve names and reduce the literal to (triple rank, required bit)."""
    pts = []
    for name in lit.args():
        if isinstance(name, str):
            if name not in var_ids:
                raise DomainError(f"literal references undeclared variable {name!r}")
            pts.append(var_ids[name])
        else:
            if not 0 <= name < n_total - len(var_ids):
                raise DomainError(f"literal references unknown point {name}")
            pts.append(name)
    if len(set(pts)) != 3:
        raise DomainError(f"literal {lit} collapses to repeated points")
    key = tuple(sorted(pts))
    pos = (key.index(pts[0]), key.index(pts[1]), key.index(pts[2]))
    bit = int(lit.sign) ^ perm_parity(pos)
    return triple_index(n_total)[key], bit


class _Search:
    """Trail-based DFS with forced-value propagation over 4-sets."""

    def __init__(self, n: int, state: list[int]):
        self.n = n
        self.state = state
        self.fs_ranks, self.fs_of = _fourset_tables(n)
        self.unset = [0] * len(self.fs_ranks)
        for fid, ranks in enumerate(self.fs_ranks):
            self.unset[fid] = sum(1 for r in ranks if state[r] < 0)
        self.trail: list[int] = []

    def _mask_with(self, ranks, r_free: int | None = None, v_free: int = 0) -> int:
        m = 0
        for pos, r in enumerate(ranks):
            b = v_free if r == r_free else self.state[r]
            m |= (b & 1) << pos
        return m

    def assign(self, rank: int, value: int) -> bool:
        """Assign and propagate; False on conflict. Appends to the trail."""
        queue = [(rank, value)]
        while queue:
            r, v = queue.pop()
            cur = self.state[r]
            if cur >= 0:
                if cur != v:
                    return False
                continue
            self.state[r] = v
            self.trail.append(r)
            for fid in self.fs_of[r]:
                self.unset[fid] -= 1
                left = self.unset[fid]
                ranks = self.fs_ranks[fid]
                if left == 0:
                    if self._mask_with(ranks) in _H4_MASKS:
                        return False
                elif left == 1:
                    free = next(rr for rr in ranks if self.state[rr] < 0)
                    bad0 = self._mask_with(ranks, free, 0) in _H4_MASKS
                    bad1 = self._mask_with(ranks, free, 1) in _H4_MASKS
                    if bad0 and bad1:
                        return False
                    if bad0:
                        queue.append((free, 1))
                    elif bad1:
                        queue.append((free, 0))
        return True

    def undo_to(self, mark: int) -> None:
        while len(self.trail) > mark:
            r = self.trail.pop()
            self.state[r] = -1
            for fid in self.fs_of[r]:
                self.unset[fid] += 1

    def run(self) -> bool:
        """Find the first total assignment in lexicographic PLUS-first order.

        When a decision at rank r is taken, every rank below r is already
        assigned, so propagation from r only ever fills ranks above r and
        backtracking can resume its scan at r.
        """
        n_keys = len(self.state)
        # decision stack: (rank, value still to try or None, trail mark)
        stack: list[tuple[int, int | None, int]] = []
        cursor = 0
        while True:
            while cursor < n_keys and self.state[cursor] >= 0:
                cursor += 1
            if cursor == n_keys:
                return True
            mark = len(self.trail)
            if self.assign(cursor, 1):
                stack.append((cursor, 0, mark))
                continue
            self.undo_to(mark)
            if self.assign(cursor, 0):
                stack.append((cursor, None, mark))
                continue
            self.undo_to(mark)
            while True:  # unwind to the most recent decision with an untried value
                if not stack:
                    return False
                rank, pending, mark = stack.pop()
                self.undo_to(mark)
                if pending is None:
                    continue
                if self.assign(rank, pending):
                    stack.append((rank, None, mark))
                    cursor = rank
                    break
                self.undo_to(mark)


def _prepare_state(
    base: PartialHypertournament, cs: ConstraintSet
) -> tuple[int, list[int], dict[str, int], str | None]:
    n_total = base.n + len(cs.variables)
    var_ids = {name: base.n + i for i, name in enumerate(cs.variables)}
    idx = triple_index(n_total)
    state = [-1] * len(idx)
    for key, val in base.orient.items():
        state[idx[key]] = val
    for lit in cs.literals:
        rank, bit = _normalize(lit, var_ids, n_total)
        if state[rank] >= 0 and state[rank] != bit:
            return n_total, state, var_ids, (
                f"literal {lit} contradicts an earlier literal or the base assignment"
            )
        state[rank] = bit
    return n_total, state, var_ids, None


def solve(base: PartialHypertournament, cs: ConstraintSet = ConstraintSet()) -> SolveOutcome:
    """Extend base to a total H4-free structure satisfying every literal.

    Deterministic: the model returned is the lexicographically first
    solution in triple-key order with PLUS preferred.
    """
    n_total, state, var_ids, conflict = _prepare_state(base, cs)
    if conflict:
        return SolveOutcome(False, conflict=conflict)
    pre = [(r, v) for r, v in enumerate(state) if v >= 0]
    for r, _ in pre:
        state[r] = -1
    search = _Search(n_total, state)
    # Seed propagation from everything already assigned.
    ok = True
    for r, v in pre:
        if not search.assign(r, v):
            ok = False
            break
    if ok:
        ok = search.run()
    if not ok:
        return SolveOutcome(False, conflict="no H4-free completion exists")
    model = Hypertournament(n_total, bytes(max(v, 0) for v in state))
    _verify_model(model, base, cs, var_ids)
    return SolveOutcome(True, structure=model, assignment=dict(var_ids))


def _verify_model(
    model: Hypertournament,
    base: PartialHypertournament,
    cs: ConstraintSet,
    var_ids: dict[str, int],
) -> None:
    # Soundness check on every return; failures here mean a solver bug.
    if not model.is_h4_free():
        raise AssertionError("solver produced a structure containing H4")
    idx = triple_index(model.n)
    for key, val in base.orient.items():
        if model.bits[idx[key]] != val:
            raise AssertionError("solver changed a base triple")
    for lit in cs.literals:
        pts = [var_ids[x] if isinstance(x, str) else x for x in lit.args()]
        if model.eval_r(*pts) != lit.sign:
            raise AssertionError(f"model violates literal {lit}")


FREE_TRIPLE_CAP = 25


def count_completions(
    base: PartialHypertournament, cs: ConstraintSet = ConstraintSet(), cap: int | None = None
) -> int:
    """Exact number of H4-free completions satisfying the literals.

    Independent of `solve`: plain recursive enumeration over the free
    triples in reverse lexicographic order, pruning only on a directly
    violated 4-set.  Truncates at cap when given.
    """
    n_total, state, var_ids, conflict = _prepare_state(base, cs)
    if conflict:
        return 0
    free = [r for r, v in enumerate(state) if v < 0]
    if len(free) > FREE_TRIPLE_CAP:
        raise BudgetError(
            f"{len(free)} free triples exceeds the enumeration cap of {FREE_TRIPLE_CAP}"
        )
    free.reverse()
    fs_ranks, fs_of = _fourset_tables(n_total)
    unset = [0] * len(fs_ranks)
    for fid, ranks in enumerate(fs_ranks):
        unset[fid] = sum(1 for r in ranks if state[r] < 0)

    # Pre-assigned triples may already complete forbidden 4-sets.
    for fid, ranks in enumerate(fs_ranks):
        if unset[fid] == 0:
            m = 0
            for pos, r in enumerate(ranks):
                m |= state[r] << pos
            if m in _H4_MASKS:
                return 0

    count = 0

    def rec(i: int) -> bool:
        """Returns False when the cap has been reached."""
        nonlocal count
        if i == len(free):
            count += 1
            return cap is None or count < cap
        r = free[i]
        for v in (0, 1):
            state[r] = v
            ok = True
            for fid in fs_of[r]:
                unset[fid] -= 1
            for fid in fs_of[r]:
                if unset[fid] == 0:
                    m = 0
                    for pos, rr in enumerate(fs_ranks[fid]):
                        m |= state[rr] << pos
                    if m in _H4_MASKS:
                        ok = False
                        break
            if ok and not rec(i + 1):
                for fid in fs_of[r]:
                    unset[fid] += 1
                state[r] = -1
                return False
            for fid in fs_of[r]:
                unset[fid] += 1
        state[r] = -1
        return True

    rec(0)
    return count


def extend_by_point(ht: Hypertournament, t: "OnePointType") -> Hypertournament | None:
    """Unique one-point extension given a total type; None if it is not H4-free."""
    if tuple(t.base_points) != tuple(range(ht.n)):
        raise DomainError("extend_by_point needs a type over all points of the structure")
    part = PartialHypertournament.empty(ht.n + 1)
    for key in triples(ht.n):
        part.orient[key] = ht.bits[triple_index(ht.n)[key]]
    x = ht.n
    for a, b in combinations(range(ht.n), 2):
        part.set_r(x, a, b, t.truth(a, b))
    ext = part.to_hypertournament()
    return ext if ext.is_h4_free() else None
