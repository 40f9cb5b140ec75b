"""Completion solver tests, cross-checked against the enumeration oracle."""

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from h4t.core import (
    BudgetError,
    DomainError,
    Hypertournament,
    PartialHypertournament,
    triples,
)
from h4t.solver import (
    ConstraintSet,
    Literal,
    count_completions,
    extend_by_point,
    solve,
)
from h4t.amalgam import OnePointType, enumerate_one_point_types, random_structure
from h4t.core import H4_FREE


def sop3_cycle_cs():
    lits = []
    for i, j in ((0, 1), (1, 2), (2, 0)):
        lits.append(Literal(f"x{i}", f"x{j}", 0))
        lits.append(Literal(f"x{i}", 1, f"x{j}"))
    return ConstraintSet(("x0", "x1", "x2"), tuple(lits))


def random_system(seed):
    """Small random instance: n points, some preassigned triples, some literals."""
    rng = random.Random(seed)
    n = rng.randrange(4, 7)
    nvars = rng.randrange(0, 3)
    base = PartialHypertournament.empty(n)
    for key in triples(n):
        if rng.random() < 0.3:
            base.orient[key] = rng.randrange(2)
    names = list(range(n)) + [f"v{i}" for i in range(nvars)]
    lits = []
    for _ in range(rng.randrange(0, 5)):
        a, b, c = rng.sample(names, 3)
        lits.append(Literal(a, b, c, rng.random() < 0.5))
    return base, ConstraintSet(tuple(f"v{i}" for i in range(nvars)), tuple(lits))


class TestSolve:
    def test_sop3_cycle_unsat(self):
        base = PartialHypertournament.empty(2)
        out = solve(base, sop3_cycle_cs())
        assert not out.sat

    def test_sop3_cycle_count_is_zero(self):
        base = PartialHypertournament.empty(2)
        assert count_completions(base, sop3_cycle_cs()) == 0

    def test_sop3_chain_sat_with_16_completions(self):
        base = PartialHypertournament.empty(2)
        lits = (
            Literal("x0", "x1", 0),
            Literal("x0", 1, "x1"),
            Literal("x1", "x2", 0),
            Literal("x1", 1, "x2"),
        )
        cs = ConstraintSet(("x0", "x1", "x2"), lits)
        out = solve(base, cs)
        assert out.sat
        assert count_completions(base, cs) == 16

    def test_empty_constraints_over_total_base(self):
        rng = random.Random(0)
        ht = random_structure(5, H4_FREE, rng)
        out = solve(PartialHypertournament.of(ht))
        assert out.sat and out.structure == ht

    def test_single_variable_no_triples(self):
        base = PartialHypertournament.empty(1)
        cs = ConstraintSet(("x",), ())
        assert count_completions(base, cs) == 1
        assert solve(base, cs).sat

    def test_contradictory_literals_report_conflict(self):
        base = PartialHypertournament.empty(3)
        cs = ConstraintSet((), (Literal(0, 1, 2), Literal(0, 2, 1)))
        out = solve(base, cs)
        assert not out.sat and out.conflict is not None

    def test_axiom_flip_pair_unsat(self):
        # R(x, a, b) and R(x, b, a) contradict by the reversal axiom alone.
        base = PartialHypertournament.empty(2)
        cs = ConstraintSet(("x",), (Literal("x", 0, 1), Literal("x", 1, 0)))
        out = solve(base, cs)
        assert not out.sat and "contradicts" in out.conflict

    def test_unresolved_name_is_domain_error(self):
        base = PartialHypertournament.empty(2)
        with pytest.raises(DomainError):
            solve(base, ConstraintSet((), (Literal("y", 0, 1),)))

    def test_unknown_point_is_domain_error(self):
        base = PartialHypertournament.empty(2)
        with pytest.raises(DomainError):
            solve(base, ConstraintSet((), (Literal(5, 0, 1),)))

    def test_determinism(self):
        base, cs = random_system(123)
        a = solve(base, cs)
        b = solve(base, cs)
        assert a.sat == b.sat
        if a.sat:
            assert a.structure == b.structure

    def test_model_agrees_with_base(self):
        rng = random.Random(7)
        ht = random_structure(5, H4_FREE, rng)
        base = PartialHypertournament(5, {k: ht.bits[i] for i, k in enumerate(triples(5)) if i % 2 == 0})
        out = solve(base)
        assert out.sat
        for key, val in base.orient.items():
            idx = list(triples(5)).index(key)
            assert out.structure.bits[idx] == val


class TestOracleAgreement:
    @pytest.mark.parametrize("seed", range(60))
    def test_solve_iff_positive_count(self, seed):
        base, cs = random_system(seed)
        sat = solve(base, cs).sat
        assert sat == (count_completions(base, cs, cap=1) > 0)

    @given(st.integers(0, 10**9))
    @settings(max_examples=40, deadline=None)
    def test_monotonicity_adding_literal(self, seed):
        base, cs = random_system(seed)
        if solve(base, cs).sat:
            return  # adding literals to SAT instances proves nothing here
        rng = random.Random(seed ^ 0xDEAD)
        names = list(range(base.n)) + list(cs.variables)
        extra = Literal(*rng.sample(names, 3), rng.random() < 0.5)
        grown = ConstraintSet(cs.variables, cs.literals + (extra,))
        assert not solve(base, grown).sat

    def test_cap_truncates(self):
        base = PartialHypertournament.empty(4)
        total = count_completions(base)
        capped = count_completions(base, cap=3)
        assert capped == 3 and total > 3

    def test_free_triple_budget(self):
        base = PartialHypertournament.empty(8)  # 56 free triples
        with pytest.raises(BudgetError):
            count_completions(base)


class TestExtendByPoint:
    def test_two_point_base_always_extends(self):
        ht = Hypertournament(2, b"")
        for bits in ((0,), (1,)):
            t = OnePointType((0, 1), bits)
            assert extend_by_point(ht, t) is not None

    def test_completing_h4_rejected(self):
        # three points of the canonical H4, plus the type that rebuilds it
        from h4t.core import H4_CANONICAL

        base = H4_CANONICAL.substructure([0, 1, 2])
        t = OnePointType(
            (0, 1, 2),
            tuple(int(H4_CANONICAL.eval_r(3, a, b)) for a, b in ((0, 1), (0, 2), (1, 2))),
        )
        assert extend_by_point(base, t) is None

    @pytest.mark.parametrize("seed", range(5))
    def test_sat_type_count_matches_enumeration(self, seed):
        rng = random.Random(seed)
        ht = random_structure(5, H4_FREE, rng)
        pts = tuple(range(5))
        ok = 0
        for mask in range(1 << 10):
            t = OnePointType(pts, tuple((mask >> i) & 1 for i in range(10)))
            if extend_by_point(ht, t) is not None:
                ok += 1
        assert ok == len(enumerate_one_point_types(ht, pts, H4_FREE))

    def test_partial_type_rejected(self):
        ht = Hypertournament(3, bytes([1]))
        with pytest.raises(DomainError):
            extend_by_point(ht, OnePointType((0, 1), (1,)))
