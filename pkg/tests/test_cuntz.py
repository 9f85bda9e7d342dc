import itertools
import random
from fractions import Fraction

import pytest

from starinv.cuntz import (
    INF,
    CuSeq,
    FiniteCuTable,
    MorphismCode,
    NBarPower,
    check_equivalence_pair,
    check_morphism_code,
    comparison_holds,
    constant_seq,
    cu_equivalent,
    cu_of_fd_algebra,
    cuseq_add,
    element_map_code,
    emit_cu,
    eta,
    identity_code,
    nbar_mult,
    parse_cu,
    radius_of_comparison,
    seq_approx,
    seq_le,
    seq_ll,
    validate_cu_presentation,
    w_completion,
)
from starinv.presentations import FDAlgebra, ValidationError

import numpy as np

import oracles
from conftest import fixture_text


def saturating_chain(n, unit=None):
    plus = tuple(tuple(min(i + j, n - 1) for j in range(n)) for i in range(n))
    leq = frozenset((i, j) for i in range(n) for j in range(n) if i <= j)
    return FiniteCuTable(n, plus, leq, leq, unit)


# ---------------------------------------------------------------------------
# validation


def test_validate_nbar_passes():
    assert validate_cu_presentation(NBarPower(1, (1,))).passed


def test_validate_transitivity_violation():
    # 0 << 1, 1 << 2 but not 0 << 2
    n = 3
    plus = tuple(tuple(min(i + j, 2) for j in range(n)) for i in range(n))
    leq = frozenset((i, j) for i in range(n) for j in range(n) if i <= j)
    ll = frozenset({(0, 0), (1, 1), (2, 2), (0, 1), (1, 2)})
    rep = validate_cu_presentation(FiniteCuTable(n, plus, leq, ll))
    assert not rep.axioms["compact_relation"].ok
    assert rep.axioms["compact_relation"].witness == (0, 1, 2)


def test_validate_noncompact_finite_fails():
    # an element not compactly below itself has a finite lower set with a
    # maximal element, so the predecessor axiom fails
    n = 2
    plus = tuple(tuple(min(i + j, 1) for j in range(n)) for i in range(n))
    leq = frozenset({(0, 0), (1, 1), (0, 1)})
    ll = frozenset({(0, 0), (0, 1)})
    rep = validate_cu_presentation(FiniteCuTable(n, plus, leq, ll))
    assert not rep.axioms["predecessors"].ok


def test_validate_reports_realizability():
    n = 2
    plus = tuple(tuple(min(i + j, 1) for j in range(n)) for i in range(n))
    leq = frozenset({(0, 0), (1, 1), (0, 1)})
    ll = frozenset({(0, 0), (1, 1)})  # compact containment finer than order
    rep = validate_cu_presentation(FiniteCuTable(n, plus, leq, ll))
    assert rep.passed  # the four axioms hold
    assert not rep.realizable  # but no sup-dense set looks like this


def test_unknown_verdict_for_unrealizable_pair():
    # distinct non-realizable tables: the search exhausts and nothing is
    # certified, so the honest verdict is UNKNOWN
    def chain_with_identity_ll(n):
        plus = tuple(tuple(min(i + j, n - 1) for j in range(n)) for i in range(n))
        leq = frozenset((i, j) for i in range(n) for j in range(n) if i <= j)
        ll = frozenset((i, i) for i in range(n))
        return FiniteCuTable(n, plus, leq, ll)

    d1 = chain_with_identity_ll(2)
    d2 = chain_with_identity_ll(3)
    assert validate_cu_presentation(d1).passed
    v = cu_equivalent(d1, d2)
    assert v.kind == "UNKNOWN"


# ---------------------------------------------------------------------------
# canonical sequences


def test_eta_compact_constant():
    d = saturating_chain(4)
    s = eta(d, 2)
    assert s.prefix == (2,) and s.entry(7) == 2


def test_eta_infinite_ramp():
    d = NBarPower(1)
    s = eta(d, (INF,))
    assert [s.entry(i) for i in range(4)] == [(0,), (1,), (2,), (3,)]
    assert s.sup() == (INF,)


def test_eta_mixed_coordinates():
    d = NBarPower(2)
    s = eta(d, (INF, 2))
    assert [s.entry(i) for i in range(3)] == [(0, 2), (1, 2), (2, 2)]


def test_cuseq_validation():
    d = NBarPower(1)
    with pytest.raises(ValidationError):
        CuSeq(d, ())  # empty prefix
    with pytest.raises(ValidationError):
        CuSeq(d, ((INF,),), (0,))  # infinite entry
    with pytest.raises(ValidationError):
        CuSeq(d, ((3,), (1,)), (0,))  # not increasing


# ---------------------------------------------------------------------------
# sequence relations


def test_seq_reflexive():
    d = NBarPower(1)
    s = CuSeq(d, ((1,),), (1,))
    assert seq_approx(s, s)


def test_seq_interleaving_ramps():
    d = NBarPower(1)
    s = CuSeq(d, ((1,),), (1,))  # 1,2,3,...
    t = CuSeq(d, ((2,),), (2,))  # 2,4,6,...
    assert seq_approx(s, t)


def test_seq_constant_below_ramp():
    d = NBarPower(1)
    ramp = CuSeq(d, ((0,),), (1,))
    c3 = constant_seq(d, (3,))
    assert seq_ll(c3, ramp)
    assert not seq_ll(ramp, c3)
    assert seq_le(ramp, ramp)


def test_seq_relations_match_bounded_quantifiers():
    rng = random.Random(9)
    pres_pool = [NBarPower(1), NBarPower(2)] + oracles.random_cu_tables(4, 5, seed=1)
    for pres in pres_pool:
        seqs = [oracles.random_cu_seq(pres, rng) for _ in range(8)]
        for s in seqs:
            for t in seqs:
                assert seq_le(s, t) == oracles.seq_le_bounded(s, t), (s, t)
                assert seq_ll(s, t) == oracles.seq_ll_bounded(s, t), (s, t)
                assert seq_approx(s, t) == oracles.seq_approx_bounded(s, t), (s, t)


def test_seq_incompatible_presentations():
    with pytest.raises(ValidationError):
        seq_le(eta(NBarPower(1), (1,)), eta(NBarPower(2), (1, 1)))


# ---------------------------------------------------------------------------
# completions


def test_completion_of_compact_table_is_the_table():
    for d in oracles.random_cu_tables(10, 6, seed=2):
        w = w_completion(d)
        assert w.isomorphic_to_base()
        assert w.as_presentation().same_carrier(d)


def test_completion_of_nbar_adds_the_suprema():
    w = w_completion(NBarPower(1), depth=4)
    keys = {c.key for c in w.classes()}
    assert (INF,) in keys and (0,) in keys
    rng = random.Random(3)
    # every strictly increasing sequence lands in the infinity class
    for _ in range(5):
        start = rng.randint(0, 3)
        s = CuSeq(NBarPower(1), ((start,),), (rng.randint(1, 2),))
        assert w.class_of(s).key == (INF,)


def test_completion_rejects_invalid():
    n = 2
    plus = tuple(tuple(min(i + j, 1) for j in range(n)) for i in range(n))
    leq = frozenset({(0, 0), (1, 1), (0, 1)})
    ll = frozenset({(0, 0), (0, 1)})
    with pytest.raises(ValidationError):
        w_completion(FiniteCuTable(n, plus, leq, ll))


def test_lemma_suite_small():
    # compact containment / order / addition transfer between a presentation
    # and its completion through the canonical sequences
    rng = random.Random(12)
    tables = oracles.random_cu_tables(12, 5, seed=5)
    for d in tables:
        w = w_completion(d)
        for a in d.elements():
            for b in d.elements():
                ea, eb = eta(d, a), eta(d, b)
                assert seq_ll(ea, eb) == w.ll(w.class_of(ea), w.class_of(eb))
                assert seq_le(ea, eb) == w.le(w.class_of(ea), w.class_of(eb))
                assert d.ll_rel(a, b) == w.ll(w.class_of(ea), w.class_of(eb))
                assert d.le(a, b) == w.le(w.class_of(ea), w.class_of(eb))
                c = d.add(a, b)
                assert w.add(w.class_of(ea), w.class_of(eb)) == w.class_of(eta(d, c))
    for k in (1, 2):
        d = NBarPower(k)
        w = w_completion(d, depth=3)
        seqs = [oracles.random_cu_seq(d, rng) for _ in range(6)]
        for s in seqs:
            for t in seqs:
                assert seq_ll(s, t) == w.ll(w.class_of(s), w.class_of(t))
                assert seq_le(s, t) == w.le(w.class_of(s), w.class_of(t))
                both = cuseq_add(s, t)
                assert w.class_of(both) == w.add(w.class_of(s), w.class_of(t))


# ---------------------------------------------------------------------------
# morphism codes


def test_identity_code_passes():
    d = saturating_chain(4)
    assert check_morphism_code(d, d, identity_code(d)).passed
    nb = NBarPower(2)
    assert check_morphism_code(nb, nb, identity_code(nb)).passed


def test_doubling_code_passes():
    nb = NBarPower(1)
    dbl = MorphismCode(nb, nb, lambda a: eta(nb, nbar_mult(2, a)), "doubling")
    assert check_morphism_code(nb, nb, dbl).passed


def test_nonadditive_code_fails():
    d = saturating_chain(3)
    # monotone but not additive: 1+1 collapses under the map
    code = element_map_code(d, d, [0, 1, 1], "squash")
    report = check_morphism_code(d, d, code)
    assert report.conditions["preserves_order"].ok
    assert not report.conditions["additive"].ok
    assert report.conditions["additive"].witness == (1, 1)


# ---------------------------------------------------------------------------
# the equivalence relation


def test_equivalent_reflexive():
    d = saturating_chain(4, unit=1)
    v = cu_equivalent(d, d)
    assert v.kind == "EQUIVALENT"
    a1, a2 = v.codes
    assert check_morphism_code(d, d, a1).passed
    assert check_equivalence_pair(d, d, a1, a2).ok


def test_equivalent_is_unit_blind():
    c2 = cu_of_fd_algebra(FDAlgebra((2,)))
    c3 = cu_of_fd_algebra(FDAlgebra((3,)))
    assert c2.unit != c3.unit
    v = cu_equivalent(c2, c3)
    assert v.kind == "EQUIVALENT"
    assert cu_equivalent(c2, c3, pointed=True).kind == "INEQUIVALENT"


def test_inequivalent_totality():
    v = cu_equivalent(NBarPower(1, (1,)), NBarPower(2, (2, 3)))
    assert v.kind == "INEQUIVALENT"
    assert "totally ordered" in v.invariant


def test_inequivalent_mixed_realizations():
    v = cu_equivalent(saturating_chain(3, unit=1), NBarPower(1, (1,)))
    assert v.kind == "INEQUIVALENT"
    assert "finite vs infinite" in v.invariant


def test_equivalence_matches_brute_isomorphism():
    pool = oracles.random_cu_tables(14, 4, seed=8)
    for d1 in pool:
        for d2 in pool:
            verdict = cu_equivalent(d1, d2)
            assert verdict.kind != "UNKNOWN"
            expected = oracles.tables_isomorphic_brute(d1, d2)
            assert (verdict.kind == "EQUIVALENT") == expected, (d1, d2, verdict)
            if verdict.kind == "EQUIVALENT":
                a1, a2 = verdict.codes
                assert check_morphism_code(d1, d2, a1).passed
                assert check_morphism_code(d2, d1, a2).passed
                assert check_equivalence_pair(d1, d2, a1, a2).ok


# ---------------------------------------------------------------------------
# Cuntz semigroups of algebras


def test_cu_of_fd_algebra_shapes():
    assert cu_of_fd_algebra(FDAlgebra((2,))) == NBarPower(1, (2,))
    assert cu_of_fd_algebra(FDAlgebra((2, 3))) == NBarPower(2, (2, 3))
    assert cu_of_fd_algebra(FDAlgebra((1,))) == NBarPower(1, (1,))


def test_cuntz_subequivalence_is_rank_comparison():
    # a is below b exactly when a conjugation carries b onto a, which the
    # spectral construction achieves iff rank a <= rank b per block
    rng = np.random.default_rng(10)
    for n in (2, 3):
        for _ in range(6):
            ra, rb = rng.integers(0, n + 1), rng.integers(0, n + 1)
            za = rng.standard_normal((n, int(ra))) + 1j * rng.standard_normal((n, int(ra)))
            zb = rng.standard_normal((n, int(rb))) + 1j * rng.standard_normal((n, int(rb)))
            a = za @ za.conj().T
            b = zb @ zb.conj().T
            v, gap = oracles.cuntz_subequivalence_witness([a], [b])
            if ra <= rb:
                assert v is not None
            else:
                assert v is None and gap > 1e-8


def test_round_trip_same_block_counts():
    a1 = FDAlgebra((2, 3))
    a2 = FDAlgebra((5, 1))
    a3 = FDAlgebra((4,))
    assert cu_equivalent(cu_of_fd_algebra(a1), cu_of_fd_algebra(a2)).kind == "EQUIVALENT"
    assert cu_equivalent(cu_of_fd_algebra(a1), cu_of_fd_algebra(a3)).kind == "INEQUIVALENT"


# ---------------------------------------------------------------------------
# comparison and radius


def test_comparison_nbar_examples():
    nb = NBarPower(1, (1,))
    assert comparison_holds(nb, 1, 1)
    assert comparison_holds(nb, 0, 1)


def test_comparison_nbar_matches_brute_force():
    # bounded brute force over {0..9, inf}^2 per coordinate
    vals = list(range(10)) + [INF]
    for unit in [(1,), (3,), (2, 3)]:
        nb = NBarPower(len(unit), unit)
        for m, n in [(0, 1), (1, 1), (1, 2), (3, 2), (2, 5)]:
            brute = True
            for x in itertools.product(vals, repeat=len(unit)):
                for y in itertools.product(vals, repeat=len(unit)):
                    lhs = tuple(
                        (n + 1) * xi + m * u if (xi != INF and u != INF or m == 0) else INF
                        for xi, u in zip(x, unit)
                    )
                    lhs = tuple((n + 1) * xi + (m * u if m else 0) for xi, u in zip(x, unit))
                    rhs = tuple(n * yi for yi in y)
                    if all(l <= r for l, r in zip(lhs, rhs)) and not all(
                        a <= b for a, b in zip(x, y)
                    ):
                        brute = False
            assert comparison_holds(nb, m, n) == brute


def test_comparison_requires_unit():
    with pytest.raises(ValidationError):
        comparison_holds(NBarPower(1), 1, 1)


def test_radius_of_nbar_is_zero():
    assert radius_of_comparison(NBarPower(1, (1,)), max_n=64).value == 0
    assert radius_of_comparison(NBarPower(2, (2, 3)), max_n=64).value == 0


def test_rc_perf_fixture_locked():
    perf = parse_cu(fixture_text("rc_perf.cup"))
    assert validate_cu_presentation(perf).passed
    result = radius_of_comparison(perf, max_n=20)
    assert result.value == Fraction(2)  # regression-locked
    assert result.exact_in_range
    lo, hi = result.bracket
    assert lo < hi and hi - lo <= Fraction(1, 4)


def test_rc_perf_sampled_pairs_match_exhaustive():
    perf = parse_cu(fixture_text("rc_perf.cup"))

    def brute(m, n):
        for x in range(perf.size):
            lhs = perf.mult(n + 1, x)
            if m:
                lhs = perf.add(lhs, perf.mult(m, perf.unit))
            for y in range(perf.size):
                if perf.le(lhs, perf.mult(n, y)) and not perf.le(x, y):
                    return False
        return True

    for m, n in [(0, 1), (1, 1), (2, 1), (3, 1), (1, 2), (3, 2), (5, 2), (4, 3)]:
        assert comparison_holds(perf, m, n) == brute(m, n)


def test_radius_agrees_on_completions():
    perf = parse_cu(fixture_text("rc_perf.cup"))
    base = radius_of_comparison(perf, max_n=20)
    for depth in (4, 8):
        completed = w_completion(perf, depth=depth).as_presentation()
        again = radius_of_comparison(completed, max_n=20)
        assert again.value == base.value


def test_radius_infinite_bound():
    # order with a single incomparability that every ratio trips over:
    # two atoms where neither comparison can hold
    n = 3
    plus = tuple(tuple(min(i + j, n - 1) for j in range(n)) for i in range(n))
    leq = {(i, i) for i in range(n)} | {(0, 1), (0, 2), (1, 2)}
    d = FiniteCuTable(n, plus, frozenset(leq), frozenset(leq), unit=0)
    assert validate_cu_presentation(d).passed
    r = radius_of_comparison(d, max_n=6, m_cap=6)
    if r.value is None:
        assert not r.exact_in_range


# ---------------------------------------------------------------------------
# grammar


def test_cup_round_trip():
    for name in ("nbar1.cup", "nbar2.cup", "rc_perf.cup"):
        normal = emit_cu(parse_cu(fixture_text(name)))
        assert emit_cu(parse_cu(normal)) == normal


def test_cup_parse_errors():
    with pytest.raises(Exception):
        parse_cu("elements: 2\nplus: 0 1 1")  # wrong count
    with pytest.raises(Exception):
        parse_cu("unit: 1")  # no realization tag
