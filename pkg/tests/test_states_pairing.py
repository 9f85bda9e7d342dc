import itertools
import random
from fractions import Fraction

import pytest

from starinv.exact import frac_rank
from starinv.ktheory import OrderedGroupWithUnit, ordered_k0
from starinv.presentations import FDAlgebra, ValidationError
from starinv.states_pairing import (
    GroupState,
    Polytope,
    UnboundedStateSpaceError,
    elliott_invariant,
    elliott_isomorphic,
    emit_elliott,
    nearest_point,
    pairing,
    state_space,
    trace_simplex,
)

import oracles


def _frac_vec(*xs):
    return tuple(Fraction(x) for x in xs)


# ---------------------------------------------------------------------------
# trace simplex and pairing


def test_trace_simplex_factor_is_point():
    t = trace_simplex(FDAlgebra((2,)))
    assert t.vertices == ((Fraction(1),),)
    assert t.simplex


def test_trace_simplex_two_blocks_is_segment():
    t = trace_simplex(FDAlgebra((2, 3)))
    assert set(t.vertices) == {_frac_vec(1, 0), _frac_vec(0, 1)}


def test_trace_simplex_commutative_three_characters():
    t = trace_simplex(FDAlgebra((1, 1, 1)))
    assert len(t.vertices) == 3 and t.simplex


def test_pairing_midpoint():
    phi = pairing(FDAlgebra((2, 3)), (Fraction(1, 2), Fraction(1, 2)))
    assert phi.values == (Fraction(1, 4), Fraction(1, 6))
    assert phi((2, 3)) == 1


def test_pairing_factor():
    phi = pairing(FDAlgebra((2,)), (1,))
    assert phi.values == (Fraction(1, 2),)
    assert phi((2,)) == 1


def test_pairing_vertex_supported_on_block():
    phi = pairing(FDAlgebra((2, 3)), (1, 0))
    assert phi.values == (Fraction(1, 2), Fraction(0))


def test_pairing_outside_simplex():
    with pytest.raises(ValidationError):
        pairing(FDAlgebra((2, 3)), (Fraction(3, 4), Fraction(1, 2)))
    with pytest.raises(ValidationError):
        pairing(FDAlgebra((2, 3)), (Fraction(-1, 2), Fraction(3, 2)))


def test_pairing_is_affine():
    a = FDAlgebra((2, 3, 4))
    rng = random.Random(0)
    for _ in range(20):
        w1 = _random_barycentric(3, rng)
        w2 = _random_barycentric(3, rng)
        t = Fraction(rng.randint(0, 4), 4)
        mix = tuple(t * x + (1 - t) * y for x, y in zip(w1, w2))
        left = pairing(a, mix).values
        right = tuple(
            t * x + (1 - t) * y
            for x, y in zip(pairing(a, w1).values, pairing(a, w2).values)
        )
        assert left == right


def _random_barycentric(k, rng):
    cuts = sorted(Fraction(rng.randint(0, 12), 12) for _ in range(k - 1))
    points = [Fraction(0)] + cuts + [Fraction(1)]
    return tuple(b - a for a, b in zip(points, points[1:]))


# ---------------------------------------------------------------------------
# state spaces


def test_state_space_rank_one():
    s = state_space(OrderedGroupWithUnit(1, ((1,),), (3,)))
    assert s.vertices == ((Fraction(1, 3),),)


def test_state_space_segment():
    s = state_space(ordered_k0(FDAlgebra((2, 3))))
    assert set(s.vertices) == {
        (Fraction(1, 2), Fraction(0)),
        (Fraction(0), Fraction(1, 3)),
    }


def test_state_space_unbounded():
    with pytest.raises(UnboundedStateSpaceError):
        state_space(OrderedGroupWithUnit(2, ((1, 0), (0, 1)), (0, 1)))


def test_state_space_vertices_are_states_and_extreme():
    for blocks in [(2,), (2, 3), (1, 2, 3), (4, 1)]:
        g = ordered_k0(FDAlgebra(blocks))
        s = state_space(g)
        for v in s.vertices:
            GroupState(v).validate_on(g)
            # extreme: the tight constraints pin the point (rank = ambient)
            tight = [gen for gen in g.cone if sum(a * b for a, b in zip(v, gen)) == 0]
            tight.append(g.unit)
            assert frac_rank(tight) == g.rank


def test_state_space_nonsimplicial_cone():
    g = OrderedGroupWithUnit(2, ((1, 0), (1, 2)), (2, 1))
    s = state_space(g)
    assert s.vertices
    for v in s.vertices:
        GroupState(v).validate_on(g)


# ---------------------------------------------------------------------------
# nearest point


def test_nearest_point_fixes_members():
    k = Polytope(2, ((0, 0), (1, 0), (0, 1)))
    x = (Fraction(1, 3), Fraction(1, 3))
    assert nearest_point(k, x) == x


def test_nearest_point_orthogonal_foot():
    k = Polytope(2, ((0, 0), (1, 0)))
    assert nearest_point(k, (Fraction(1, 2), 1)) == (Fraction(1, 2), Fraction(0))


def test_nearest_point_empty():
    with pytest.raises(ValidationError):
        nearest_point(Polytope(2, ()), (0, 0))


def test_nearest_point_matches_face_oracle():
    rng = random.Random(1)
    for _ in range(60):
        dim = rng.randint(1, 4)
        m = rng.randint(1, 5)
        verts = tuple(
            tuple(Fraction(rng.randint(-6, 6), rng.randint(1, 3)) for _ in range(dim))
            for _ in range(m)
        )
        weights = None
        if rng.random() < 0.5:
            weights = tuple(Fraction(1, d + 1) for d in range(dim))
        k = Polytope(dim, verts, weights=weights)
        x = tuple(Fraction(rng.randint(-8, 8), rng.randint(1, 3)) for _ in range(dim))
        p = nearest_point(k, x)
        q = oracles.nearest_by_faces(k, x)
        assert k.distance2(p, x) == k.distance2(q, x)
        assert p == q or k.distance2(p, q) == 0


def test_nearest_point_idempotent_and_nonexpansive():
    rng = random.Random(4)
    for _ in range(40):
        dim = rng.randint(1, 4)
        m = rng.randint(2, 5)
        verts = tuple(
            tuple(Fraction(rng.randint(-5, 5), rng.randint(1, 2)) for _ in range(dim))
            for _ in range(m)
        )
        k = Polytope(dim, verts)
        x = tuple(Fraction(rng.randint(-8, 8), rng.randint(1, 2)) for _ in range(dim))
        y = tuple(Fraction(rng.randint(-8, 8), rng.randint(1, 2)) for _ in range(dim))
        px, py = nearest_point(k, x), nearest_point(k, y)
        assert nearest_point(k, px) == px
        assert k.distance2(px, py) <= k.distance2(x, y)


# ---------------------------------------------------------------------------
# Elliott invariants


def test_elliott_invariant_factor():
    e = elliott_invariant(FDAlgebra((2,)))
    assert e.g0 == ordered_k0(FDAlgebra((2,)))
    assert e.g1.size == 1
    assert len(e.traces.vertices) == 1
    assert e.pairing_matrix == ((Fraction(1, 2),),)


def test_elliott_invariant_two_blocks():
    e = elliott_invariant(FDAlgebra((2, 3)))
    cols = {tuple(row[j] for row in e.pairing_matrix) for j in range(2)}
    assert cols == {(Fraction(1, 2), Fraction(0)), (Fraction(0), Fraction(1, 3))}
    for j in range(2):
        e.state_of_vertex(j).validate_on(e.g0)


def test_elliott_invariant_trivial_algebra():
    e = elliott_invariant(FDAlgebra((1,)))
    assert e.pairing_matrix == ((Fraction(1),),)


def test_elliott_iso_block_permutation():
    e1 = elliott_invariant(FDAlgebra((2, 3)))
    e2 = elliott_invariant(FDAlgebra((3, 2)))
    assert elliott_isomorphic(e1, e2).kind == "ISO"


def test_elliott_not_iso_rank():
    e1 = elliott_invariant(FDAlgebra((2, 2)))
    e2 = elliott_invariant(FDAlgebra((4,)))
    assert elliott_isomorphic(e1, e2).kind == "NOT_ISO"


def test_elliott_iso_reflexive():
    e = elliott_invariant(FDAlgebra((3, 1)))
    assert elliott_isomorphic(e, e).kind == "ISO"


def test_elliott_iso_matches_block_multisets_small():
    algebras = [
        FDAlgebra(blocks)
        for k in (1, 2)
        for blocks in itertools.product(range(1, 4), repeat=k)
    ]
    for a in algebras:
        for b in algebras:
            expected = sorted(a.blocks) == sorted(b.blocks)
            verdict = elliott_isomorphic(elliott_invariant(a), elliott_invariant(b))
            assert (verdict.kind == "ISO") == expected, (a, b, verdict)


def test_emit_elliott_golden():
    e = elliott_invariant(FDAlgebra((2, 3)))
    assert (
        emit_elliott(e)
        == "ell: k0={rank=2 cone=0,1;1,0 unit=2,3} k1=0 traces=(1,0);(0,1) pairing=(1/2,0);(0,1/3)"
    )
