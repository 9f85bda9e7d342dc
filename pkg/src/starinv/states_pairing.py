"""Trace simplexes, states on ordered groups, the coupling map, the
nearest-point retraction, and Elliott invariants.

Polytopes carry explicit rational vertex lists.  An optional per-coordinate
weight vector (1/n in coordinate n) fixes the weighted l2 metric used by the
retraction; all geometry is exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction

from .exact import dot, frac_rank, frac_solve, frac_solve_any
from .exactlp import lp_feasible
from .ktheory import (
    TRIVIAL_GROUP,
    GroupTable,
    IsoVerdict,
    OrderedGroupWithUnit,
    emit_ordered_group,
    k1_finite_dimensional,
    ordered_k0,
)
from .presentations import FDAlgebra, ValidationError


class UnboundedStateSpaceError(ValidationError):
    """The state polyhedron has a recession ray: the unit is no order unit."""


@dataclass(frozen=True)
class Polytope:
    """Convex hull of finitely many exact rational points."""

    ambient: int
    vertices: tuple  # tuple of Fraction tuples
    weights: tuple = None  # optional metric weights, one per coordinate
    simplex: bool = False

    def __post_init__(self):
        verts = tuple(tuple(Fraction(x) for x in v) for v in self.vertices)
        object.__setattr__(self, "vertices", verts)
        if any(len(v) != self.ambient for v in verts):
            raise ValidationError("vertex dimension mismatch")
        if self.weights is not None:
            w = tuple(Fraction(x) for x in self.weights)
            if len(w) != self.ambient or any(x <= 0 for x in w):
                raise ValidationError("weights must be positive, one per coordinate")
            object.__setattr__(self, "weights", w)
        if self.simplex and len(verts) > 1:
            diffs = [tuple(a - b for a, b in zip(v, verts[0])) for v in verts[1:]]
            if frac_rank(diffs) != len(diffs):
                raise ValidationError("simplex flag set but vertices are affinely dependent")

    @property
    def is_empty(self):
        return len(self.vertices) == 0

    def metric_ip(self, a, b) -> Fraction:
        """The (squared-weight) inner product inducing the polytope metric."""
        if self.weights is None:
            return dot(a, b)
        return sum((w * w * x * y for w, x, y in zip(self.weights, a, b)), Fraction(0))

    def distance2(self, a, b) -> Fraction:
        d = tuple(x - y for x, y in zip(a, b))
        return self.metric_ip(d, d)

    def contains(self, x) -> bool:
        """Exact membership in the convex hull."""
        if self.is_empty:
            return False
        m = len(self.vertices)
        a = [[self.vertices[j][i] for j in range(m)] for i in range(self.ambient)]
        a.append([Fraction(1)] * m)
        b = list(x) + [Fraction(1)]
        return lp_feasible(a, b, m) is not None


@dataclass(frozen=True)
class GroupState:
    """A positive unital functional on an ordered group, as a rational vector."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(Fraction(x) for x in self.values))

    def __call__(self, v) -> Fraction:
        return dot(self.values, v)

    def validate_on(self, group: OrderedGroupWithUnit):
        if len(self.values) != group.rank:
            raise ValidationError("state length differs from group rank")
        for g in group.cone:
            if self(g) < 0:
                raise ValidationError(f"state is negative on cone generator {g}")
        if self(group.unit) != 1:
            raise ValidationError("state does not send the unit to 1")
        return self


# ---------------------------------------------------------------------------
# Traces of a finite-dimensional algebra


def trace_simplex(algebra: FDAlgebra) -> Polytope:
    """The simplex of tracial states: extreme points are the normalized
    block traces, one per block."""
    k = algebra.num_blocks
    verts = tuple(
        tuple(Fraction(1) if i == j else Fraction(0) for j in range(k)) for i in range(k)
    )
    return Polytope(ambient=k, vertices=verts, simplex=True)


def pairing(algebra: FDAlgebra, tau) -> GroupState:
    """The state on K0 induced by the trace with barycentric weights tau.

    On a projection class g the value is sum_i tau_i g_i / n_i.
    """
    w = tuple(Fraction(x) for x in tau)
    if len(w) != algebra.num_blocks:
        raise ValidationError("trace coordinate count differs from block count")
    if any(x < 0 for x in w) or sum(w) != 1:
        raise ValidationError(f"{w} is not in the trace simplex")
    return GroupState(tuple(wi / ni for wi, ni in zip(w, algebra.blocks)))


# ---------------------------------------------------------------------------
# State space of an ordered group: exact vertex enumeration


def state_space(group: OrderedGroupWithUnit) -> Polytope:
    """All states on (G, G+, u), as an exact vertex list.

    Vertices are enumerated by solving every maximal tight subsystem of
    {phi . g = 0} together with phi . u = 1; a recession ray is reported as
    an unbounded-polyhedron error (the unit is then not an order unit).
    """
    r = group.rank
    if r > 8:
        raise ValidationError("exact vertex enumeration is limited to rank <= 8")
    gens = [tuple(Fraction(x) for x in g) for g in group.cone]
    unit = tuple(Fraction(x) for x in group.unit)

    if _has_recession_ray(gens, unit, r):
        raise UnboundedStateSpaceError(
            "state polyhedron is unbounded: the unit is not an order unit"
        )

    verts = set()
    rows_all = gens
    for subset in itertools.combinations(range(len(rows_all)), r - 1):
        a = [rows_all[i] for i in subset] + [unit]
        b = [Fraction(0)] * (r - 1) + [Fraction(1)]
        if frac_rank(a) != r:
            continue
        sol = _solve_full_rank(a, b, r)
        if sol is None:
            continue
        if all(dot(sol, g) >= 0 for g in gens) and dot(sol, unit) == 1:
            verts.add(sol)
    ordered = tuple(sorted(verts))
    simplex = False
    if ordered:
        diffs = [tuple(a - b for a, b in zip(v, ordered[0])) for v in ordered[1:]]
        simplex = frac_rank(diffs) == len(diffs) if diffs else True
    return Polytope(ambient=r, vertices=ordered, simplex=simplex)


def _solve_full_rank(a, b, n_unknowns):
    """Solve a (possibly overdetermined) exact system of full column rank."""
    # pick n independent rows, solve, then verify the rest
    chosen = []
    for row, rhs in zip(a, b):
        trial = chosen + [(row, rhs)]
        if frac_rank([r for r, _ in trial]) == len(trial):
            chosen = trial
        if len(chosen) == n_unknowns:
            break
    if len(chosen) < n_unknowns:
        return None
    sol = frac_solve([r for r, _ in chosen], [x for _, x in chosen])
    if sol is None:
        return None
    # verify the remaining equations
    for row, rhs in zip(a, b):
        if dot(sol, row) != rhs:
            return None
    return sol


def _has_recession_ray(gens, unit, r):
    """Is there phi != 0 with phi.g >= 0 for all g and phi.u = 0?

    A nonzero ray can be scaled so that some coordinate equals +/-1, so 2r
    normalized feasibility probes decide the question exactly.  Variables
    are phi = p - q with p, q >= 0 plus one slack per generator.
    """
    nv = 2 * r + len(gens)
    for j in range(r):
        for sign in (1, -1):
            rows = []
            rhs = []
            for g in gens:
                rows.append([g[i] for i in range(r)] + [-g[i] for i in range(r)] + [0] * len(gens))
                rhs.append(Fraction(0))
            for gi in range(len(gens)):
                rows[gi][2 * r + gi] = Fraction(-1)
            rows.append([unit[i] for i in range(r)] + [-unit[i] for i in range(r)] + [0] * len(gens))
            rhs.append(Fraction(0))
            norm_row = [Fraction(0)] * nv
            norm_row[j] = Fraction(sign)
            norm_row[r + j] = Fraction(-sign)
            rows.append(norm_row)
            rhs.append(Fraction(1))
            if lp_feasible(rows, rhs, nv) is not None:
                return True
    return False


# ---------------------------------------------------------------------------
# Nearest-point retraction (exact Wolfe minimum-norm point)


def nearest_point(polytope: Polytope, x) -> tuple:
    """The unique weighted-l2 nearest point of the polytope to x.

    Computed by Wolfe's minimum-norm-point algorithm in exact rational
    arithmetic, so the result is exact (in particular the map fixes the
    polytope pointwise).
    """
    if polytope.is_empty:
        raise ValidationError("nearest point of an empty polytope")
    x = tuple(Fraction(v) for v in x)
    if len(x) != polytope.ambient:
        raise ValidationError("point dimension mismatch")
    shifted = [tuple(a - b for a, b in zip(v, x)) for v in polytope.vertices]
    y = _min_norm_point(shifted, polytope.metric_ip)
    return tuple(a + b for a, b in zip(x, y))


def _min_norm_point(points, ip):
    """Wolfe's algorithm for the min-norm point of a convex hull, exact."""
    m = len(points)
    norms = [ip(p, p) for p in points]
    start = min(range(m), key=lambda i: (norms[i], points[i]))
    corral = [start]
    lam = [Fraction(1)]
    x = points[start]

    for _ in range(10000):
        # major cycle: the most violated vertex
        scores = [ip(x, p) for p in points]
        xx = ip(x, x)
        jstar = min(range(m), key=lambda i: (scores[i], i))
        if scores[jstar] >= xx or jstar in corral:
            break
        corral.append(jstar)
        lam.append(Fraction(0))

        while True:
            mu = _affine_min_norm([points[i] for i in corral], ip)
            if all(c > 0 for c in mu):
                lam = list(mu)
                break
            # step from lam toward mu, stopping at the first vanishing weight
            theta = min(
                (l / (l - u) for l, u in zip(lam, mu) if u < l and u <= 0),
                default=Fraction(1),
            )
            lam = [(1 - theta) * l + theta * u for l, u in zip(lam, mu)]
            keep = [i for i, c in enumerate(lam) if c > 0]
            if len(keep) == len(lam):  # impossible in exact arithmetic
                keep = keep[:-1]
            corral = [corral[i] for i in keep]
            lam = [lam[i] for i in keep]
        x = _combine(corral, lam, points)
    else:
        raise ArithmeticError("minimum-norm iteration failed to terminate")
    return _combine(corral, lam, points)


def _combine(corral, lam, points):
    dim = len(points[0])
    out = [Fraction(0)] * dim
    for i, c in zip(corral, lam):
        for d in range(dim):
            out[d] += c * points[i][d]
    return tuple(out)


def _affine_min_norm(pts, ip):
    """Min-norm point of the affine hull: KKT system over the Gram matrix.

    The minimizer always exists, so the bordered system is consistent even
    when the points are affinely dependent; any particular solution gives a
    valid coefficient vector for the (unique) minimizing point.
    """
    s = len(pts)
    a = [[2 * ip(pts[i], pts[j]) for j in range(s)] + [Fraction(1)] for i in range(s)]
    a.append([Fraction(1)] * s + [Fraction(0)])
    b = [Fraction(0)] * s + [Fraction(1)]
    sol = frac_solve_any(a, b)
    if sol is None:
        raise ArithmeticError("inconsistent KKT system for an existing minimizer")
    return tuple(sol[:s])


# ---------------------------------------------------------------------------
# Elliott invariants


@dataclass(frozen=True)
class ElliottInvariant:
    """The quadruple (ordered K0 with unit, K1, trace simplex, pairing).

    The pairing matrix stores, column by column, the K0-state induced by
    each extreme trace; affine extension determines it everywhere.
    """

    g0: OrderedGroupWithUnit
    g1: GroupTable
    traces: Polytope
    pairing_matrix: tuple  # rank x num_vertices, Fractions, column j = state of vertex j

    def state_of_vertex(self, j) -> GroupState:
        return GroupState(tuple(row[j] for row in self.pairing_matrix))


def elliott_invariant(algebra: FDAlgebra) -> ElliottInvariant:
    g0 = ordered_k0(algebra)
    g1 = k1_finite_dimensional(algebra)
    traces = trace_simplex(algebra)
    cols = [pairing(algebra, v).values for v in traces.vertices]
    matrix = tuple(tuple(col[i] for col in cols) for i in range(g0.rank))
    return ElliottInvariant(g0, g1, traces, matrix)


def elliott_isomorphic(e1: ElliottInvariant, e2: ElliottInvariant) -> IsoVerdict:
    """Isomorphism of Elliott quadruples.

    Searches coordinate permutations of the (simplicial) K0 groups jointly
    with vertex bijections of the trace simplexes, requiring the pairing
    square to commute exactly on extreme traces.  Exhaustion of the
    simplicial search is a definitive NOT_ISO; only non-simplicial inputs
    may end UNKNOWN.
    """
    if e1.g0.rank != e2.g0.rank:
        return IsoVerdict("NOT_ISO", reason=f"K0 ranks differ: {e1.g0.rank} vs {e2.g0.rank}")
    if e1.g1.size != e2.g1.size:
        return IsoVerdict("NOT_ISO", reason="K1 groups differ")
    n1, n2 = len(e1.traces.vertices), len(e2.traces.vertices)
    if n1 != n2:
        return IsoVerdict("NOT_ISO", reason=f"trace simplexes differ: {n1} vs {n2} extreme points")
    if not (e1.g0.is_simplicial() and e2.g0.is_simplicial()):
        return IsoVerdict("UNKNOWN", reason="only simplicial K0 is decided exactly")
    r = e1.g0.rank
    for sigma in itertools.permutations(range(r)):
        if any(e2.g0.unit[sigma[i]] != e1.g0.unit[i] for i in range(r)):
            continue
        for beta in itertools.permutations(range(n1)):
            ok = True
            for j in range(n1):
                for i in range(r):
                    if e2.pairing_matrix[sigma[i]][beta[j]] != e1.pairing_matrix[i][j]:
                        ok = False
                        break
                if not ok:
                    break
            if ok:
                return IsoVerdict("ISO", witness=(tuple(sigma), tuple(beta)))
    return IsoVerdict("NOT_ISO", reason="no permutation witness satisfies the pairing square")


def emit_elliott(e: ElliottInvariant) -> str:
    verts = ";".join("(" + ",".join(str(x) for x in v) + ")" for v in e.traces.vertices)
    cols = []
    for j in range(len(e.traces.vertices)):
        cols.append("(" + ",".join(str(row[j]) for row in e.pairing_matrix) + ")")
    k1 = "0" if e.g1.size == 1 else f"order{e.g1.size}"
    return f"ell: k0={{{emit_ordered_group(e.g0)}}} k1={k1} traces={verts} pairing={';'.join(cols)}"
