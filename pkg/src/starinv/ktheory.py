"""Ordered K-theory of finite-dimensional algebras, made exact.

Murray-von Neumann classes of projections are represented by per-block rank
vectors: in a matrix algebra two projections are equivalent exactly when
their ranks agree, so the operator-level witness search collapses to integer
bookkeeping.  The Grothendieck construction is provided both for explicit
finite semigroup tables and, symbolically, for the rank-vector semigroup of
an algebra (which is free, hence cancellative; its completion is computed
from the combinatorial description and never from a saturated table).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .exactlp import in_rational_cone, lp_feasible
from .presentations import BlockElement, FDAlgebra, BratteliDiagram, ValidationError


# ---------------------------------------------------------------------------
# Semigroup and group tables


@dataclass(frozen=True)
class AbelianSemigroupTable:
    """A finite abelian semigroup given by its full operation table."""

    size: int
    table: tuple  # size x size tuple of element indices

    def __post_init__(self):
        if len(self.table) != self.size or any(len(r) != self.size for r in self.table):
            raise ValidationError("table shape mismatch")

    def add(self, i, j):
        return self.table[i][j]

    def validate(self):
        n = self.size
        t = self.table
        for i in range(n):
            for j in range(n):
                if t[i][j] != t[j][i]:
                    raise ValidationError(f"not commutative at ({i},{j})")
                for k in range(n):
                    if t[i][t[j][k]] != t[t[i][j]][k]:
                        raise ValidationError(f"not associative at ({i},{j},{k})")
        return self


@dataclass(frozen=True)
class GroupTable:
    """A finite abelian group given by its table and neutral element."""

    size: int
    table: tuple
    neutral: int

    def add(self, i, j):
        return self.table[i][j]

    def inverse_of(self, i):
        for j in range(self.size):
            if self.table[i][j] == self.neutral:
                return j
        raise ValidationError(f"element {i} has no inverse")

    def is_group(self):
        try:
            for i in range(self.size):
                self.inverse_of(i)
        except ValidationError:
            return False
        return True


TRIVIAL_GROUP = GroupTable(size=1, table=((0,),), neutral=0)


# ---------------------------------------------------------------------------
# Ordered groups with order unit


@dataclass(frozen=True)
class OrderedGroupWithUnit:
    """(G, G+, u): free abelian group Z^rank, positive cone from generators,
    distinguished order unit."""

    rank: int
    cone: tuple  # tuple of integer vectors generating the cone
    unit: tuple

    def __post_init__(self):
        # the generator list is a set: store it sorted and deduplicated so
        # structural equality is representation-independent
        gens = sorted({tuple(int(x) for x in g) for g in self.cone})
        object.__setattr__(self, "cone", tuple(gens))
        object.__setattr__(self, "unit", tuple(int(x) for x in self.unit))
        if len(self.unit) != self.rank or any(len(g) != self.rank for g in self.cone):
            raise ValidationError("vector length differs from rank")

    def is_simplicial(self):
        basis = {tuple(1 if i == j else 0 for j in range(self.rank)) for i in range(self.rank)}
        return set(self.cone) == basis

    def cone_contains(self, v):
        """Membership in the rational cone spanned by the generators."""
        return in_rational_cone(self.cone, v)

    def validate(self):
        """Check the cone axioms and that the unit is an order unit.

        Additive closure holds structurally for generator cones; pointedness
        and full integer span are checked exactly, as is the order-unit
        condition -ku <= x <= ku for every basis vector.
        """
        if self.rank == 0:
            raise ValidationError("rank must be at least 1")
        # pointedness: no nontrivial nonnegative combination vanishes
        if self.cone:
            dim = self.rank
            a = [[Fraction(g[i]) for g in self.cone] for i in range(dim)]
            a.append([Fraction(1)] * len(self.cone))
            b = [Fraction(0)] * dim + [Fraction(1)]
            if lp_feasible(a, b, len(self.cone)) is not None:
                raise ValidationError("cone is not pointed (X and -X meet outside 0)")
        if not _integer_span_is_full(self.cone, self.rank):
            raise ValidationError("cone generators do not span Z^rank (X - X != G)")
        if not self.cone_contains(self.unit):
            raise ValidationError("unit is not in the positive cone")
        for i in range(self.rank):
            e = tuple(1 if j == i else 0 for j in range(self.rank))
            if not (_dominated_by_multiple(self, e) and _dominated_by_multiple(self, tuple(-x for x in e))):
                raise ValidationError(f"unit is not an order unit (basis vector {i} escapes)")
        return self


def _integer_span_is_full(gens, rank):
    """Do the generators span Z^rank as a group?

    Reduces the generator rows to an upper-triangular lattice basis with
    unimodular row operations; the span is full exactly when the diagonal
    product is a unit.
    """
    if not gens:
        return False
    m = [list(g) for g in gens]  # rows generate the lattice
    rows = len(m)
    r = 0
    for c in range(rank):
        while True:
            nz = [i for i in range(r, rows) if m[i][c] != 0]
            if not nz:
                return False  # rank deficient
            if len(nz) == 1:
                i = nz[0]
                m[r], m[i] = m[i], m[r]
                break
            nz.sort(key=lambda i: abs(m[i][c]))
            small, big = nz[0], nz[1]
            q = m[big][c] // m[small][c]
            m[big] = [x - q * y for x, y in zip(m[big], m[small])]
        r += 1
    det = 1
    for i in range(rank):
        det *= m[i][i]
    return abs(det) == 1


def _dominated_by_multiple(g, x):
    """Is there k >= 0 with ku - x in the rational cone?

    Solved as the exact LP: sum(lam_j g_j) - k u = -x with lam, k >= 0.
    """
    dim = g.rank
    a = [[Fraction(c[i]) for c in g.cone] + [Fraction(-g.unit[i])] for i in range(dim)]
    b = [Fraction(-x[i]) for i in range(dim)]
    return lp_feasible(a, b, len(g.cone) + 1) is not None


def emit_ordered_group(g: OrderedGroupWithUnit) -> str:
    cone = ";".join(",".join(str(x) for x in gen) for gen in g.cone)
    unit = ",".join(str(x) for x in g.unit)
    return f"rank={g.rank} cone={cone} unit={unit}"


def parse_ordered_group(text: str) -> OrderedGroupWithUnit:
    fields = {}
    for tok in text.split():
        if "=" not in tok:
            raise ValidationError(f"bad ordered-group token {tok!r}")
        k, v = tok.split("=", 1)
        fields[k] = v
    try:
        rank = int(fields["rank"])
        cone = tuple(
            tuple(int(x) for x in gen.split(","))
            for gen in fields["cone"].split(";")
            if gen
        )
        unit = tuple(int(x) for x in fields["unit"].split(","))
    except (KeyError, ValueError) as exc:
        raise ValidationError(f"bad ordered-group text: {exc}") from exc
    return OrderedGroupWithUnit(rank, cone, unit)


@dataclass(frozen=True)
class GroupHom:
    """Integer matrix between ordered groups, rows = target coordinates."""

    matrix: tuple
    positive: bool = True
    unit_preserving: bool = True

    def apply(self, v):
        return tuple(sum(r * x for r, x in zip(row, v)) for row in self.matrix)

    def compose(self, other):
        """self after other (matrix product self.matrix @ other.matrix)."""
        rows = len(self.matrix)
        inner = len(other.matrix)
        cols = len(other.matrix[0]) if inner else 0
        mat = tuple(
            tuple(
                sum(self.matrix[i][t] * other.matrix[t][j] for t in range(inner))
                for j in range(cols)
            )
            for i in range(rows)
        )
        return GroupHom(mat, self.positive and other.positive,
                        self.unit_preserving and other.unit_preserving)


# ---------------------------------------------------------------------------
# Murray-von Neumann semigroup


@dataclass(frozen=True)
class MvNSemigroup:
    """Equivalence classes of projections in A (x) K, as rank vectors.

    The enumerated window is {0..bound}^k with saturating addition (flagged);
    the exact, unsaturated addition on labels is the source of truth for
    everything downstream.
    """

    algebra: FDAlgebra
    bound: int

    @property
    def k(self):
        return self.algebra.num_blocks

    @property
    def size(self):
        return (self.bound + 1) ** self.k

    @property
    def unit_vector(self):
        return self.algebra.blocks

    @property
    def unit_index(self):
        return self.index_of(self.unit_vector)

    def vector_of(self, index):
        digits = []
        for _ in range(self.k):
            digits.append(index % (self.bound + 1))
            index //= self.bound + 1
        return tuple(reversed(digits))

    def index_of(self, vec):
        idx = 0
        for x in vec:
            if not 0 <= x <= self.bound:
                raise ValidationError(f"rank vector {vec} escapes the window")
            idx = idx * (self.bound + 1) + x
        return idx

    def add_exact(self, v, w):
        """Unsaturated addition on rank-vector labels."""
        return tuple(a + b for a, b in zip(v, w))

    def add_window(self, v, w):
        """Saturating addition within the window; returns (vector, saturated)."""
        s = self.add_exact(v, w)
        clipped = tuple(min(x, self.bound) for x in s)
        return clipped, clipped != s

    def class_of(self, p: BlockElement):
        """The class of a projection, as its exact rank vector."""
        if p.algebra != self.algebra:
            raise ValidationError("projection from a different algebra")
        if not p.is_projection():
            raise ValidationError("element is not a projection")
        return p.rank_vector()

    def table(self):
        """Materialized saturating table; use only for small windows."""
        n = self.size
        if n > 8192:
            raise ValidationError("window too large to materialize; lower the bound")
        rows = []
        saturated = set()
        for i in range(n):
            vi = self.vector_of(i)
            row = []
            for j in range(n):
                s, sat = self.add_window(vi, self.vector_of(j))
                row.append(self.index_of(s))
                if sat:
                    saturated.add((i, j))
            rows.append(tuple(row))
        return AbelianSemigroupTable(n, tuple(rows)), frozenset(saturated)


def mv_semigroup(algebra: FDAlgebra, bound: int = 16) -> MvNSemigroup:
    if bound < max(algebra.blocks):
        raise ValidationError("bound must be at least the largest block size")
    return MvNSemigroup(algebra, bound)


# ---------------------------------------------------------------------------
# Grothendieck construction


@dataclass(frozen=True)
class GrothendieckResult:
    group: GroupTable
    canonical_map: tuple  # semigroup element -> group element
    pair_class: tuple  # (i, j) formal differences -> group element, row-major

    def class_of_pair(self, i, j, n):
        return self.pair_class[i * n + j]

    @property
    def canonical_is_injective(self):
        return len(set(self.canonical_map)) == len(self.canonical_map)


def grothendieck(s):
    """Universal group completion.

    For a finite table: the quotient of S x S by the relation
    (i,j) ~ (k,l) iff i + l + m = k + j + m for some m.  For the rank-vector
    semigroup of an algebra the construction is carried out symbolically on
    the labels (the semigroup is free abelian, hence cancellative) and the
    result is returned as an ordered group with unit.
    """
    if isinstance(s, MvNSemigroup):
        return _grothendieck_of_rank_semigroup(s)
    if isinstance(s, AbelianSemigroupTable):
        return _grothendieck_of_table(s)
    raise TypeError(f"cannot take the Grothendieck group of {type(s).__name__}")


def _grothendieck_of_table(s: AbelianSemigroupTable) -> GrothendieckResult:
    n = s.size
    t = s.table
    parent = list(range(n * n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(x, y):
        rx, ry = find(x), find(y)
        if rx != ry:
            parent[max(rx, ry)] = min(rx, ry)

    for i in range(n):
        for j in range(n):
            for k in range(n):
                for l in range(n):
                    if find(i * n + j) == find(k * n + l):
                        continue
                    for m in range(n):
                        if t[t[i][l]][m] == t[t[k][j]][m]:
                            union(i * n + j, k * n + l)
                            break

    roots = sorted({find(x) for x in range(n * n)})
    index = {r: c for c, r in enumerate(roots)}
    pair_class = tuple(index[find(i * n + j)] for i in range(n) for j in range(n))

    size = len(roots)
    table = [[None] * size for _ in range(size)]
    reps = {index[r]: divmod(r, n) for r in roots}
    for a in range(size):
        ia, ja = reps[a]
        for b in range(size):
            ib, jb = reps[b]
            table[a][b] = pair_class[t[ia][ib] * n + t[ja][jb]]
    neutral = pair_class[t[0][0] * n + t[0][0]]  # class of (x, x)
    group = GroupTable(size, tuple(tuple(r) for r in table), neutral)
    canonical = tuple(pair_class[t[i][0] * n + 0] for i in range(n))
    return GrothendieckResult(group, canonical, pair_class)


def _grothendieck_of_rank_semigroup(s: MvNSemigroup) -> OrderedGroupWithUnit:
    # formal differences a - b of rank vectors; cancellativity makes the
    # class of (a, b) the vector a - b, so the group is Z^k.  The cone is
    # generated by the canonical images of the label atoms.
    k = s.k
    window = [s.vector_of(i) for i in range(min(s.size, (s.bound + 1) ** k))]
    atoms = sorted(v for v in window if sum(v) == 1)
    if len(atoms) != k:
        raise ValidationError("rank-vector window lost its atoms; raise the bound")
    return OrderedGroupWithUnit(rank=k, cone=tuple(atoms), unit=s.unit_vector)


# ---------------------------------------------------------------------------
# K-groups of finite-dimensional algebras


def ordered_k0(algebra: FDAlgebra) -> OrderedGroupWithUnit:
    """(Z^k, N^k, block sizes) for an algebra with k blocks."""
    k = algebra.num_blocks
    basis = tuple(tuple(1 if i == j else 0 for j in range(k)) for i in range(k))
    return OrderedGroupWithUnit(rank=k, cone=basis, unit=algebra.blocks)


def k1_finite_dimensional(algebra: FDAlgebra) -> GroupTable:
    """K1 of a finite-dimensional algebra is trivial: every unitary is
    connected to the identity through a spectral path."""
    if algebra.num_blocks < 1:
        raise ValidationError("invalid algebra")
    return TRIVIAL_GROUP


def k0_connecting_map(diagram: BratteliDiagram, t: int) -> GroupHom:
    """The positive K0 map Z^{k_t} -> Z^{k_{t+1}} induced by level t."""
    if not 0 <= t < diagram.num_levels - 1:
        raise IndexError(f"level index {t} out of range")
    m = diagram.maps[t]
    src, dst = diagram.levels[t], diagram.levels[t + 1]
    unit_preserving = all(
        sum(x * s for x, s in zip(row, src)) == d for row, d in zip(m, dst)
    )
    return GroupHom(matrix=m, positive=True, unit_preserving=unit_preserving)


# ---------------------------------------------------------------------------
# Isomorphism of ordered groups with unit


@dataclass(frozen=True)
class IsoVerdict:
    kind: str  # "ISO" | "NOT_ISO" | "UNKNOWN"
    witness: tuple = None  # integer matrix rows, when ISO
    reason: str = ""

    def __bool__(self):
        return self.kind == "ISO"


def ordered_group_isomorphic(g: OrderedGroupWithUnit, h: OrderedGroupWithUnit,
                             budget: int = 2) -> IsoVerdict:
    """Decide isomorphism of ordered groups with unit.

    Simplicial inputs are decided exactly: the cone-preserving automorphisms
    of (Z^r, N^r) are coordinate permutations, so isomorphism amounts to
    equal ranks and equal unit-coordinate multisets.  Other inputs get a
    bounded search over unimodular matrices; exhaustion yields UNKNOWN.
    """
    if g.rank != h.rank:
        return IsoVerdict("NOT_ISO", reason=f"rank {g.rank} != {h.rank}")
    if g.is_simplicial() and h.is_simplicial():
        if sorted(g.unit) != sorted(h.unit):
            return IsoVerdict("NOT_ISO", reason=f"unit multisets differ: {sorted(g.unit)} vs {sorted(h.unit)}")
        perm = _matching_permutation(g.unit, h.unit)
        matrix = tuple(
            tuple(1 if perm[j] == i else 0 for j in range(g.rank)) for i in range(g.rank)
        )
        return IsoVerdict("ISO", witness=matrix)
    return _search_unimodular(g, h, budget)


def _matching_permutation(src, dst):
    """perm with dst[perm[j]] == src[j], greedily on sorted positions."""
    used = [False] * len(dst)
    perm = [None] * len(src)
    for j, v in enumerate(src):
        for i, w in enumerate(dst):
            if not used[i] and w == v:
                perm[j] = i
                used[i] = True
                break
    return perm


def _search_unimodular(g, h, budget):
    r = g.rank
    if r * r > 9:
        return IsoVerdict("UNKNOWN", reason="rank too large for the matrix search")
    entries = list(range(-budget, budget + 1))
    mat = [[0] * r for _ in range(r)]

    def rec(pos):
        if pos == r * r:
            m = tuple(tuple(row) for row in mat)
            if _det_int(m) not in (1, -1):
                return None
            if _apply(m, g.unit) != h.unit:
                return None
            if not all(h.cone_contains(_apply(m, c)) for c in g.cone):
                return None
            inv = _int_inverse(m)
            if inv is None or not all(g.cone_contains(_apply(inv, c)) for c in h.cone):
                return None
            return m
        i, j = divmod(pos, r)
        for e in entries:
            mat[i][j] = e
            out = rec(pos + 1)
            if out is not None:
                return out
        mat[i][j] = 0
        return None

    found = rec(0)
    if found is not None:
        return IsoVerdict("ISO", witness=found)
    return IsoVerdict("UNKNOWN", reason=f"no unimodular witness with entries within {budget}")


def _apply(m, v):
    return tuple(sum(r * x for r, x in zip(row, v)) for row in m)


def _det_int(m):
    n = len(m)
    if n == 1:
        return m[0][0]
    total = 0
    for j in range(n):
        minor = tuple(row[:j] + row[j + 1:] for row in m[1:])
        total += (-1) ** j * m[0][j] * _det_int(minor)
    return total


def _int_inverse(m):
    n = len(m)
    d = _det_int(m)
    if d not in (1, -1):
        return None
    cof = []
    for i in range(n):
        row = []
        for j in range(n):
            minor = tuple(r[:j] + r[j + 1:] for k, r in enumerate(m) if k != i)
            row.append((-1) ** (i + j) * (_det_int(minor) if n > 1 else 1))
        cof.append(row)
    # adjugate transpose over det
    return tuple(tuple(cof[j][i] * d for j in range(n)) for i in range(n))
