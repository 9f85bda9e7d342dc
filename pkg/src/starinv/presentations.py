"""Input layer: finite-dimensional algebras, block matrices, Bratteli
diagrams, and the *-polynomial term language.

Matrix entries are exact complex rationals (see :mod:`starinv.exact`); the
only operation that leaves exact arithmetic is :func:`operator_norm`.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .exact import QI, QI_ONE, QI_ZERO, as_qi, qi_add, qi_adjoint, qi_eye, qi_mul, qi_rank, qi_scale, qi_zeros


class ParseError(ValueError):
    """Malformed presentation source, with position information."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = "" if line is None else f" (line {line}" + ("" if col is None else f", col {col}") + ")"
        super().__init__(message + where)


class ValidationError(ValueError):
    """Well-formed source describing an invalid object."""


# ---------------------------------------------------------------------------
# FDAlgebra


@dataclass(frozen=True)
class FDAlgebra:
    """A finite-dimensional C*-algebra, recorded as its matrix block sizes."""

    blocks: tuple

    def __post_init__(self):
        object.__setattr__(self, "blocks", tuple(int(n) for n in self.blocks))
        if len(self.blocks) == 0:
            raise ValidationError("an algebra needs at least one block")
        for n in self.blocks:
            if n < 1:
                raise ValidationError(f"zero block size in {self.blocks}")

    @property
    def num_blocks(self):
        return len(self.blocks)

    @property
    def dimension(self):
        return sum(n * n for n in self.blocks)


def _strip_lines(text):
    """Split into (lineno, content) pairs, dropping comments and blanks."""
    out = []
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            out.append((i, line))
    return out


def parse_fd_algebra(text: str) -> FDAlgebra:
    lines = _strip_lines(text)
    if len(lines) != 1:
        raise ParseError("expected exactly one 'blocks:' line", line=lines[1][0] if len(lines) > 1 else 1)
    lineno, line = lines[0]
    if not line.startswith("blocks:"):
        raise ParseError("expected 'blocks:'", line=lineno, col=1)
    body = line[len("blocks:"):].strip()
    if not body:
        raise ParseError("empty block list", line=lineno)
    sizes = []
    for tok in body.split():
        if not tok.isdigit():
            raise ParseError(f"bad block size {tok!r}", line=lineno)
        sizes.append(int(tok))
    if any(n == 0 for n in sizes):
        raise ValidationError(f"zero block size in {tuple(sizes)}")
    return FDAlgebra(tuple(sizes))


def emit_fd_algebra(algebra: FDAlgebra) -> str:
    return "blocks: " + " ".join(str(n) for n in algebra.blocks) + "\n"


# ---------------------------------------------------------------------------
# Block elements


@dataclass(frozen=True)
class BlockElement:
    """An element of an FDAlgebra: one exact complex-rational matrix per block."""

    algebra: FDAlgebra
    data: tuple  # tuple of QI matrices

    def __post_init__(self):
        if len(self.data) != self.algebra.num_blocks:
            raise ValidationError("block count mismatch")
        for n, mat in zip(self.algebra.blocks, self.data):
            if len(mat) != n or any(len(row) != n for row in mat):
                raise ValidationError(f"block is not {n}x{n}")

    # -- constructors

    @classmethod
    def from_blocks(cls, algebra, blocks):
        data = []
        for mat in blocks:
            data.append(tuple(tuple(as_qi(x) for x in row) for row in mat))
        return cls(algebra, tuple(data))

    @classmethod
    def zero(cls, algebra):
        return cls(algebra, tuple(qi_zeros(n, n) for n in algebra.blocks))

    @classmethod
    def unit(cls, algebra):
        return cls(algebra, tuple(qi_eye(n) for n in algebra.blocks))

    @classmethod
    def basis_element(cls, algebra, block, i, j):
        """Matrix unit e_ij in the given block, zero elsewhere."""
        data = []
        for b, n in enumerate(algebra.blocks):
            mat = [[QI_ZERO] * n for _ in range(n)]
            if b == block:
                mat[i][j] = QI_ONE
            data.append(tuple(tuple(row) for row in mat))
        return cls(algebra, tuple(data))

    @classmethod
    def diagonal(cls, algebra, entries):
        """Diagonal element; `entries` is one list of scalars per block."""
        data = []
        for n, diag in zip(algebra.blocks, entries):
            mat = [[QI_ZERO] * n for _ in range(n)]
            for i, x in enumerate(diag):
                mat[i][i] = as_qi(x)
            data.append(tuple(tuple(row) for row in mat))
        return cls(algebra, tuple(data))

    # -- algebra operations (exact)

    def _check_same(self, other):
        if self.algebra != other.algebra:
            raise ValidationError("elements of different algebras")

    def __add__(self, other):
        self._check_same(other)
        return BlockElement(self.algebra, tuple(qi_add(a, b) for a, b in zip(self.data, other.data)))

    def __sub__(self, other):
        return self + other.scale(-1)

    def __mul__(self, other):
        self._check_same(other)
        return BlockElement(self.algebra, tuple(qi_mul(a, b) for a, b in zip(self.data, other.data)))

    def scale(self, c):
        return BlockElement(self.algebra, tuple(qi_scale(c, a) for a in self.data))

    def adjoint(self):
        return BlockElement(self.algebra, tuple(qi_adjoint(a) for a in self.data))

    # -- structure queries

    def rank_vector(self):
        """Exact per-block rank."""
        return tuple(qi_rank(mat) for mat in self.data)

    def is_selfadjoint(self):
        return self == self.adjoint()

    def is_projection(self):
        return self.is_selfadjoint() and self * self == self

    def to_numpy(self):
        return [
            np.array([[x.to_complex() for x in row] for row in mat], dtype=complex)
            for mat in self.data
        ]


def operator_norm(a: BlockElement, tol: float = 1e-9) -> float:
    """Largest singular value over all blocks, within +/- tol.

    The per-block computation is LAPACK's iterative SVD, which converges far
    below the default tolerance and is deterministic for a fixed input.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    return float(max(_np_norm(mat) for mat in a.to_numpy()))


def _np_norm(mat):
    if mat.size == 0:
        return 0.0
    return float(np.linalg.svd(mat, compute_uv=False)[0])


# ---------------------------------------------------------------------------
# Bratteli diagrams


@dataclass(frozen=True)
class BratteliDiagram:
    """Level sizes plus nonnegative integer incidence matrices.

    maps[t] has shape len(levels[t+1]) x len(levels[t]).  The diagram is
    unital when every level size is exactly the multiplicity sum; partial
    embeddings (strict inequality) are only accepted when the source opts in,
    and are flagged.
    """

    levels: tuple
    maps: tuple
    unital: bool = True

    def __post_init__(self):
        if len(self.maps) != len(self.levels) - 1:
            raise ValidationError("need one incidence matrix per consecutive level pair")

    @property
    def num_levels(self):
        return len(self.levels)

    def level_algebra(self, t) -> FDAlgebra:
        return FDAlgebra(self.levels[t])


def _validate_bratteli(levels, maps, allow_nonunital):
    unital = True
    for t, m in enumerate(maps):
        src, dst = levels[t], levels[t + 1]
        if len(m) != len(dst) or any(len(row) != len(src) for row in m):
            raise ValidationError(f"map {t} has wrong shape")
        for j, row in enumerate(m):
            if any(x < 0 for x in row):
                raise ValidationError(f"negative multiplicity in map {t}")
            need = sum(x * s for x, s in zip(row, src))
            if need == dst[j]:
                continue
            if need < dst[j] and allow_nonunital:
                unital = False
                continue
            raise ValidationError(
                f"dimension mismatch at level {t + 1}, vertex {j}: {dst[j]} != {need}"
            )
    return BratteliDiagram(tuple(tuple(l) for l in levels), tuple(tuple(tuple(r) for r in m) for m in maps), unital)


def _parse_int_groups(body, open_ch, close_ch, lineno):
    """Parse e.g. '(1 2)(3)' into [[1,2],[3]]."""
    groups = []
    i = 0
    while i < len(body):
        ch = body[i]
        if ch.isspace():
            i += 1
            continue
        if ch != open_ch:
            raise ParseError(f"expected {open_ch!r}", line=lineno, col=i + 1)
        j = body.find(close_ch, i)
        if j < 0:
            raise ParseError(f"unclosed {open_ch!r}", line=lineno, col=i + 1)
        toks = body[i + 1:j].split()
        if not toks or any(not t.isdigit() for t in toks):
            raise ParseError("expected integers", line=lineno, col=i + 2)
        groups.append([int(t) for t in toks])
        i = j + 1
    return groups


def parse_bratteli(text: str) -> BratteliDiagram:
    levels = None
    maps = None
    allow_nonunital = False
    for lineno, line in _strip_lines(text):
        if line.startswith("levels:"):
            levels = _parse_int_groups(line[len("levels:"):], "(", ")", lineno)
        elif line.startswith("maps:"):
            maps = []
            body = line[len("maps:"):].strip()
            # levels are separated by ';' (',' tolerated); a map is either
            # a single bracketed row or a bracketed group of rows
            for part in body.replace(",", ";").split(";"):
                part = part.strip()
                if not part:
                    continue
                if part.startswith("[["):
                    rows = _parse_int_groups(part[1:-1], "[", "]", lineno)
                else:
                    rows = _parse_int_groups(part, "[", "]", lineno)
                maps.append(rows)
        elif line.startswith("allow:"):
            if line[len("allow:"):].strip() == "nonunital":
                allow_nonunital = True
            else:
                raise ParseError(f"unknown allow directive {line!r}", line=lineno)
        else:
            raise ParseError(f"unexpected line {line!r}", line=lineno, col=1)
    if levels is None or not levels:
        raise ParseError("missing levels", line=1)
    if maps is None:
        maps = []
    return _validate_bratteli(levels, maps, allow_nonunital)


def emit_bratteli(diagram: BratteliDiagram) -> str:
    lines = []
    if not diagram.unital:
        lines.append("allow: nonunital")
    lines.append("levels: " + "".join("(" + " ".join(map(str, l)) + ")" for l in diagram.levels))
    if diagram.maps:
        parts = []
        for m in diagram.maps:
            parts.append("[" + "".join("[" + " ".join(map(str, row)) + "]" for row in m) + "]")
        lines.append("maps: " + ";".join(parts))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Terms: *-polynomials over Q(i) in variables x0, x1, ...


class Term:
    """AST node for a noncommutative *-polynomial."""

    def __add__(self, other):
        return TAdd(self, _as_term(other))

    def __radd__(self, other):
        return TAdd(_as_term(other), self)

    def __sub__(self, other):
        return TAdd(self, TScale(QI(-1), _as_term(other)))

    def __mul__(self, other):
        if isinstance(other, (int, Fraction, QI)):
            return TScale(as_qi(other), self)
        return TMul(self, _as_term(other))

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction, QI)):
            return TScale(as_qi(other), self)
        return TMul(_as_term(other), self)

    def __neg__(self):
        return TScale(QI(-1), self)

    def adj(self):
        return TAdj(self)

    def free_vars(self):
        out = set()
        _collect_vars(self, out)
        return out

    def has_constant_term(self):
        """True when the term mentions the algebra unit (needs a unital algebra)."""
        return _has_const(self)


def _as_term(x):
    if isinstance(x, Term):
        return x
    if isinstance(x, (int, Fraction, QI)):
        return TConst(as_qi(x))
    raise TypeError(f"not a term: {x!r}")


@dataclass(frozen=True)
class TVar(Term):
    index: int


@dataclass(frozen=True)
class TConst(Term):
    value: QI


@dataclass(frozen=True)
class TAdd(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class TMul(Term):
    left: Term
    right: Term


@dataclass(frozen=True)
class TScale(Term):
    scalar: QI
    body: Term


@dataclass(frozen=True)
class TAdj(Term):
    body: Term


def _collect_vars(t, out):
    if isinstance(t, TVar):
        out.add(t.index)
    elif isinstance(t, (TAdd, TMul)):
        _collect_vars(t.left, out)
        _collect_vars(t.right, out)
    elif isinstance(t, (TScale, TAdj)):
        _collect_vars(t.body, out)


def _has_const(t):
    if isinstance(t, TConst):
        return not t.value.is_zero()
    if isinstance(t, (TAdd, TMul)):
        return _has_const(t.left) or _has_const(t.right)
    if isinstance(t, (TScale, TAdj)):
        return _has_const(t.body)
    return False


class UnboundVariableError(KeyError):
    pass


def eval_term(term: Term, algebra: FDAlgebra, assignment) -> BlockElement:
    """Evaluate a term with exact block arithmetic.

    `assignment` maps variable indices to BlockElements of `algebra`.
    """
    if isinstance(term, TVar):
        try:
            value = assignment[term.index]
        except KeyError:
            raise UnboundVariableError(f"x{term.index} is unbound") from None
        if value.algebra != algebra:
            raise ValidationError("assignment from a different algebra")
        return value
    if isinstance(term, TConst):
        return BlockElement.unit(algebra).scale(term.value)
    if isinstance(term, TAdd):
        return eval_term(term.left, algebra, assignment) + eval_term(term.right, algebra, assignment)
    if isinstance(term, TMul):
        return eval_term(term.left, algebra, assignment) * eval_term(term.right, algebra, assignment)
    if isinstance(term, TScale):
        return eval_term(term.body, algebra, assignment).scale(term.scalar)
    if isinstance(term, TAdj):
        return eval_term(term.body, algebra, assignment).adjoint()
    raise TypeError(f"not a term: {term!r}")


def eval_term_numpy(term: Term, env, shapes) -> list:
    """Float evaluation against numpy block lists; used by the optimizer.

    `shapes` is the tuple of block sizes (needed for constant-only terms).
    """
    if isinstance(term, TVar):
        if term.index not in env:
            raise UnboundVariableError(f"x{term.index} is unbound")
        return env[term.index]
    if isinstance(term, TConst):
        c = term.value.to_complex()
        return [c * np.eye(n, dtype=complex) for n in shapes]
    if isinstance(term, TAdd):
        l = eval_term_numpy(term.left, env, shapes)
        r = eval_term_numpy(term.right, env, shapes)
        return [a + b for a, b in zip(l, r)]
    if isinstance(term, TMul):
        l = eval_term_numpy(term.left, env, shapes)
        r = eval_term_numpy(term.right, env, shapes)
        return [a @ b for a, b in zip(l, r)]
    if isinstance(term, TScale):
        c = term.scalar.to_complex()
        return [c * a for a in eval_term_numpy(term.body, env, shapes)]
    if isinstance(term, TAdj):
        return [a.conj().T for a in eval_term_numpy(term.body, env, shapes)]
    raise TypeError(f"not a term: {term!r}")
