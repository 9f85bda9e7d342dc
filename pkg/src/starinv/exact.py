"""Exact scalars and small dense linear algebra.

Everything here is over the complex rationals (pairs of `Fraction`) or the
plain rationals.  These routines back the K-theory and Cuntz layers, which
must never see floating point.
"""

from __future__ import annotations

from fractions import Fraction


class QI:
    """A complex number with exact rational real and imaginary parts."""

    __slots__ = ("re", "im")

    def __init__(self, re=0, im=0):
        object.__setattr__(self, "re", Fraction(re))
        object.__setattr__(self, "im", Fraction(im))

    def __setattr__(self, name, value):
        raise AttributeError("QI values are immutable")

    def __add__(self, other):
        other = as_qi(other)
        return QI(self.re + other.re, self.im + other.im)

    __radd__ = __add__

    def __neg__(self):
        return QI(-self.re, -self.im)

    def __sub__(self, other):
        return self + (-as_qi(other))

    def __rsub__(self, other):
        return as_qi(other) + (-self)

    def __mul__(self, other):
        other = as_qi(other)
        return QI(
            self.re * other.re - self.im * other.im,
            self.re * other.im + self.im * other.re,
        )

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = as_qi(other)
        d = other.abs2()
        if d == 0:
            raise ZeroDivisionError("division by zero in QI")
        return QI(
            (self.re * other.re + self.im * other.im) / d,
            (self.im * other.re - self.re * other.im) / d,
        )

    def conj(self):
        return QI(self.re, -self.im)

    def abs2(self) -> Fraction:
        """|z|^2, exact."""
        return self.re * self.re + self.im * self.im

    def is_zero(self) -> bool:
        return self.re == 0 and self.im == 0

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.im == 0 and self.re == other
        if isinstance(other, QI):
            return self.re == other.re and self.im == other.im
        return NotImplemented

    def __hash__(self):
        if self.im == 0:
            return hash(self.re)
        return hash((self.re, self.im))

    def __repr__(self):
        if self.im == 0:
            return f"QI({self.re})"
        return f"QI({self.re}, {self.im})"

    def to_complex(self) -> complex:
        return complex(self.re) + 1j * complex(self.im)


QI_ZERO = QI(0)
QI_ONE = QI(1)
QI_I = QI(0, 1)


def as_qi(x) -> QI:
    if isinstance(x, QI):
        return x
    if isinstance(x, (int, Fraction)):
        return QI(x)
    if isinstance(x, complex):
        raise TypeError("floats/complex are not exact; build QI from Fractions")
    raise TypeError(f"cannot coerce {type(x).__name__} to QI")


# ---------------------------------------------------------------------------
# Matrices over QI: tuples of tuples, shape (rows, cols).


def qi_zeros(n, m):
    return tuple(tuple(QI_ZERO for _ in range(m)) for _ in range(n))


def qi_eye(n):
    return tuple(
        tuple(QI_ONE if i == j else QI_ZERO for j in range(n)) for i in range(n)
    )


def qi_add(a, b):
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def qi_neg(a):
    return tuple(tuple(-x for x in r) for r in a)


def qi_scale(c, a):
    c = as_qi(c)
    return tuple(tuple(c * x for x in r) for r in a)


def qi_mul(a, b):
    n, k, m = len(a), len(b), len(b[0])
    bt = list(zip(*b))
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            acc = QI_ZERO
            for t in range(k):
                acc = acc + a[i][t] * bt[j][t]
            row.append(acc)
        out.append(tuple(row))
    return tuple(out)


def qi_adjoint(a):
    return tuple(tuple(a[i][j].conj() for i in range(len(a))) for j in range(len(a[0])))


def qi_rank(a) -> int:
    """Exact rank by Gaussian elimination over the field Q(i)."""
    rows = [list(r) for r in a]
    n = len(rows)
    m = len(rows[0]) if n else 0
    rank = 0
    col = 0
    while rank < n and col < m:
        piv = next((r for r in range(rank, n) if not rows[r][col].is_zero()), None)
        if piv is None:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = QI_ONE / rows[rank][col]
        rows[rank] = [inv * x for x in rows[rank]]
        for r in range(n):
            if r != rank and not rows[r][col].is_zero():
                f = rows[r][col]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[rank])]
        rank += 1
        col += 1
    return rank


def qi_inverse(a):
    """Exact inverse of a square QI matrix; None if singular."""
    n = len(a)
    aug = [list(row) + list(qi_eye(n)[i]) for i, row in enumerate(a)]
    for col in range(n):
        piv = next((r for r in range(col, n) if not aug[r][col].is_zero()), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = QI_ONE / aug[col][col]
        aug[col] = [inv * x for x in aug[col]]
        for r in range(n):
            if r != col and not aug[r][col].is_zero():
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return tuple(tuple(row[n:]) for row in aug)


# ---------------------------------------------------------------------------
# Rational (Fraction) vectors and linear solving.


def frac_vec(xs):
    return tuple(Fraction(x) for x in xs)


def dot(u, v) -> Fraction:
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def frac_solve(a, b):
    """Solve the square rational system a x = b; None if singular."""
    n = len(a)
    aug = [list(map(Fraction, row)) + [Fraction(bi)] for row, bi in zip(a, b)]
    for col in range(n):
        piv = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if piv is None:
            return None
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [x - f * y for x, y in zip(aug[r], aug[col])]
    return tuple(row[n] for row in aug)


def frac_solve_any(a, b):
    """A particular solution of a consistent rational system (free vars 0).

    Returns None when the system is inconsistent.  Works for singular and
    non-square systems.
    """
    m = len(a)
    n = len(a[0]) if m else 0
    aug = [list(map(Fraction, row)) + [Fraction(bi)] for row, bi in zip(a, b)]
    pivots = []
    r = 0
    for col in range(n):
        piv = next((i for i in range(r, m) if aug[i][col] != 0), None)
        if piv is None:
            continue
        aug[r], aug[piv] = aug[piv], aug[r]
        inv = 1 / aug[r][col]
        aug[r] = [x * inv for x in aug[r]]
        for i in range(m):
            if i != r and aug[i][col] != 0:
                f = aug[i][col]
                aug[i] = [x - f * y for x, y in zip(aug[i], aug[r])]
        pivots.append(col)
        r += 1
    for i in range(r, m):
        if aug[i][n] != 0:
            return None
    x = [Fraction(0)] * n
    for i, col in enumerate(pivots):
        x[col] = aug[i][n]
    return tuple(x)


def frac_rank(a) -> int:
    rows = [list(map(Fraction, r)) for r in a]
    n = len(rows)
    m = len(rows[0]) if n else 0
    rank = 0
    col = 0
    while rank < n and col < m:
        piv = next((r for r in range(rank, n) if rows[r][col] != 0), None)
        if piv is None:
            col += 1
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = 1 / rows[rank][col]
        rows[rank] = [x * inv for x in rows[rank]]
        for r in range(n):
            if r != rank and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [x - f * y for x, y in zip(rows[r], rows[rank])]
        rank += 1
        col += 1
    return rank
