"""Exact rational linear programming, small scale.

A Phase-I simplex with Bland's rule over `Fraction` entries.  Only
feasibility questions are needed here (cone membership, recession rays,
order-unit tests), so the interface is deliberately narrow.
"""

from __future__ import annotations

from fractions import Fraction


def lp_feasible(a_eq, b_eq, num_vars):
    """Find x >= 0 with A x = b, exactly.

    Returns a tuple of Fractions, or None when infeasible.  Bland's rule
    guarantees termination.
    """
    m = len(a_eq)
    if m == 0:
        return tuple(Fraction(0) for _ in range(num_vars))
    rows = [[Fraction(x) for x in row] for row in a_eq]
    rhs = [Fraction(x) for x in b_eq]
    for i in range(m):
        if rhs[i] < 0:
            rows[i] = [-x for x in rows[i]]
            rhs[i] = -rhs[i]

    # tableau with one artificial variable per row; minimize their sum
    n_tot = num_vars + m
    tab = [rows[i] + [Fraction(1) if j == i else Fraction(0) for j in range(m)] + [rhs[i]] for i in range(m)]
    basis = [num_vars + i for i in range(m)]

    # objective row: sum of artificial rows (phase-I reduced costs)
    obj = [Fraction(0)] * (n_tot + 1)
    for i in range(m):
        for j in range(n_tot + 1):
            obj[j] += tab[i][j]

    while True:
        enter = None
        for j in range(num_vars):  # artificials never re-enter
            if obj[j] > 0:
                enter = j
                break
        if enter is None:
            break
        leave = None
        best = None
        for i in range(m):
            if tab[i][enter] > 0:
                ratio = tab[i][n_tot] / tab[i][enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave is None:
            # phase-I objective is bounded below by 0, so this cannot happen
            raise ArithmeticError("unbounded phase-I simplex")
        piv = tab[leave][enter]
        tab[leave] = [x / piv for x in tab[leave]]
        for i in range(m):
            if i != leave and tab[i][enter] != 0:
                f = tab[i][enter]
                tab[i] = [x - f * y for x, y in zip(tab[i], tab[leave])]
        if obj[enter] != 0:
            f = obj[enter]
            obj = [x - f * y for x, y in zip(obj, tab[leave])]
        basis[leave] = enter

    if obj[n_tot] != 0:
        return None
    x = [Fraction(0)] * num_vars
    for i, b in enumerate(basis):
        if b < num_vars:
            x[b] = tab[i][n_tot]
        elif tab[i][n_tot] != 0:
            return None  # artificial stuck at positive level
    return tuple(x)


def in_rational_cone(generators, v):
    """Is v a nonnegative rational combination of the generators?"""
    if not generators:
        return all(x == 0 for x in v)
    dim = len(v)
    a = [[Fraction(g[i]) for g in generators] for i in range(dim)]
    return lp_feasible(a, list(v), len(generators)) is not None
