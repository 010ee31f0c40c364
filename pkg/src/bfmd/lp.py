"""Dense two-phase simplex over Fractions.

Bland's rule is used for both the entering and leaving choice, which makes
the returned vertex a deterministic function of the input data. Mechanisms
rely on that: the same reports must always produce the same LP solution.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction


class LPError(Exception):
    pass


class Infeasible(LPError):
    pass


class Unbounded(LPError):
    pass


@dataclass(frozen=True)
class LPResult:
    x: tuple
    value: Fraction


def _pivot(T, basis, r, j):
    row = T[r]
    piv = row[j]
    if piv != 1:
        T[r] = row = [a / piv for a in row]
    for i, other in enumerate(T):
        if i != r:
            f = other[j]
            if f:
                T[i] = [a - f * b for a, b in zip(other, row)]
    basis[r] = j


def _reduced(T, basis, cost, ncols):
    cb = [cost[b] for b in basis]
    red = []
    for j in range(ncols):
        z = cost[j]
        for i, row in enumerate(T):
            if cb[i] and row[j]:
                z -= cb[i] * row[j]
        red.append(z)
    return red


def _run(T, basis, cost, allowed):
    ncols = len(cost)
    while True:
        red = _reduced(T, basis, cost, ncols)
        enter = next((j for j in range(ncols) if allowed[j] and red[j] > 0), None)
        if enter is None:
            return
        best = None
        for i, row in enumerate(T):
            a = row[enter]
            if a > 0:
                ratio = row[-1] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            raise Unbounded("objective unbounded")
        _pivot(T, basis, best[1], enter)


def simplex(c, A, b, senses=None, maximize=True) -> LPResult:
    """Optimize c.x subject to A x (<=|>=|=) b, x >= 0.

    `senses` is a list of "<=", ">=" or "=" (default all "<=").
    Raises Infeasible or Unbounded.
    """
    m = len(A)
    nv = len(c)
    senses = list(senses) if senses is not None else ["<="] * m
    rows = []
    for i in range(m):
        coeffs = [Fraction(a) for a in A[i]]
        rhs = Fraction(b[i])
        s = senses[i]
        if rhs < 0:
            coeffs = [-a for a in coeffs]
            rhs = -rhs
            s = {"<=": ">=", ">=": "<=", "=": "="}[s]
        rows.append((coeffs, rhs, s))

    n_slack = sum(1 for _, _, s in rows if s != "=")
    n_art = sum(1 for _, _, s in rows if s != "<=")
    ncols = nv + n_slack + n_art
    T = []
    basis = []
    art_cols = set()
    si, ai = nv, nv + n_slack
    for coeffs, rhs, s in rows:
        row = coeffs + [Fraction(0)] * (n_slack + n_art) + [rhs]
        if s == "<=":
            row[si] = Fraction(1)
            basis.append(si)
            si += 1
        else:
            if s == ">=":
                row[si] = Fraction(-1)
                si += 1
            row[ai] = Fraction(1)
            basis.append(ai)
            art_cols.add(ai)
            ai += 1
        T.append(row)

    if art_cols:
        cost1 = [Fraction(-1) if j in art_cols else Fraction(0) for j in range(ncols)]
        _run(T, basis, cost1, [True] * ncols)
        if sum(T[i][-1] for i in range(m) if basis[i] in art_cols) > 0:
            raise Infeasible("no feasible point")
        for i in range(m):
            if basis[i] in art_cols:
                j = next((j for j in range(nv + n_slack) if T[i][j] != 0), None)
                if j is not None:
                    _pivot(T, basis, i, j)

    sign = 1 if maximize else -1
    cost = [sign * Fraction(v) for v in c] + [Fraction(0)] * (n_slack + n_art)
    allowed = [j not in art_cols for j in range(ncols)]
    _run(T, basis, cost, allowed)

    x = [Fraction(0)] * nv
    for i, bj in enumerate(basis):
        if bj < nv:
            x[bj] = T[i][-1]
    value = sum((Fraction(c[j]) * x[j] for j in range(nv)), Fraction(0))
    return LPResult(tuple(x), value)
