"""Demand-style oracles by exhaustive enumeration, knapsack DPs, and LP wrappers.

`v` and `q` are anything indexable by subset mask (a Valuation, or a table
of aggregate costs). Every argmax scans submasks in ascending order and keeps
the first maximum, so ties go to the smallest bitmask.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .lp import simplex
from .subsets import submasks


class _Infeasible:
    def __repr__(self):
        return "INFEASIBLE"

    def __bool__(self):
        return False


INFEASIBLE = _Infeasible()


def demand(v, q, kappa, A: int) -> int:
    best, arg = None, 0
    for s in submasks(A):
        val = v[s] - kappa * q[s]
        if best is None or val > best:
            best, arg = val, s
    return arg


def constrained_demand(v, q, kappa, cap, A: int) -> int:
    """argmax v(S) - kappa q(S) over S within A with v(S) <= cap (None means no cap)."""
    best, arg = None, 0
    for s in submasks(A):
        vs = v[s]
        if cap is not None and vs > cap:
            continue
        val = vs - kappa * q[s]
        if best is None or val > best:
            best, arg = val, s
    return arg


def knapsack_cover(v, q, val, A: int):
    best, arg = None, INFEASIBLE
    for s in submasks(A):
        if v[s] >= val and (best is None or q[s] < best):
            best, arg = q[s], s
    return arg


def incremental_demand(v, T: int, Gi: int, kappa, q) -> int:
    """argmax over S within Gi of v(S|T) - kappa q(S)."""
    base = v[T]
    best, arg = None, 0
    for s in submasks(Gi):
        val = v[s | T] - base - kappa * q[s]
        if best is None or val > best:
            best, arg = val, s
    return arg


@dataclass(frozen=True)
class FractionalSolution:
    support: tuple
    objective: Fraction

    @property
    def total(self) -> Fraction:
        return sum((w for _, w in self.support), Fraction(0))

    def weight(self, key) -> Fraction:
        return next((w for s, w in self.support if s == key), Fraction(0))


def solve_lp(columns, row_bounds, sense="max", row_senses=None) -> FractionalSolution:
    """Solve over explicit columns [(key, objective, [row coefficients])].

    Raises lp.Infeasible / lp.Unbounded.
    """
    keys = [c[0] for c in columns]
    obj = [Fraction(c[1]) for c in columns]
    m = len(row_bounds)
    A = [[Fraction(c[2][r]) for c in columns] for r in range(m)]
    res = simplex(obj, A, row_bounds, row_senses, maximize=(sense == "max"))
    support = tuple((k, x) for k, x in zip(keys, res.x) if x > 0)
    return FractionalSolution(support, res.value)


def bflp(v, q, budget, A: int) -> FractionalSolution:
    """max sum v(S) x_S  s.t.  sum q(S) x_S <= B, sum x_S <= 1, over nonempty S within A."""
    cols = [(s, v[s], (q[s], 1)) for s in submasks(A) if s]
    if not cols:
        return FractionalSolution((), Fraction(0))
    return solve_lp(cols, [budget, 1])


def cdlp(v, q, kappa, cap, A: int) -> FractionalSolution:
    """max sum (v(S) - kappa q(S)) x_S  s.t.  sum v(S) x_S <= cap, sum x_S <= 1."""
    cols = [(s, v[s] - kappa * q[s], (v[s], 1)) for s in submasks(A) if s]
    if not cols:
        return FractionalSolution((), Fraction(0))
    return solve_lp(cols, [cap, 1])


@dataclass(frozen=True)
class ScaledKnapsack:
    items: tuple
    weights: tuple
    profits: tuple
    capacity: int = 0
    target: int = 0

    def __post_init__(self):
        if any(int(w) != w or w < 0 for w in self.weights):
            raise ValueError("weights must be nonnegative integers")
        if len(self.items) != len(self.weights) or len(self.items) != len(self.profits):
            raise ValueError("items, weights and profits must align")


def scaled_knapsack_max(sk: ScaledKnapsack) -> int:
    """Max total profit subject to total weight <= capacity; ties to smallest mask.

    DP over items in ascending id order. Among sets of equal profit and
    weight, one without the newest item always has the smaller mask, so
    preferring "skip" on ties keeps the smallest mask per cell.
    """
    cap = int(sk.capacity) if sk.capacity >= 0 else -1
    if cap < 0:
        return 0
    order = sorted(range(len(sk.items)), key=lambda j: sk.items[j])
    dp = {0: (Fraction(0), 0)}
    for j in order:
        w, p, bit = int(sk.weights[j]), Fraction(sk.profits[j]), 1 << sk.items[j]
        nxt = dict(dp)
        for wt, (pr, m) in dp.items():
            nw = wt + w
            if nw > cap:
                continue
            cand = (pr + p, m | bit)
            cur = nxt.get(nw)
            if cur is None or cand[0] > cur[0]:
                nxt[nw] = cand
        dp = nxt
    best = None
    for wt in sorted(dp):
        pr, m = dp[wt]
        if best is None or pr > best[0] or (pr == best[0] and m < best[1]):
            best = (pr, m)
    return best[1]


def scaled_knapsack_cover(sk: ScaledKnapsack, costs=None):
    """Min cost subject to total weight >= target; INFEASIBLE if unreachable.

    `costs` maps a mask to its (possibly non-additive) cost; it defaults to the
    additive cost given by `profits`. Exhaustive, ties to smallest mask.
    """
    if sum(int(w) for w in sk.weights) < sk.target:
        return INFEASIBLE
    full = 0
    for e in sk.items:
        full |= 1 << e
    wmap = {1 << e: int(w) for e, w in zip(sk.items, sk.weights)}
    pmap = {1 << e: Fraction(p) for e, p in zip(sk.items, sk.profits)}
    best, arg = None, INFEASIBLE
    for s in submasks(full):
        wt = sum(w for b, w in wmap.items() if s & b)
        if wt < sk.target:
            continue
        cost = costs(s) if costs is not None else sum((p for b, p in pmap.items() if s & b), Fraction(0))
        if best is None or cost < best:
            best, arg = cost, s
    return arg
