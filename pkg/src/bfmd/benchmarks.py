"""Exact benchmarks, pruning, random partitions, the player-respecting XOS surrogate,
and the (2+eps) algorithm for subadditive values."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any

from .instances import Instance, costs_of
from .oracles import FractionalSolution, bflp, demand, solve_lp
from .subsets import items_of, popcount, submasks

KINDS = ("OPTalg", "OPT_Bench", "OPT_Bench_l", "OPT_Param", "LP*", "LP*_Bench", "V*_j", "LP*_j",
         "opt_i", "opt2", "opt*", "v_max", "e*", "SDopt")


@dataclass(frozen=True)
class BenchmarkResult:
    kind: str
    value: Fraction
    witness: Any
    region: int


def max_group_value(v, S, inst) -> Fraction:
    return max((v[S & g] for g in inst.group_masks), default=Fraction(0))


def vbench(v, S, inst, ell=1) -> Fraction:
    return v[S] - ell * max_group_value(v, S, inst)


def _argmax(cands, score):
    best, arg = None, 0
    for s in cands:
        val = score(s)
        if val is not None and (best is None or val > best):
            best, arg = val, s
    return (best if best is not None else Fraction(0)), arg


def opt_values(inst, q, v=None, region=None) -> list:
    """(opt_i, witness) per player: best affordable set inside G_i (and region)."""
    v = v or inst.v
    region = inst.universe if region is None else region
    out = []
    for g in inst.group_masks:
        out.append(_argmax(submasks(g & region), lambda s: v[s] if q[s] <= inst.budget else None))
    return out


def lp_star_bench(v, q, budget, region, inst) -> FractionalSolution:
    """max sum v(S)x_S - V  s.t. cost row <= B, sum x <= 1, sum_S v(S & G_i) x_S <= V for every i.

    The extra variable V is reported in the support under key -1.
    """
    cols = []
    groups = inst.group_masks
    for s in submasks(region):
        if s:
            cols.append((s, v[s], [q[s], Fraction(1)] + [v[s & g] for g in groups]))
    cols.append((-1, Fraction(-1), [Fraction(0), Fraction(0)] + [Fraction(-1)] * len(groups)))
    return solve_lp(cols, [budget, Fraction(1)] + [Fraction(0)] * len(groups))


def exact_benchmark(kind: str, inst: Instance, region: int | None = None, param=None,
                    costs=None, v=None) -> BenchmarkResult:
    """Exact value and witness of a benchmark over `region` (default: all items).

    `costs` is a cost profile (default: true costs); `v` overrides the valuation.
    """
    region = inst.universe if region is None else region
    q = costs_of(inst, costs)
    v = v or inst.v
    B = inst.budget
    subs = submasks(region)

    def feasible(score):
        return lambda s: score(s) if q[s] <= B else None

    if kind in ("OPTalg", "V*_j"):
        val, w = _argmax(subs, feasible(lambda s: v[s]))
    elif kind in ("OPT_Bench", "OPT_Bench_l"):
        ell = Fraction(1 if param is None else param)
        val, w = _argmax(subs, feasible(lambda s: vbench(v, s, inst, ell)))
    elif kind == "OPT_Param":
        if param is None:
            raise ValueError("OPT_Param needs an epsilon parameter")
        eps = Fraction(param)
        if not 0 <= eps <= 1:
            raise ValueError("OPT_Param needs epsilon in [0, 1]")

        def score(s):
            if q[s] > B or any(v[s & g] > eps * v[s] for g in inst.group_masks):
                return None
            return v[s]
        val, w = _argmax(subs, score)
    elif kind in ("LP*", "LP*_j"):
        sol = bflp(v, q, B, region)
        val, w = sol.objective, sol
    elif kind == "LP*_Bench":
        sol = lp_star_bench(v, q, B, region, inst)
        val, w = sol.objective, sol
    elif kind in ("opt_i", "opt2", "opt*"):
        opts = opt_values(inst, q, v, region)
        if kind == "opt_i":
            if param is None or not 0 <= int(param) < inst.k:
                raise ValueError("opt_i needs a player index in range")
            val, w = opts[int(param)]
        elif kind == "opt*":
            val, w = max(opts, key=lambda o: o[0])
            w = next(s for x, s in opts if x == val)
        else:
            ranked = sorted((o[0] for o in opts), reverse=True)
            val = ranked[1] if len(ranked) > 1 else Fraction(0)
            w = next((s for x, s in opts if x == val), 0)
    elif kind in ("v_max", "e*"):
        best, arg = None, 0
        for e in items_of(region):
            if q[1 << e] <= B and (best is None or v[1 << e] > best):
                best, arg = v[1 << e], 1 << e
        val, w = (best if best is not None else Fraction(0)), arg
    elif kind == "SDopt":
        gm = inst.group_masks

        def score(s):
            if q[s] > B or any(popcount(s & g) > 1 for g in gm):
                return None
            return v[s]
        val, w = _argmax(subs, score)
    else:
        raise ValueError(f"unknown benchmark kind {kind!r}")
    return BenchmarkResult(kind, val, w, region)


def benchmark(kind, inst, **kw) -> Fraction:
    return exact_benchmark(kind, inst, **kw).value


def random_partition(inst: Instance, bits):
    if len(bits) != inst.k:
        raise ValueError("one partition bit per player required")
    n1 = tuple(i for i in range(inst.k) if bits[i])
    n2 = tuple(i for i in range(inst.k) if not bits[i])
    return n1, n2, inst.region(n1), inst.region(n2)


def _longest_prefix(g, elems, val) -> int:
    t, best = 0, 0
    for e in elems:
        t |= 1 << e
        if g[t] <= val:
            best = t
    return best


def prune(g, S: int, val, budget, mode: str, inst: Instance, costs=None) -> int:
    """Cheap subset T of S with g(T) <= val and c(T) <= B/2, by prefix construction.

    general mode grows a prefix of players, superadditive mode a prefix of items.
    """
    q = costs_of(inst, costs)
    if q[S] > budget:
        raise ValueError("prune needs c(S) <= B")
    half = Fraction(budget) / 2
    if mode == "general":
        chunks = [S & gm for gm in inst.group_masks if S & gm]
    elif mode == "superadditive":
        chunks = [1 << e for e in items_of(S)]
    else:
        raise ValueError(f"unknown prune mode {mode!r}")
    s1 = 0
    for ch in chunks:
        s1 |= ch
        if q[s1] > half or g[s1] >= val:
            break
    if q[s1] <= half:
        return _longest_prefix(g, items_of(s1), val)
    return _longest_prefix(g, items_of(S & ~s1), val)


def prune_bound(g, S, val, mode, inst) -> Fraction:
    """The value g(T) must strictly exceed."""
    theta = max((g[1 << e] for e in items_of(S)), default=Fraction(0))
    if mode == "general":
        return min(vbench(g, S, inst) - val, val - theta)
    return min(g[S] - val, val) - theta


def player_respecting_xos(g, S: int, inst: Instance) -> Fraction:
    """Fractional cover of S by player-respecting subsets at cost g."""
    parts = [S & gm for gm in inst.group_masks if S & gm]
    if not parts:
        return Fraction(0)
    if len(parts) == 1:
        return g[S]
    kp = len(parts)
    cols = []
    for J in range(1, 1 << kp):
        t = 0
        for j in range(kp):
            if J >> j & 1:
                t |= parts[j]
        cols.append((t, g[t], [Fraction(J >> j & 1) for j in range(kp)]))
    sol = solve_lp(cols, [Fraction(1)] * kp, sense="min", row_senses=["="] * kp)
    return sol.objective


@lru_cache(maxsize=256)
def xos_table(g, inst: Instance) -> tuple:
    return tuple(player_respecting_xos(g, s, inst) for s in range(1 << inst.n))


def frcover_gap(g, inst: Instance) -> Fraction:
    """max over S of g(S) / v_xos(S) (1 where both vanish)."""
    t = xos_table(g, inst)
    gap = Fraction(1)
    for s in range(1, 1 << inst.n):
        if t[s] > 0:
            gap = max(gap, g[s] / t[s])
    return gap


def _greedy_fill(q, budget, first, rest) -> int:
    t = 0
    for e in items_of(first) + items_of(rest & ~first):
        if q[t | 1 << e] <= budget:
            t |= 1 << e
    return t


def subadd_algo_approx(inst: Instance, eps, costs=None) -> int:
    """Budget-feasible set of value >= (1-eps) LP*/2 for subadditive v, superadditive c."""
    eps = Fraction(eps)
    if eps <= 0:
        raise ValueError("epsilon must be positive")
    q = costs_of(inst, costs)
    profile = tuple(costs) if costs is not None else inst.true_costs
    if not all(c.superadditive for c in profile):
        raise ValueError("subadd_algo_approx needs superadditive costs")
    v, B, U = inst.v, inst.budget, inst.universe
    lp = bflp(v, q, B, U).objective
    if eps >= 1:
        # plain variant: kappa = 2LP*/(3B), single-item threshold LP*/3
        e_best = exact_benchmark("e*", inst, costs=costs)
        if e_best.value >= lp / 3:
            return e_best.witness
        s = demand(v, q, 2 * lp / (3 * B), U)
        return _greedy_fill(q, B, 0, s)
    e_best = exact_benchmark("e*", inst, costs=costs)
    if e_best.value >= lp / 2:
        return e_best.witness
    heavy = sum(1 << e for e in range(inst.n) if q[1 << e] >= eps * B)
    light = U & ~heavy
    kappa = lp / (2 * B)
    limit = int(1 / eps)
    best, arg = None, 0
    for A in submasks(heavy):
        if popcount(A) > limit or q[A] > B:
            continue
        s = demand(v, q, kappa, A | light)
        t = _greedy_fill(q, B, A & s, s)
        if best is None or v[t] > best:
            best, arg = v[t], t
    return arg
