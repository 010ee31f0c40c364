"""Mechanisms that pick one player and pay at most B to her, and the mixtures
that fall back on them."""
from __future__ import annotations

import math
from fractions import Fraction

from ..benchmarks import opt_values
from ..oracles import INFEASIBLE, ScaledKnapsack, constrained_demand, scaled_knapsack_cover
from ..subsets import submasks
from .core import MechanismError, Outcome, branch, pay_b_to_owner
from .demand_based import bench, cd_vcg, e_star_all, knapsack_vcg, split, subadd_demand_branch


def opts(ctx):
    return ctx.cached(("opts",), lambda: [o[0] for o in opt_values(ctx.inst, ctx.q)])


def second_opt(ctx, trace):
    """Cheapest set that beats every earlier player's opt (weakly) and every later one strictly."""
    inst, v, q = ctx.inst, ctx.v, ctx.q

    def compute():
        o = opts(ctx)
        best = None
        for i, g in enumerate(inst.group_masks):
            lo_w = max(o[:i], default=None)
            lo_s = max(o[i + 1:], default=None)
            for s in submasks(g):
                if lo_w is not None and v[s] < lo_w:
                    continue
                if lo_s is not None and v[s] <= lo_s:
                    continue
                key = (q[s], s)
                if best is None or key < best:
                    best = key
        return best[1]
    S = ctx.cached(("second_opt",), compute)
    trace.append(("S_hat", S))
    return S, pay_b_to_owner(ctx, S)


def run_second_opt(ctx, tape, params):
    trace = []
    S, pay = second_opt(ctx, trace)
    return Outcome(S, tuple(pay), (), tuple(trace))


def xos_gen_overbid(ctx, tape, params):
    trace = []
    if branch(tape, params.p):
        n1, n2, u1, u2 = split(ctx, tape)
        V1 = bench(ctx, "OPTalg", u1)
        kappa = params.lam * V1 / ctx.B
        trace += [("V1", V1), ("kappa", kappa)]
        S, pay = cd_vcg(ctx, ctx.v, "v", kappa, params.lam * V1, u2, trace)
    else:
        S, pay = second_opt(ctx, trace)
    return Outcome(S, tuple(pay), (), tuple(trace))


def subadd_unibf(ctx, tape, params):
    trace = []
    if branch(tape, params.p):
        S, pay = subadd_demand_branch(ctx, tape, params, trace)
    else:
        S, pay = second_opt(ctx, trace)
    return Outcome(S, tuple(pay), (), tuple(trace))


def proxy_val(ctx, tape, params, trace):
    n1, n2, u1, u2 = split(ctx, tape, "proxy_partition_bits")
    o = opts(ctx)
    val = max((o[i] / params.gamma for i in n1), default=Fraction(0))
    trace.append(("Val", val))
    return n2, val


def proxy_second_opt(ctx, tape, params, trace):
    """Additive case: first N2 player whose cheapest weight-n cover is affordable."""
    inst, v, q = ctx.inst, ctx.v, ctx.q
    n2, val = proxy_val(ctx, tape, params, trace)
    if val == 0:
        return 0, ctx.zeros()
    n = inst.n
    for i in n2:
        items = inst.groups[i]
        wt = tuple(math.floor(2 * n * v[1 << e] / val) for e in items)
        sk = ScaledKnapsack(items, wt, tuple(q[1 << e] for e in items), 0, n)
        T = scaled_knapsack_cover(sk, lambda s: q[s])
        trace.append((f"T*_{i}", T if T is not INFEASIBLE else None))
        if T is not INFEASIBLE and q[T] <= ctx.B:
            return T, pay_b_to_owner(ctx, T)
    return 0, ctx.zeros()


def run_proxy_second_opt(ctx, tape, params):
    trace = []
    S, pay = proxy_second_opt(ctx, tape, params, trace)
    return Outcome(S, tuple(pay), (), tuple(trace))


def additive_overbid(ctx, tape, params):
    trace = []
    if branch(tape, params.p):
        n1, n2, u1, u2 = split(ctx, tape)
        n = ctx.inst.n
        V1 = bench(ctx, "OPTalg", u1) / params.beta
        trace.append(("V1", V1))
        if V1 == 0 or params.lam == 0:
            S, pay = 0, ctx.zeros()
        else:
            weights = [math.ceil(n * ctx.v[1 << e] / (params.lam * V1)) for e in range(n)]
            kappa = Fraction(4 * n) / ctx.B
            trace.append(("kappa", kappa))
            S, pay = knapsack_vcg(ctx, weights, kappa, 4 * n, u2, trace)
    else:
        S, pay = proxy_second_opt(ctx, tape, params, trace)
    return Outcome(S, tuple(pay), (), tuple(trace))


def m1(ctx, i, val):
    """(chosen, payment, flag) of M(1) for player i at target val."""
    if val <= 0:
        return 0, Fraction(0), 0
    g = ctx.inst.group_masks[i]
    kappa = val / (2 * ctx.B)
    T = constrained_demand(ctx.v, ctx.q, kappa, val / 2, g)
    if ctx.v[T] - kappa * ctx.q[T] >= val / 8:
        return T, 2 * ctx.B / val * ctx.v[T] - ctx.B / 4, 1
    return 0, Fraction(0), 0


def m2(ctx, i, val):
    best = None
    for e in ctx.inst.groups[i]:
        if ctx.v[1 << e] >= val / 8:
            key = (ctx.q[1 << e], e)
            if best is None or key < best:
                best = key
    if best is not None and best[0] <= ctx.B:
        return 1 << best[1], ctx.B, 1
    return 0, Fraction(0), 0


def _single(fn):
    def run(ctx, tape, params):
        i = params.player
        if not 0 <= i < ctx.inst.k:
            raise MechanismError("player index out of range")
        if params.target is None:
            raise MechanismError("M1/M2 need params.target")
        S, p, flag = fn(ctx, i, params.target)
        pay = ctx.zeros()
        pay[i] = p
        return Outcome(S, tuple(pay), ((i, flag),), (("Val", params.target),))
    return run


run_m1 = _single(m1)
run_m2 = _single(m2)


def cdemd_second_opt(ctx, tape, params, trace):
    n2, val = proxy_val(ctx, tape, params, trace)
    j = 2 if tape.need("j_coin") else 1
    trace.append(("j", j))
    fn = m2 if j == 2 else m1
    flags = []
    for i in n2:
        S, p, flag = fn(ctx, i, val)
        flags.append((i, flag))
        if flag:
            pay = ctx.zeros()
            pay[i] = p
            return S, pay, tuple(flags)
    return 0, ctx.zeros(), tuple(flags)


def run_cdemd_second_opt(ctx, tape, params):
    trace = []
    S, pay, flags = cdemd_second_opt(ctx, tape, params, trace)
    return Outcome(S, tuple(pay), flags, tuple(trace))


def xos_supadd_overbid(ctx, tape, params):
    trace = []
    flags = ()
    if branch(tape, params.p):
        n1, n2, u1, u2 = split(ctx, tape)
        V1 = bench(ctx, "OPTalg", u1)
        kappa = params.lam * V1 / ctx.B
        trace += [("V1", V1), ("kappa", kappa)]
        S, pay = cd_vcg(ctx, ctx.v, "v", kappa, params.lam * V1, u2, trace)
    else:
        S, pay, flags = cdemd_second_opt(ctx, tape, params, trace)
    return Outcome(S, tuple(pay), flags, tuple(trace))


def optalg_uniform(ctx, tape, params):
    e = tape.need("index_coin")
    if not 0 <= e < ctx.inst.n:
        raise MechanismError("index_coin out of range")
    S = 1 << e if ctx.q[1 << e] <= ctx.B else 0
    return Outcome(S, tuple(pay_b_to_owner(ctx, S)), (), (("e", e),))


def optalg_emax(ctx, tape, params):
    S = e_star_all(ctx)
    return Outcome(S, tuple(pay_b_to_owner(ctx, S)), (), (("e*", S),))


def strawman_emax(ctx, tape, params):
    """Negative control: best affordable single item, pay B."""
    best, arg = None, 0
    for e in range(ctx.inst.n):
        if ctx.q[1 << e] <= ctx.B and (best is None or ctx.v[1 << e] > best):
            best, arg = ctx.v[1 << e], 1 << e
    return Outcome(arg, tuple(pay_b_to_owner(ctx, arg)), (), ())


def strawman_optstar(ctx, tape, params):
    """Negative control: best affordable single-player set, pay B."""
    best, arg = None, 0
    for g in ctx.inst.group_masks:
        for s in submasks(g):
            if ctx.q[s] <= ctx.B and (best is None or ctx.v[s] > best):
                best, arg = ctx.v[s], s
    return Outcome(arg, tuple(pay_b_to_owner(ctx, arg)), (), ())

