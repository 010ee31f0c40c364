"""Mechanisms built on a (constrained) demand step over a random half of the players."""
from __future__ import annotations

import math
from fractions import Fraction

from ..benchmarks import exact_benchmark, frcover_gap, random_partition, xos_table
from ..oracles import ScaledKnapsack, bflp, cdlp, constrained_demand, incremental_demand, scaled_knapsack_max
from ..subsets import items_of
from .core import MechanismError, Outcome, branch, pay_b_to_owner, vcg_payments


def split(ctx, tape, name="partition_bits"):
    bits = tape.need(name)
    if len(bits) != ctx.inst.k:
        raise MechanismError(f"{name} needs {ctx.inst.k} bits")
    return random_partition(ctx.inst, tuple(bits))


def bench(ctx, kind, region, v=None, tag="v"):
    return ctx.cached((kind, region, tag), lambda: exact_benchmark(kind, ctx.inst, region, costs=ctx.reports,
                                                                   v=v).value)


def lp_star(ctx, region):
    return ctx.cached(("LP*", region), lambda: bflp(ctx.v, ctx.q, ctx.B, region).objective)


def v_max_all(ctx):
    return max(ctx.v[1 << e] for e in range(ctx.inst.n))


def e_star_all(ctx):
    """argmax v(e) over all items; every item is affordable under no-overbidding."""
    best, arg = None, 0
    for e in range(ctx.inst.n):
        if best is None or ctx.v[1 << e] > best:
            best, arg = ctx.v[1 << e], 1 << e
    return arg


def gamma_hat(inst, params):
    return params.gamma_hat if params.gamma_hat is not None else frcover_gap(inst.v, inst)


# --- expectation mechanisms (sample from a CDLP solution) -------------------

def _sample(support, coin):
    cum = Fraction(0)
    for s, w in support:
        cum += w
        if coin < cum:
            return s
    return 0


def _bf_terms(ctx, vtab, tag, kappa, cap, region, sol):
    """Per player: (expected payment, expected reported cost, Pr[touched])."""
    def compute():
        out = {}
        for i, g in enumerate(ctx.inst.group_masks):
            if not region & g:
                continue
            rest = cdlp(vtab, ctx.q, kappa, cap, region & ~g).objective
            mu = sum((w * (vtab[s] / kappa - ctx.q[s & ~g]) for s, w in sol.support), Fraction(0)) - rest / kappa
            ecost = sum((w * ctx.q[s & g] for s, w in sol.support), Fraction(0))
            touch = sum((w for s, w in sol.support if s & g), Fraction(0))
            out[i] = (mu, ecost, touch)
        return out
    return ctx.cached(("bf_terms", tag, kappa, cap, region), compute)


def bf_solution(ctx, vtab, tag, kappa, cap, region):
    if kappa == 0:
        return None
    return ctx.cached(("cdlp", tag, kappa, cap, region), lambda: cdlp(vtab, ctx.q, kappa, cap, region))


def bf_run(ctx, tape, setup):
    """Shared tail: solve the CDLP, sample T, pay scaled expected VCG payments."""
    vtab, tag, kappa, cap, region, trace = setup
    sol = bf_solution(ctx, vtab, tag, kappa, cap, region)
    if sol is None:
        return Outcome(0, tuple(ctx.zeros()), (), tuple(trace))
    T = _sample(sol.support, tape.need("sample_coin"))
    terms = _bf_terms(ctx, vtab, tag, kappa, cap, region, sol)
    pay = ctx.zeros()
    for i, (mu, ecost, touch) in terms.items():
        g = ctx.inst.group_masks[i]
        if not T & g:
            continue
        if ecost > 0:
            pay[i] = mu / ecost * ctx.q[T & g]
        elif touch > 0:
            pay[i] = mu / touch
    trace += [("x*", [[s, w] for s, w in sol.support]), ("T", T)]
    return Outcome(T, tuple(pay), (), tuple(trace))


def bf_sample_tapes(sol):
    """(sample_coin, probability) points covering the support of x* and the residual mass."""
    if sol is None:
        return [(Fraction(0), Fraction(1))]
    pts, cum = [], Fraction(0)
    for _, w in sol.support:
        pts.append((cum, w))
        cum += w
    if cum < 1:
        pts.append((cum, 1 - cum))
    return pts


def setup_bf_in_exp(ctx, tape, params):
    n1, n2, u1, u2 = split(ctx, tape)
    V1 = lp_star(ctx, u1)
    kappa = params.lam * V1 / ctx.B
    return ctx.v, "v", kappa, params.lam * V1, u2, [("V1", V1), ("kappa", kappa), ("U2", u2)]


def setup_subadd_bf_in_exp(ctx, tape, params):
    n1, n2, u1, u2 = split(ctx, tape)
    V1 = lp_star(ctx, u1)
    g = gamma_hat(ctx.inst, params)
    vx = xos_table(ctx.v, ctx.inst)
    kappa = params.lam * V1 / (g * ctx.B)
    return vx, "vx", kappa, params.lam * V1 / g, u2, [("V1", V1), ("gamma_hat", g), ("kappa", kappa)]


def log_levels(count):
    return max(0, math.ceil(math.log2(count))) if count > 1 else 0


def setup_optalg_logn_exp(ctx, tape, params):
    ell = tape.need("exponent_coin")
    if not 0 <= ell <= log_levels(ctx.inst.n):
        raise MechanismError("exponent_coin out of range")
    V1 = v_max_all(ctx) * 2 ** ell
    kappa = params.lam * V1 / ctx.B
    return ctx.v, "v", kappa, params.lam * V1, ctx.inst.universe, [("V1", V1), ("kappa", kappa)]


# --- universal mechanisms ----------------------------------------------------

def cd_vcg(ctx, vtab, tag, kappa, cap, region, trace):
    if kappa == 0:
        trace.append(("S*", 0))
        return 0, ctx.zeros()

    def compute():
        S = constrained_demand(vtab, ctx.q, kappa, cap, region)
        return S, vcg_payments(ctx, S, kappa, cap, region, vtab)
    S, pay = ctx.cached(("cd_vcg", tag, kappa, cap, region), compute)
    trace.append(("S*", S))
    return S, list(pay)


def unibf_xos_nob(ctx, tape, params):
    n1, n2, u1, u2 = split(ctx, tape)
    V1 = bench(ctx, "OPT_Bench", u1)
    kappa = params.lam * V1 / ctx.B
    trace = [("V1", V1), ("kappa", kappa)]
    if branch(tape, params.p):
        S, pay = cd_vcg(ctx, ctx.v, "v", kappa, params.lam * V1, u2, trace)
        return Outcome(S, tuple(pay), (), tuple(trace))
    e = e_star_all(ctx)
    trace.append(("e*", e))
    return Outcome(e, tuple(pay_b_to_owner(ctx, e)), (), tuple(trace))


def unibf_supadd_nob(ctx, tape, params):
    n1, n2, u1, u2 = split(ctx, tape)
    V1 = lp_star(ctx, u1)
    top = params.lam * V1 + v_max_all(ctx)
    kappa = top / ctx.B
    trace = [("V1", V1), ("kappa", kappa)]
    if branch(tape, params.p):
        S, pay = cd_vcg(ctx, ctx.v, "v", kappa, top, u2, trace)
        return Outcome(S, tuple(pay), (), tuple(trace))
    e = e_star_all(ctx)
    trace.append(("e*", e))
    return Outcome(e, tuple(pay_b_to_owner(ctx, e)), (), tuple(trace))


def knapsack_vcg(ctx, weights, kappa, capacity, region, trace):
    """Scaled-knapsack demand step with VCG payments on integer weights w."""
    inst, q = ctx.inst, ctx.q

    def solve(sub):
        items = tuple(items_of(sub))
        sk = ScaledKnapsack(items, tuple(weights[e] for e in items),
                            tuple(weights[e] - kappa * q[1 << e] for e in items), capacity)
        return scaled_knapsack_max(sk)

    def compute():
        S = solve(region)
        wt = [Fraction(0)] * (1 << inst.n)
        for s in range(1 << inst.n):
            low = s & -s
            if s:
                wt[s] = wt[s ^ low] + weights[low.bit_length() - 1]
        return S, vcg_payments(ctx, S, kappa, Fraction(capacity), region, wt, excluded=solve)
    S, pay = ctx.cached(("knap", tuple(weights), kappa, capacity, region), compute)
    trace.append(("S*", S))
    return S, list(pay)


def unibf_add_nob(ctx, tape, params):
    n1, n2, u1, u2 = split(ctx, tape)
    n = ctx.inst.n
    V1 = lp_star(ctx, u1)
    vmax = v_max_all(ctx)
    trace = [("V1", V1)]
    if branch(tape, params.p):
        if vmax == 0:
            trace.append(("S*", 0))
            return Outcome(0, tuple(ctx.zeros()), (), tuple(trace))
        b_new = n * params.lam * V1 / vmax + n
        weights = [math.ceil(n * ctx.v[1 << e] / vmax) for e in range(n)]
        kappa = (b_new + n) / ctx.B
        trace += [("B_new", b_new), ("kappa", kappa)]
        S, pay = knapsack_vcg(ctx, weights, kappa, math.floor(b_new + n), u2, trace)
        return Outcome(S, tuple(pay), (), tuple(trace))
    e = e_star_all(ctx)
    trace.append(("e*", e))
    return Outcome(e, tuple(pay_b_to_owner(ctx, e)), (), tuple(trace))


def subadd_demand_branch(ctx, tape, params, trace):
    """S* branch shared by the subadditive wrapper: demand on the XOS surrogate."""
    n1, n2, u1, u2 = split(ctx, tape)
    V1 = bench(ctx, "OPTalg", u1)
    g = gamma_hat(ctx.inst, params)
    vx = xos_table(ctx.v, ctx.inst)
    kappa = params.lam * V1 / (g * ctx.B)
    trace += [("V1", V1), ("gamma_hat", g), ("kappa", kappa)]
    return cd_vcg(ctx, vx, "vx", kappa, params.lam * V1 / g, u2, trace)


def submod_greedy(ctx, tape, params):
    n1, n2, u1, u2 = split(ctx, tape)
    V1 = lp_star(ctx, u1)
    lam = params.lam
    kappa = lam * V1 / ctx.B
    trace = [("V1", V1), ("kappa", kappa)]
    if kappa == 0:
        return Outcome(0, tuple(ctx.zeros()), (), tuple(trace))
    v, q = ctx.v, ctx.q
    T = 0
    pay = ctx.zeros()
    for i in n2:
        g = ctx.inst.group_masks[i]
        if v[T | g] > lam * V1:
            trace.append(("exit_at", i))
            break
        d = incremental_demand(v, T, g, kappa, q)
        marginal = v[T | d] - v[T]
        trace.append((f"Demd_{i}", d))
        if d:
            pay[i] = marginal / kappa
        T |= d
    return Outcome(T, tuple(pay), (), tuple(trace))


def optalg_logn(ctx, tape, params):
    """Universal variant: V1 = base * 2^ell for a random ell, demand step or e*."""
    inst = ctx.inst
    if params.sd_refine:
        n1, n2, u1, u2 = split(ctx, tape)
        zeta = max(len(g) for g in inst.groups)
        levels = log_levels(zeta)
        base = max(bench(ctx, "SDopt", u1), v_max_all(ctx))
        region = u2
    else:
        levels = log_levels(inst.n)
        base = v_max_all(ctx)
        region = inst.universe
    ell = tape.need("exponent_coin")
    if not 0 <= ell <= levels:
        raise MechanismError("exponent_coin out of range")
    V1 = base * 2 ** ell
    kappa = params.lam * V1 / ctx.B
    trace = [("V1", V1), ("kappa", kappa)]
    if branch(tape, params.p):
        S, pay = cd_vcg(ctx, ctx.v, "v", kappa, params.lam * V1, region, trace)
        return Outcome(S, tuple(pay), (), tuple(trace))
    e = e_star_all(ctx)
    trace.append(("e*", e))
    return Outcome(e, tuple(pay_b_to_owner(ctx, e)), (), tuple(trace))
