"""Mechanism catalog, default parameters, tape spaces and the run entry point."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable

from ..instances import CostClass, CostFunction, Instance, Valuation
from ..subsets import from_local
from . import demand_based as db
from . import single_owner as so
from .core import (
    MechanismError,
    MechParams,
    Outcome,
    RandomTape,
    branch_points,
    check_requirements,
    context,
    partitions,
)


@dataclass(frozen=True)
class MechSpec:
    id: str
    kind: str  # "universal" | "expectation" | "control"
    valuation: str
    costs: str  # "general" | "superadditive" | "additive"
    no_overbidding: bool
    run: Callable
    defaults: Callable
    tapes: Callable
    doc: str = ""


def _fixed(**kw):
    def defaults(inst, params):
        return params.with_defaults(**{k: Fraction(v) for k, v in kw.items()})
    return defaults


def _none(inst, params):
    return params


def _additive_overbid_defaults(inst, params):
    p = 1 / (1 + params.gamma * (1 + 1 / (64 * params.beta)))
    return params.with_defaults(lam=Fraction(1, 8), p=p)


def _xos_supadd_defaults(inst, params):
    return params.with_defaults(lam=Fraction(1, 2), p=1 / (1 + Fraction(17, 4) * params.gamma))


def _subadd_unibf_defaults(inst, params):
    g = db.gamma_hat(inst, params)
    return params.with_defaults(lam=Fraction(1, 2), p=128 * g / (144 * g + 1))


# --- tape spaces ---------------------------------------------------------------

def _single_tape(ctx, params):
    return [(RandomTape(), Fraction(1))]


def _partition_tapes(ctx, params, field="partition_bits"):
    k = ctx.inst.k
    w = Fraction(1, 2 ** k)
    return [(RandomTape(**{field: b}), w) for b in partitions(k)]


def _proxy_tapes(ctx, params):
    return _partition_tapes(ctx, params, "proxy_partition_bits")


def _proxy_j_tapes(ctx, params):
    return [(RandomTape(proxy_partition_bits=t.proxy_partition_bits, j_coin=j), w / 2)
            for t, w in _proxy_tapes(ctx, params) for j in (False, True)]


def _with(t: RandomTape, **kw):
    d = {f: getattr(t, f) for f in t.__dataclass_fields__}
    d.update(kw)
    return RandomTape(**d)


def _mixture(fallback):
    """Branch coin: S* branch over partitions with mass p, fallback tapes with mass 1-p."""
    def tapes(ctx, params):
        out = []
        for coin, pw in branch_points(params.p):
            if coin < params.p:
                src = _partition_tapes(ctx, params)
            else:
                src = fallback(ctx, params)
            out += [(_with(t, branch_coin=coin), pw * w) for t, w in src]
        return out
    return tapes


def _bf_tapes(setup, outer):
    def tapes(ctx, params):
        out = []
        for t, w in outer(ctx, params):
            vtab, tag, kappa, cap, region, _ = setup(ctx, t, params)
            sol = db.bf_solution(ctx, vtab, tag, kappa, cap, region)
            out += [(_with(t, sample_coin=c), w * x) for c, x in db.bf_sample_tapes(sol)]
        return out
    return tapes


def _bf_run(setup):
    def run(ctx, tape, params):
        return db.bf_run(ctx, tape, setup(ctx, tape, params))
    return run


def _exponent_tapes(levels_of):
    def tapes(ctx, params):
        L = levels_of(ctx.inst)
        return [(RandomTape(exponent_coin=l), Fraction(1, L + 1)) for l in range(L + 1)]
    return tapes


def _logn_levels(inst):
    return db.log_levels(inst.n)


def _zeta_levels(inst):
    return db.log_levels(max(len(g) for g in inst.groups))


def _logn_tapes(ctx, params):
    if params.sd_refine:
        outer = [(_with(t, exponent_coin=e.exponent_coin), w * we)
                 for t, w in _partition_tapes(ctx, params)
                 for e, we in _exponent_tapes(_zeta_levels)(ctx, params)]
    else:
        outer = _exponent_tapes(_logn_levels)(ctx, params)
    return [(_with(t, branch_coin=c), w * pw) for t, w in outer for c, pw in branch_points(params.p)]


def _uniform_index_tapes(ctx, params):
    n = ctx.inst.n
    return [(RandomTape(index_coin=e), Fraction(1, n)) for e in range(n)]


# --- OPTALG_ZETA: single-dimensional slices --------------------------------------

def _slice_cost(c: CostFunction, t, j):
    return CostFunction(t, (t,), (Fraction(0), c.table[1 << j]), True, True)


@lru_cache(maxsize=1024)
def zeta_slice(inst: Instance, reports: tuple, j: int):
    """Sub-instance on the j-th item of every player that has one."""
    players = tuple(i for i, g in enumerate(inst.groups) if len(g) > j)
    items = tuple(inst.groups[i][j] for i in players)
    m = len(items)
    table = [inst.v[from_local(s, items)] for s in range(1 << m)]
    v = Valuation(m, "table", tuple(table), inst.v.declared_class, inst.v.monotone)
    classes, true = [], []
    for t, i in enumerate(players):
        members = []
        for c in inst.cost_classes[i].members:
            sc = _slice_cost(c, t, j)
            if sc not in members:
                members.append(sc)
        classes.append(CostClass(t, tuple(members)))
        true.append(_slice_cost(inst.true_costs[i], t, j))
    sub = Instance(m, tuple((t,) for t in range(m)), inst.budget, v, tuple(true), tuple(classes),
                   inst.no_overbidding, {"slice": str(j)})
    sub_reports = tuple(_slice_cost(reports[i], t, j) for t, i in enumerate(players))
    return sub, sub_reports, players, items


def optalg_zeta(ctx, tape, params):
    inst = ctx.inst
    zeta = max(len(g) for g in inst.groups)
    j = tape.need("index_coin")
    if not 0 <= j < zeta:
        raise MechanismError("index_coin out of range")
    sub, sub_reports, players, items = zeta_slice(inst, ctx.reports, j)
    bits = tape.need("partition_bits")
    sub_tape = _with(tape, partition_bits=tuple(bits[i] for i in players), index_coin=None)
    out = run_mechanism(params.hook, sub, sub_reports, sub_tape,
                        MechParams(lam=params.lam, p=params.p))
    chosen = from_local(out.chosen, items)
    pay = ctx.zeros()
    for t, i in enumerate(players):
        pay[i] = out.payments[t]
    return Outcome(chosen, tuple(pay), (), (("j", j),) + out.trace)


def _zeta_tapes(ctx, params):
    zeta = max(len(g) for g in ctx.inst.groups)
    hook = REGISTRY[params.hook]
    hp = hook.defaults(ctx.inst, MechParams(lam=params.lam, p=params.p))
    out = []
    for j in range(zeta):
        for t, w in _partition_tapes(ctx, params):
            for c, pw in branch_points(hp.p):
                out.append((_with(t, index_coin=j, branch_coin=c), w * pw / zeta))
    return out


# --- catalog --------------------------------------------------------------------

def _spec(id, kind, valuation, costs, nob, run, defaults, tapes, doc):
    return MechSpec(id, kind, valuation, costs, nob, run, defaults, tapes, doc)


_BF = _bf_tapes(db.setup_bf_in_exp, _partition_tapes)
_SBF = _bf_tapes(db.setup_subadd_bf_in_exp, _partition_tapes)
_LBF = _bf_tapes(db.setup_optalg_logn_exp, _exponent_tapes(_logn_levels))

_SPECS = [
    _spec("BF_IN_EXP", "expectation", "xos", "general", False, _bf_run(db.setup_bf_in_exp),
          _fixed(lam="1/2"), _BF, "LP-sampling mechanism, budget-feasible in expectation"),
    _spec("UNIBF_XOS_NOB", "universal", "xos", "general", True, db.unibf_xos_nob,
          _fixed(lam="1/2", p="4/5"), _mixture(_partition_tapes), "constrained demand on U2, else e*"),
    _spec("UNIBF_SUPADD_NOB", "universal", "xos", "superadditive", True, db.unibf_supadd_nob,
          _fixed(lam="2/5", p="14/15"), _mixture(_partition_tapes), "superadditive-cost variant"),
    _spec("UNIBF_ADD_NOB", "universal", "xos", "additive", True, db.unibf_add_nob,
          _fixed(lam="1/2", p="12/17"), _mixture(_partition_tapes), "scaled-knapsack variant"),
    _spec("SECOND_OPT", "universal", "subadditive", "general", False, so.run_second_opt,
          _none, _single_tape, "second-best single player, pays B"),
    _spec("XOS_GEN_OVERBID", "universal", "xos", "general", False, so.xos_gen_overbid,
          _fixed(lam="1/2", p="128/145"), _mixture(_single_tape), "demand step or second-opt"),
    _spec("SECOND_OPT_POLY", "universal", "additive", "additive", False, so.run_proxy_second_opt,
          _none, _proxy_tapes, "proxy partition, weight-n cover"),
    _spec("ADDITIVE_OVERBID", "universal", "additive", "additive", False, so.additive_overbid,
          _additive_overbid_defaults, _mixture(_proxy_tapes), "knapsack step or proxy cover"),
    _spec("M1", "universal", "subadditive", "general", False, so.run_m1,
          _none, _single_tape, "single-player capped demand at target Val"),
    _spec("M2", "universal", "subadditive", "general", False, so.run_m2,
          _none, _single_tape, "single-player cheapest item worth Val/8"),
    _spec("SECOND_OPT_CDEMD", "universal", "subadditive", "superadditive", False, so.run_cdemd_second_opt,
          _none, _proxy_j_tapes, "proxy partition, M1 or M2 per player"),
    _spec("XOS_SUPADD_OVERBID", "universal", "xos", "superadditive", False, so.xos_supadd_overbid,
          _xos_supadd_defaults, _mixture(_proxy_j_tapes), "demand step or constrained-demand proxy"),
    _spec("SUBMOD_GREEDY", "universal", "submodular", "general", False, db.submod_greedy,
          _fixed(lam="1/3"), _partition_tapes, "sequential incremental demand"),
    _spec("SUBADD_BF_IN_EXP", "expectation", "subadditive", "general", False,
          _bf_run(db.setup_subadd_bf_in_exp), _fixed(lam="1/2"), _SBF, "LP sampling on the XOS surrogate"),
    _spec("SUBADD_UNIBF", "universal", "subadditive", "general", False, so.subadd_unibf,
          _subadd_unibf_defaults, _mixture(_single_tape), "surrogate demand step or second-opt"),
    _spec("OPTALG_UNIFORM", "universal", "subadditive", "general", False, so.optalg_uniform,
          _none, _uniform_index_tapes, "uniform random item, pay B if affordable"),
    _spec("OPTALG_EMAX", "universal", "subadditive", "general", True, so.optalg_emax,
          _none, _single_tape, "most valuable item, pay B"),
    _spec("OPTALG_ZETA", "universal", "xos", "general", True, optalg_zeta,
          _none, _zeta_tapes, "random item slice, single-dimensional hook"),
    _spec("OPTALG_LOGN", "universal", "xos", "general", True, db.optalg_logn,
          _fixed(lam="1/2", p="1/2"), _logn_tapes, "V1 = base * 2^ell guess, demand or e*"),
    _spec("OPTALG_LOGN_EXP", "expectation", "xos", "general", False, _bf_run(db.setup_optalg_logn_exp),
          _fixed(lam="1/2"), _LBF, "V1 = v_max * 2^ell guess, LP sampling"),
    _spec("STRAWMAN_EMAX", "control", "subadditive", "general", False, so.strawman_emax,
          _none, _single_tape, "negative control: best affordable item, pay B"),
    _spec("STRAWMAN_OPTSTAR", "control", "subadditive", "general", False, so.strawman_optstar,
          _none, _single_tape, "negative control: best affordable single-player set, pay B"),
]

REGISTRY = {s.id: s for s in _SPECS}
UNIVERSAL = tuple(s.id for s in _SPECS if s.kind == "universal")
EXPECTATION = tuple(s.id for s in _SPECS if s.kind == "expectation")
CONTROLS = tuple(s.id for s in _SPECS if s.kind == "control")


def get_spec(mech: str) -> MechSpec:
    if mech not in REGISTRY:
        raise MechanismError(f"unknown mechanism {mech!r}")
    return REGISTRY[mech]


def resolve_params(mech, inst, params=None) -> MechParams:
    return get_spec(mech).defaults(inst, params or MechParams())


def _reports(inst, reported):
    if reported is None:
        return inst.true_costs
    reported = tuple(reported)
    if len(reported) != inst.k:
        raise MechanismError(f"need {inst.k} reported cost functions")
    for i, c in enumerate(reported):
        if c.owner != i or c.items != inst.groups[i]:
            raise MechanismError(f"report {i} does not match player {i}'s items")
    return reported


def run_mechanism(mech: str, inst: Instance, reported=None, tape: RandomTape | None = None,
                  params: MechParams | None = None) -> Outcome:
    spec = get_spec(mech)
    reports = _reports(inst, reported)
    check_requirements(spec, inst, reports)
    params = spec.defaults(inst, params or MechParams())
    return spec.run(context(inst, reports), tape or RandomTape(), params)


def tape_space(mech: str, inst: Instance, reported=None, params: MechParams | None = None) -> list:
    """(tape, probability) pairs covering every outcome; depends on reports only for LP sampling."""
    spec = get_spec(mech)
    reports = _reports(inst, reported)
    check_requirements(spec, inst, reports)
    params = spec.defaults(inst, params or MechParams())
    return spec.tapes(context(inst, reports), params)
