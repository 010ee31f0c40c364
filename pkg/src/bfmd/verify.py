"""Exhaustive audits: truthfulness, IR, NPT, budget; exact expectations; lemma suites."""
from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction

from .benchmarks import (
    exact_benchmark,
    frcover_gap,
    lp_star_bench,
    prune,
    prune_bound,
    random_partition,
    vbench,
    xos_table,
)
from .instances import Instance, costs_of, fstr
from .mechanisms import MechParams, RandomTape, get_spec, resolve_params, run_mechanism, tape_space
from .mechanisms.core import partitions
from .oracles import bflp, cdlp
from .subsets import popcount

TAPE_GUARD = 1 << 22


class TapeOverflow(RuntimeError):
    pass


@dataclass
class Check:
    name: str
    passed: bool
    counterexample: dict | None = None
    detail: str = ""

    def to_json(self):
        return {"name": self.name, "passed": self.passed, "counterexample": self.counterexample,
                "detail": self.detail}


@dataclass
class AuditReport:
    mechanism: str
    instance: str
    mode: str = ""
    checks: list = field(default_factory=list)
    expected_value: Fraction | None = None
    benchmark_ratios: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name) -> Check:
        return next(c for c in self.checks if c.name == name)

    def failures(self):
        return [c for c in self.checks if not c.passed]

    def to_json(self):
        return {
            "mechanism": self.mechanism,
            "instance": self.instance,
            "mode": self.mode,
            "passed": self.passed,
            "checks": [c.to_json() for c in self.checks],
            "expected_value": None if self.expected_value is None else fstr(self.expected_value),
            "benchmark_ratios": {k: (None if v is None else fstr(v)) for k, v in self.benchmark_ratios.items()},
            "params": self.params,
        }


class _Recorder:
    """Keeps the first counterexample per check name."""

    def __init__(self, names):
        self.first = {n: None for n in names}
        self.count = {n: 0 for n in names}
        self.notes = {}

    def fail(self, name, cx):
        self.count[name] += 1
        if self.first[name] is None:
            self.first[name] = cx

    def checks(self):
        out = []
        for n, cx in self.first.items():
            detail = f"{self.count[n]} violations" if self.count[n] else self.notes.get(n, "")
            out.append(Check(n, cx is None, cx, detail))
        return out


def enumerate_tapes(mech: str, inst: Instance, params: MechParams | None = None, reported=None,
                    guard: int = TAPE_GUARD) -> list:
    if inst.k > 20:
        raise TapeOverflow("too many players for exact tape enumeration; use Monte Carlo mode")
    tapes = tape_space(mech, inst, reported, params)
    if len(tapes) > guard:
        raise TapeOverflow(f"{len(tapes)} tapes exceed the guard {guard}; use Monte Carlo mode")
    return tapes


def sample_tapes(mech, inst, params=None, seed=0, count=1000, reported=None) -> list:
    """Monte Carlo fallback: draw tapes from the exact tape distribution."""
    tapes = tape_space(mech, inst, reported, params)
    rng = random.Random(seed)
    drawn = rng.choices([t for t, _ in tapes], weights=[float(w) for _, w in tapes], k=count)
    return [(t, Fraction(1, count)) for t in drawn]


def exact_expected_value(mech: str, inst: Instance, params: MechParams | None = None, reported=None) -> Fraction:
    total = Fraction(0)
    for tape, w in enumerate_tapes(mech, inst, params, reported):
        total += w * inst.v[run_mechanism(mech, inst, reported, tape, params).chosen]
    return total


def outcome_distribution(mech, inst, params=None, reported=None) -> list:
    return [(t, w, run_mechanism(mech, inst, reported, t, params))
            for t, w in enumerate_tapes(mech, inst, params, reported)]


def report_profiles(inst: Instance, strict: bool):
    sizes = [len(c) for c in inst.cost_classes]
    if strict:
        return list(itertools.product(*[range(s) for s in sizes]))
    base = inst.true_index
    out = {base}
    for i, s in enumerate(sizes):
        for d in range(s):
            out.add(base[:i] + (d,) + base[i + 1:])
    return sorted(out)


def _cx(inst, player, truth, lie, profile, tape, u_truth=None, u_lie=None, **extra):
    d = {"player": player, "true_cost": truth, "reported_cost": lie, "profile": list(profile),
         "tape": tape.to_json() if tape is not None else None}
    if u_truth is not None:
        d["utility_truth"] = fstr(u_truth)
    if u_lie is not None:
        d["utility_lie"] = fstr(u_lie)
    d.update(extra)
    return d


CHECKS = ("payments_nonnegative", "no_positive_transfers", "individual_rationality",
          "budget_feasibility", "truthfulness")


def _per_tape_checks(rec, inst, prof, tape, out, name_budget=True):
    B = inst.budget
    for i, g in enumerate(inst.group_masks):
        p = out.payments[i]
        if p < 0:
            rec.fail("payments_nonnegative", _cx(inst, i, prof[i], prof[i], prof, tape, payment=fstr(p)))
        if p != 0 and not out.chosen & g:
            rec.fail("no_positive_transfers", _cx(inst, i, prof[i], prof[i], prof, tape, payment=fstr(p)))
        cost = inst.cost_classes[i].members[prof[i]](out.chosen)
        if p < cost:
            rec.fail("individual_rationality", _cx(inst, i, prof[i], prof[i], prof, tape, p - cost))
    if name_budget and out.total_payment > B:
        rec.fail("budget_feasibility", _cx(inst, None, None, None, prof, tape,
                                           total_payment=fstr(out.total_payment)))


def check_mechanism(mech: str, inst: Instance, mode: str | None = None, params: MechParams | None = None,
                    strict: bool | None = None, benchmarks=()) -> AuditReport:
    spec = get_spec(mech)
    mode = mode or ("expectation" if spec.kind == "expectation" else "universal")
    strict = inst.k <= 3 if strict is None else strict
    full = resolve_params(mech, inst, params)
    report = AuditReport(mech, inst.digest, mode, params=full.to_json())
    profiles = report_profiles(inst, strict)
    rec = _Recorder(CHECKS)
    if mode == "universal":
        _audit_universal(rec, mech, inst, full, profiles)
    elif mode == "expectation":
        _audit_expectation(rec, mech, inst, full, profiles)
    else:
        raise ValueError(f"unknown audit mode {mode!r}")
    report.checks = rec.checks()
    report.expected_value = exact_expected_value(mech, inst, full)
    for kind in benchmarks:
        b = exact_benchmark(kind, inst).value
        report.benchmark_ratios[kind] = None if b == 0 else report.expected_value / b
    return report


def _audit_universal(rec, mech, inst, params, profiles):
    pset = set(profiles)
    tapes = enumerate_tapes(mech, inst, params)
    sizes = [len(c) for c in inst.cost_classes]
    for tape, _ in tapes:
        outs = {prof: run_mechanism(mech, inst, inst.profile(prof), tape, params) for prof in profiles}
        for prof, out in outs.items():
            _per_tape_checks(rec, inst, prof, tape, out)
            for i in range(inst.k):
                truth = inst.cost_classes[i].members[prof[i]]
                u_t = out.payments[i] - truth(out.chosen)
                for d in range(sizes[i]):
                    if d == prof[i]:
                        continue
                    dev = prof[:i] + (d,) + prof[i + 1:]
                    if dev not in pset:
                        continue
                    o2 = outs[dev]
                    u_l = o2.payments[i] - truth(o2.chosen)
                    if u_l > u_t:
                        rec.fail("truthfulness", _cx(inst, i, prof[i], d, prof, tape, u_t, u_l))


def _audit_expectation(rec, mech, inst, params, profiles):
    pset = set(profiles)
    sizes = [len(c) for c in inst.cost_classes]
    summary = {}
    exact_cost_payments = 0
    for prof in profiles:
        reports = inst.profile(prof)
        dist = {}
        epay = [Fraction(0)] * inst.k
        for tape, w, out in outcome_distribution(mech, inst, params, reports):
            _per_tape_checks(rec, inst, prof, tape, out, name_budget=False)
            for i, g in enumerate(inst.group_masks):
                if out.chosen & g and out.payments[i] == reports[i](out.chosen):
                    exact_cost_payments += 1
            dist[out.chosen] = dist.get(out.chosen, Fraction(0)) + w
            for i in range(inst.k):
                epay[i] += w * out.payments[i]
        summary[prof] = (dist, epay)
        if sum(epay) > inst.budget:
            rec.fail("budget_feasibility", _cx(inst, None, None, None, prof, None,
                                               expected_total_payment=fstr(sum(epay))))
    rec.notes["individual_rationality"] = f"{exact_cost_payments} winning outcomes paid exactly their cost"
    for prof in profiles:
        dist, epay = summary[prof]
        for i in range(inst.k):
            truth = inst.cost_classes[i].members[prof[i]]
            u_t = epay[i] - sum((w * truth(s) for s, w in dist.items()), Fraction(0))
            for d in range(sizes[i]):
                dev = prof[:i] + (d,) + prof[i + 1:]
                if d == prof[i] or dev not in pset:
                    continue
                dist2, epay2 = summary[dev]
                u_l = epay2[i] - sum((w * truth(s) for s, w in dist2.items()), Fraction(0))
                if u_l > u_t:
                    rec.fail("truthfulness", _cx(inst, i, prof[i], d, prof, None, u_t, u_l))


def replay(mech: str, inst: Instance, counterexample: dict, params: MechParams | None = None):
    """Re-run a universal-mode truthfulness counterexample; returns (u_truth, u_lie)."""
    i = counterexample["player"]
    prof = tuple(counterexample["profile"])
    dev = prof[:i] + (counterexample["reported_cost"],) + prof[i + 1:]
    tape = RandomTape.from_json(counterexample["tape"]) if counterexample.get("tape") else RandomTape()
    truth = inst.cost_classes[i].members[prof[i]]
    a = run_mechanism(mech, inst, inst.profile(prof), tape, params)
    b = run_mechanism(mech, inst, inst.profile(dev), tape, params)
    return a.payments[i] - truth(a.chosen), b.payments[i] - truth(b.chosen)


# --- lemma suites ---------------------------------------------------------------

def _check(name, ok, cx=None, detail=""):
    return Check(name, bool(ok), None if ok else cx, detail)


def partition_lemma(inst: Instance, g=None) -> Check:
    """Random-partition bounds for every S, exact over all 2^k partitions."""
    g = g or inst.v
    parts = [random_partition(inst, b) for b in partitions(inst.k)]
    w = Fraction(1, len(parts))
    for S in range(1 << inst.n):
        vb = vbench(g, S, inst)
        p_omega = p_both = Fraction(0)
        for _, _, u1, u2 in parts:
            a, b = g[S & u1], g[S & u2]
            omega = a >= vb / 4 and b >= vb / 4
            if omega:
                p_omega += w
                if b >= g[S] / 2 and b >= a:
                    p_both += w
        if p_omega < Fraction(1, 2) or p_both < Fraction(1, 4):
            return _check("partition_lemma", False, {"S": S, "p_omega": fstr(p_omega), "p_joint": fstr(p_both)})
    return _check("partition_lemma", True)


def partition_corollary(inst: Instance) -> Check:
    total = exact_benchmark("OPTalg", inst).value
    ob = exact_benchmark("OPT_Bench", inst).value
    pr = Fraction(0)
    for bits in partitions(inst.k):
        _, _, u1, u2 = random_partition(inst, bits)
        v1 = exact_benchmark("V*_j", inst, u1).value
        v2 = exact_benchmark("V*_j", inst, u2).value
        if v2 >= total / 2 and v2 >= v1 >= ob / 4:
            pr += Fraction(1, 2 ** inst.k)
    return _check("partition_corollary", pr >= Fraction(1, 4), {"probability": fstr(pr)})


def lp_partition_lemma(inst: Instance) -> list:
    q = costs_of(inst)
    B = inst.budget
    lpb = lp_star_bench(inst.v, q, B, inst.universe, inst).objective
    lps = bflp(inst.v, q, B, inst.universe).objective
    ob = exact_benchmark("OPT_Bench", inst).value
    pr = Fraction(0)
    for bits in partitions(inst.k):
        _, _, u1, u2 = random_partition(inst, bits)
        l1 = bflp(inst.v, q, B, u1).objective
        l2 = bflp(inst.v, q, B, u2).objective
        if l2 >= l1 >= lpb / 4 and l2 >= lps / 2:
            pr += Fraction(1, 2 ** inst.k)
    return [_check("lp_partition_lemma", pr >= Fraction(1, 4), {"probability": fstr(pr)}),
            _check("lp_bench_dominates_opt_bench", lpb >= ob, {"LP*_Bench": fstr(lpb), "OPT_Bench": fstr(ob)})]


def marginal_sum_claim(inst: Instance) -> Check:
    v = inst.v
    for S in range(1 << inst.n):
        tot = sum((v[S] - v[S & ~g] for g in inst.group_masks), Fraction(0))
        if tot > v[S]:
            return _check("marginal_sum_claim", False, {"S": S, "sum": fstr(tot), "v(S)": fstr(v[S])})
    return _check("marginal_sum_claim", True)


def prune_values(g, n):
    vals = sorted({x for x in g.table if x > 0} | {x / 2 for x in g.table if x > 0})
    return vals


def prune_postconditions(inst: Instance, mode: str) -> Check:
    g = inst.v
    q = costs_of(inst)
    B = inst.budget
    for S in range(1 << inst.n):
        if q[S] > B:
            continue
        for val in prune_values(g, inst.n):
            T = prune(g, S, val, B, mode, inst)
            bound = prune_bound(g, S, val, mode, inst)
            ok = T & ~S == 0 and q[T] <= B / 2 and g[T] <= val and g[T] > bound
            if not ok:
                return _check(f"prune_{mode}", False, {"S": S, "Val": fstr(val), "T": T, "bound": fstr(bound)})
    return _check(f"prune_{mode}", True)


def vertex_support(inst: Instance) -> Check:
    q = costs_of(inst)
    B = inst.budget
    lps = bflp(inst.v, q, B, inst.universe).objective
    for bits in partitions(inst.k):
        _, _, u1, u2 = random_partition(inst, bits)
        for region in (u1, u2):
            sol = bflp(inst.v, q, B, region)
            if len(sol.support) > 2:
                return _check("vertex_support", False, {"lp": "BFLP", "region": region})
            for lam in (Fraction(1, 4), Fraction(1, 2)):
                kappa = lam * lps / B
                sol = cdlp(inst.v, q, kappa, lam * lps, region)
                if len(sol.support) > 2:
                    return _check("vertex_support", False, {"lp": "CDLP", "region": region, "lambda": fstr(lam)})
    return _check("vertex_support", True)


def harmonic(k) -> Fraction:
    return sum((Fraction(1, j) for j in range(1, k + 1)), Fraction(0))


def frcover_sandwich(inst: Instance) -> Check:
    """v_xos <= g and g <= H(k') v_xos, where H(k') <= 1 + ln k'."""
    g = inst.v
    t = xos_table(g, inst)
    for S in range(1, 1 << inst.n):
        kp = len(inst.players_in(S))
        if t[S] > g[S] or g[S] > harmonic(kp) * t[S]:
            return _check("frcover_sandwich", False, {"S": S, "v_xos": fstr(t[S]), "g": fstr(g[S])})
    return _check("frcover_sandwich", True, detail=f"max gap {fstr(frcover_gap(g, inst))}")


def single_player_bench(inst: Instance) -> Check:
    if inst.k != 1:
        return _check("single_player_bench_zero", True, detail="not applicable")
    val = exact_benchmark("OPT_Bench", inst).value
    return _check("single_player_bench_zero", val == 0, {"OPT_Bench": fstr(val)})


def lemma_suite(corpus) -> AuditReport:
    """Run every applicable structural check on each instance of the corpus."""
    if isinstance(corpus, Instance):
        corpus = [corpus]
    report = AuditReport("lemma_suite", ",".join(i.digest for i in corpus), "structural")
    agg = {}
    for inst in corpus:
        cls = inst.v.declared_class
        checks = [single_player_bench(inst), vertex_support(inst), partition_lemma(inst),
                  partition_corollary(inst), prune_postconditions(inst, "general"), frcover_sandwich(inst)]
        if cls != "subadditive":
            checks += lp_partition_lemma(inst) + [marginal_sum_claim(inst)]
        if all(c.superadditive for c in inst.true_costs):
            checks.append(prune_postconditions(inst, "superadditive"))
        for c in checks:
            if c.name not in agg:
                agg[c.name] = Check(c.name, True)
            if not c.passed and agg[c.name].passed:
                agg[c.name] = Check(c.name, False, {"instance": inst.digest, **(c.counterexample or {})})
    report.checks = list(agg.values())
    return report


# --- lower-bound consistency -------------------------------------------------------

def weak_monotonicity(mech: str, inst: Instance, params=None) -> Check:
    """Per tape, c(a)+c'(b) <= c(b)+c'(a) where a, b are player 0's outputs under c, c'."""
    if inst.k != 1:
        raise ValueError("weak monotonicity check expects a single player")
    members = inst.cost_classes[0].members
    for tape, _ in enumerate_tapes(mech, inst, params):
        outs = [run_mechanism(mech, inst, (c,), tape, params).chosen for c in members]
        for x, y in itertools.permutations(range(len(members)), 2):
            c, c2 = members[x], members[y]
            a, b = outs[x], outs[y]
            if c(a) + c2(b) > c(b) + c2(a):
                return _check("weak_monotonicity", False, {"tape": tape.to_json(), "pair": [x, y]})
    return _check("weak_monotonicity", True)


def det_overbid_ceiling(mech: str, inst: Instance, alpha, params=None) -> Check:
    """No tape attains more than OPTalg/alpha under both class members."""
    alpha = Fraction(alpha)
    members = inst.cost_classes[0].members
    opt = [exact_benchmark("OPTalg", inst, costs=(c,)).value for c in members]
    for tape, _ in enumerate_tapes(mech, inst, params):
        vals = [inst.v[run_mechanism(mech, inst, (c,), tape, params).chosen] for c in members]
        if all(v > o / alpha for v, o in zip(vals, opt)):
            return _check("det_overbid_ceiling", False, {"tape": tape.to_json(), "values": [fstr(v) for v in vals]})
    return _check("det_overbid_ceiling", True)


def rand_overbid_ceiling(mech: str, inst: Instance, params=None) -> Check:
    """Some class member caps the exact expected value at (1+eps) OPTalg / n."""
    n = inst.n
    eps = Fraction(inst.meta_dict["epsilon"])
    for c in inst.cost_classes[0].members:
        ev = exact_expected_value(mech, inst, params, (c,))
        if ev <= (1 + eps) * exact_benchmark("OPTalg", inst, costs=(c,)).value / n:
            return _check("rand_overbid_ceiling", True)
    return _check("rand_overbid_ceiling", False, {"mechanism": mech})


def telescoping_chain(mech: str, inst: Instance, params=None) -> Check:
    """sum_l 2^(l-1) a_l <= p_0 <= B on the unit-value chain with costs 2^l."""
    members = inst.cost_classes[0].members
    a, p = [], []
    for c in members:
        ea = ep = Fraction(0)
        for tape, w, out in outcome_distribution(mech, inst, params, (c,)):
            ea += w * popcount(out.chosen)
            ep += w * out.payments[0]
        a.append(ea)
        p.append(ep)
    lhs = sum((Fraction(2) ** l / 2 * a[l] for l in range(len(a))), Fraction(0))
    ok = lhs <= p[0] <= inst.budget
    return _check("telescoping_chain", ok, {"lhs": fstr(lhs), "p0": fstr(p[0])},
                  detail=f"a={[fstr(x) for x in a]}")


def max_group(inst) -> Fraction:
    return max(inst.v[g] for g in inst.group_masks)

