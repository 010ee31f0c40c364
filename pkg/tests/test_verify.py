from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bfmd.benchmarks import vbench
from bfmd.corpus import random_corpus
from bfmd.instances import CostClass, RandomParams, gen_lower_bound, gen_random
from bfmd.mechanisms import RandomTape, run_mechanism
from bfmd.verify import (
    CHECKS,
    TapeOverflow,
    check_mechanism,
    enumerate_tapes,
    exact_expected_value,
    harmonic,
    lemma_suite,
    marginal_sum_claim,
    outcome_distribution,
    partition_lemma,
    replay,
    report_profiles,
    sample_tapes,
    telescoping_chain,
    weak_monotonicity,
)


def test_second_opt_audit_i0(i0):
    rep = check_mechanism("SECOND_OPT", i0)
    assert rep.mode == "universal"
    assert rep.passed
    assert [c.name for c in rep.checks] == list(CHECKS)
    assert rep.expected_value == 6
    assert rep.instance == i0.digest


def test_unibf_xos_audit_i0(i0):
    rep = check_mechanism("UNIBF_XOS_NOB", i0, benchmarks=("OPT_Bench",))
    assert rep.passed
    assert rep.benchmark_ratios["OPT_Bench"] == rep.expected_value / 2


def test_emax_strawman_counterexample_replays():
    inst = gen_lower_bound("emax_trap", budget=4)
    rep = check_mechanism("STRAWMAN_EMAX", inst)
    assert not rep.passed
    cx = rep.check("truthfulness").counterexample
    assert (F(cx["utility_truth"]), F(cx["utility_lie"])) == (0, 3)  # B - 1
    assert replay("STRAWMAN_EMAX", inst, cx) == (0, 3)


def test_strawman_optstar_fails_somewhere():
    found = None
    for inst in random_corpus("additive", "additive", False, "half", 30, 0):
        rep = check_mechanism("STRAWMAN_OPTSTAR", inst)
        if not rep.passed:
            found = (inst, rep)
            break
    assert found is not None
    inst, rep = found
    cx = rep.check("truthfulness").counterexample
    u_t, u_l = replay("STRAWMAN_OPTSTAR", inst, cx)
    assert (u_t, u_l) == (F(cx["utility_truth"]), F(cx["utility_lie"]))
    assert u_l > u_t


def test_singleton_classes_pass_vacuously(i0):
    inst = i0.replace(cost_classes=tuple(CostClass(i, (c,)) for i, c in enumerate(i0.true_costs)))
    rep = check_mechanism("STRAWMAN_OPTSTAR", inst)
    assert rep.check("truthfulness").passed


def test_report_profiles(i0):
    assert len(report_profiles(i0, strict=True)) == 4
    assert report_profiles(i0, strict=False) == [(0, 0), (0, 1), (1, 0)]


def test_tape_probabilities_sum_to_one(i0):
    for mech in ("SECOND_OPT", "UNIBF_XOS_NOB", "BF_IN_EXP", "SECOND_OPT_CDEMD", "OPTALG_UNIFORM"):
        tapes = enumerate_tapes(mech, i0)
        assert sum(w for _, w in tapes) == 1
        assert all(w > 0 for _, w in tapes)
    assert len(enumerate_tapes("SECOND_OPT", i0)) == 1


def test_guard(i0):
    with pytest.raises(TapeOverflow):
        enumerate_tapes("UNIBF_XOS_NOB", i0, guard=4)


def test_bf_tapes_follow_lp_support(i0):
    # partitions x support of x*, each weighted (1/4) x*_S; leftover mass selects nothing
    for tape, w in enumerate_tapes("BF_IN_EXP", i0):
        out = run_mechanism("BF_IN_EXP", i0, tape=tape)
        xs = dict(out.trace).get("x*")
        if xs:
            mass = dict((s, x) for s, x in xs)
            expect = mass[out.chosen] if out.chosen else 1 - sum(mass.values())
            assert w == F(1, 4) * expect


def test_expected_value_mixing(i0):
    # deterministic mechanism: value of its single outcome
    assert exact_expected_value("SECOND_OPT", i0) == i0.v[0b0011]
    # the branch mixes S* and e* with weight p
    dist = outcome_distribution("UNIBF_XOS_NOB", i0)
    ev = exact_expected_value("UNIBF_XOS_NOB", i0)
    assert ev == sum(w * i0.v[o.chosen] for _, w, o in dist)
    sstar = sum(w * i0.v[o.chosen] for t, w, o in dist if t.branch_coin < F(4, 5)) / F(4, 5)
    estar = sum(w * i0.v[o.chosen] for t, w, o in dist if t.branch_coin >= F(4, 5)) / F(1, 5)
    assert ev == F(4, 5) * sstar + F(1, 5) * estar
    assert estar == 4


def test_monte_carlo_is_seeded(i0):
    a = sample_tapes("UNIBF_XOS_NOB", i0, seed=7, count=50)
    b = sample_tapes("UNIBF_XOS_NOB", i0, seed=7, count=50)
    assert a == b
    assert sum(w for _, w in a) == 1


def test_partition_lemma_i0_by_hand(i0):
    # S = {b,c}: vbench = 5 - 3 = 2. Omega holds on the two split partitions; the joint event
    # only on bits (1,0) where S2 = {c} carries 3 >= 5/2.
    S = 0b0110
    assert vbench(i0.v, S, i0) == 2
    assert partition_lemma(i0).passed


def test_marginal_sum_additive_equality(i0):
    for S in range(16):
        assert sum(i0.v[S] - i0.v[S & ~g] for g in i0.group_masks) == i0.v[S]
    assert marginal_sum_claim(i0).passed


def test_lemma_suite_i0(i0):
    rep = lemma_suite(i0)
    assert rep.passed, [c.to_json() for c in rep.failures()]


def test_harmonic():
    assert harmonic(1) == 1
    assert harmonic(3) == F(11, 6)


def test_telescoping_chain_los():
    assert telescoping_chain("BF_IN_EXP", gen_lower_bound("los_nob", n=4)).passed


def test_weak_monotonicity_phi():
    assert weak_monotonicity("SECOND_OPT", gen_lower_bound("phi")).passed
    with pytest.raises(ValueError):
        weak_monotonicity("SECOND_OPT", gen_lower_bound("anari", n=3))


def test_report_json_roundtrips(i0):
    import json
    rep = check_mechanism("UNIBF_XOS_NOB", i0, benchmarks=("OPTalg",))
    d = json.loads(json.dumps(rep.to_json()))
    assert d["passed"] is True
    assert d["params"]["p"] == "4/5"
    assert d["instance"] == i0.digest


@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10_000))
def test_universal_pass_implies_expectation_pass(seed):
    inst = gen_random(RandomParams(n=4, k=2, valuation="xos", costs="general", no_overbidding=True), seed)
    for mech in ("UNIBF_XOS_NOB", "SECOND_OPT", "XOS_GEN_OVERBID"):
        if check_mechanism(mech, inst, "universal").passed:
            assert check_mechanism(mech, inst, "expectation").passed


def test_failures_carry_full_tapes():
    inst = gen_lower_bound("emax_trap")
    rep = check_mechanism("STRAWMAN_EMAX", inst)
    for c in rep.failures():
        assert "tape" in c.counterexample
        RandomTape.from_json(c.counterexample["tape"] or {})
