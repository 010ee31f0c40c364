from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bfmd.benchmarks import exact_benchmark
from bfmd.corpus import corpus_for, single_player_params
from bfmd.instances import RandomParams, costs_of, gen_lower_bound, gen_random
from bfmd.mechanisms import (
    CONTROLS,
    EXPECTATION,
    REGISTRY,
    UNIVERSAL,
    MechanismError,
    MechParams,
    Outcome,
    RandomTape,
    get_spec,
    resolve_params,
    run_mechanism,
    tape_space,
)
from bfmd.mechanisms.core import branch, branch_points, context, partitions, vcg_payments
from bfmd.mechanisms.single_owner import m1
from bfmd.verify import enumerate_tapes


def trace(out):
    return dict(out.trace)


# --- core types ---------------------------------------------------------------------

def test_params_bounds():
    with pytest.raises(MechanismError):
        MechParams(lam=F(3, 4))
    with pytest.raises(MechanismError):
        MechParams(p=F(3, 2))
    with pytest.raises(MechanismError):
        MechParams(beta=F(1, 2))
    with pytest.raises(MechanismError):
        MechParams(lam=0.25)
    assert MechParams(lam="1/3").lam == F(1, 3)


def test_tape_json_roundtrip():
    t = RandomTape(partition_bits=(True, False), branch_coin=F(4, 5), j_coin=True, exponent_coin=2)
    assert RandomTape.from_json(t.to_json()) == t
    with pytest.raises(MechanismError):
        RandomTape.from_json({"branch_coin": "1"})
    with pytest.raises(MechanismError):
        RandomTape.from_json({"bogus": 1})


def test_missing_tape_field(i0):
    with pytest.raises(MechanismError, match="partition_bits"):
        run_mechanism("UNIBF_XOS_NOB", i0)


def test_branch_points():
    pts = branch_points(F(4, 5))
    assert sum(w for _, w in pts) == 1
    assert [branch(RandomTape(branch_coin=c), F(4, 5)) for c, _ in pts] == [True, False]
    assert len(partitions(3)) == 8


def test_outcome_json():
    out = Outcome(0b11, (F(3), F(0)), ((0, 1),), (("S_hat", 3),))
    assert out.to_json() == {"chosen": 3, "payments": ["3/1", "0/1"], "flags": {"0": 1},
                             "trace": [["S_hat", 3]]}
    assert out.total_payment == 3


def test_catalog_partition():
    assert set(UNIVERSAL) | set(EXPECTATION) | set(CONTROLS) == set(REGISTRY)
    assert "BF_IN_EXP" in EXPECTATION and "SUBADD_BF_IN_EXP" in EXPECTATION
    assert set(CONTROLS) == {"STRAWMAN_EMAX", "STRAWMAN_OPTSTAR"}
    with pytest.raises(MechanismError):
        get_spec("NOPE")


# --- VCG payments -------------------------------------------------------------------

def test_vcg_payments_i0_hand_derived(i0):
    # kappa = 1/3, winner {a,b,c}: v/kappa = 27
    # player 0: 27 - c(c) - 3*max_{S in {c,d}} (v - q/3) = 27 - 2 - 9
    # player 1: 27 - c(a,b) - 3*max_{S in {a,b}} (v - q/3) = 27 - 3 - 15
    ctx = context(i0, i0.true_costs)
    assert vcg_payments(ctx, 0b0111, F(1, 3), None, i0.universe) == [16, 9]
    assert vcg_payments(ctx, 0, F(1, 3), None, i0.universe) == [0, 0]
    with pytest.raises(MechanismError):
        vcg_payments(ctx, 0b0111, 0, None, i0.universe)


# --- catalog examples ---------------------------------------------------------------

def test_second_opt_i0(i0):
    out = run_mechanism("SECOND_OPT", i0)
    assert out.chosen == 0b0011
    assert out.payments == (3, 0)
    assert i0.v[out.chosen] >= exact_benchmark("opt2", i0).value


def test_unibf_xos_tape_count(i0):
    tapes = enumerate_tapes("UNIBF_XOS_NOB", i0)
    assert len(tapes) == 8
    assert sum(w for _, w in tapes) == 1


def test_unibf_xos_single_player():
    inst = gen_lower_bound("los_nob", n=4)
    estar = exact_benchmark("e*", inst).witness
    for tape, _ in enumerate_tapes("UNIBF_XOS_NOB", inst):
        out = run_mechanism("UNIBF_XOS_NOB", inst, tape=tape)
        if branch(tape, F(4, 5)):
            assert out.chosen == 0
        else:
            assert out.chosen == estar


def test_bf_in_exp_partition_trace(i0):
    tape = RandomTape(partition_bits=(True, False), sample_coin=F(0))
    out = run_mechanism("BF_IN_EXP", i0, tape=tape)
    t = trace(out)
    assert t["V1"] == 6
    assert t["kappa"] == 1
    assert t["U2"] == 0b1100
    # CDLP over {c,d} with kappa 1, cap 3: v - q is 1 for {c}, 0 for {d}, 1 for {c,d} but v({c,d}) = 4 > 3
    assert t["x*"] == [[0b0100, 1]]
    assert out.chosen == 0b0100
    assert out.payments[0] == 0


def test_m1_flag_zero_pays_nothing(i0):
    ctx = context(i0, i0.true_costs)
    opt0 = exact_benchmark("opt_i", i0, param=0).value
    chosen, pay, flag = m1(ctx, 0, 2 * opt0)[:3]
    if flag == 0:
        assert pay == 0


def test_m1_m2_need_target(i0):
    with pytest.raises(MechanismError):
        run_mechanism("M1", i0)


def test_class_mismatch_rejected():
    inst = gen_lower_bound("emax_trap")
    with pytest.raises(MechanismError):
        run_mechanism("UNIBF_XOS_NOB", inst, tape=RandomTape(partition_bits=(True,), branch_coin=F(0)))
    sub = gen_random(RandomParams(n=4, k=2, valuation="subadditive", costs="general"), 1)
    with pytest.raises(MechanismError):
        tape_space("BF_IN_EXP", sub)


def test_default_params(i0):
    assert resolve_params("UNIBF_XOS_NOB", i0).p == F(4, 5)
    assert resolve_params("UNIBF_SUPADD_NOB", i0).lam == F(2, 5)
    assert resolve_params("UNIBF_ADD_NOB", i0).p == F(12, 17)
    assert resolve_params("XOS_GEN_OVERBID", i0).p == F(128, 145)
    assert resolve_params("XOS_SUPADD_OVERBID", i0).p == 1 / (1 + F(17, 4))
    assert resolve_params("ADDITIVE_OVERBID", i0).p == 1 / (1 + (1 + F(1, 64)))
    assert resolve_params("SUBMOD_GREEDY", i0).lam == F(1, 3)
    assert resolve_params("SUBMOD_GREEDY", i0, MechParams(lam=F(1, 2))).lam == F(1, 2)


# --- per-tape invariants on corpora -------------------------------------------------

def _universal_cases():
    out = []
    for mech in UNIVERSAL:
        for j, inst in enumerate(corpus_for(mech, 6, seed=3)):
            out.append((mech, j, inst))
    return out


@pytest.mark.parametrize("mech, j, inst", _universal_cases(),
                         ids=lambda x: x if isinstance(x, str) else None)
def test_universal_tapewise_invariants(mech, j, inst):
    params = single_player_params(mech, inst, j % inst.k) if mech in ("M1", "M2") else None
    tapes = enumerate_tapes(mech, inst, params)
    assert sum(w for _, w in tapes) == 1
    for tape, _ in tapes:
        out = run_mechanism(mech, inst, tape=tape, params=params)
        assert out == run_mechanism(mech, inst, tape=tape, params=params)
        assert out.total_payment <= inst.budget
        for i, g in enumerate(inst.group_masks):
            assert out.payments[i] >= 0
            if not out.chosen & g:
                assert out.payments[i] == 0
            assert out.payments[i] >= inst.true_costs[i](out.chosen)


def test_second_opt_postcondition():
    for inst in corpus_for("SECOND_OPT", 20, seed=9):
        out = run_mechanism("SECOND_OPT", inst)
        owners = [i for i, g in enumerate(inst.group_masks) if out.chosen & g]
        assert len(owners) <= 1
        if owners:
            ihat = owners[0]
            others = [exact_benchmark("opt_i", inst, param=i).value for i in range(inst.k) if i != ihat]
            assert inst.v[out.chosen] >= max(others, default=0)


def test_submod_greedy_exit_invariants():
    for inst in corpus_for("SUBMOD_GREEDY", 15, seed=4):
        for tape, _ in enumerate_tapes("SUBMOD_GREEDY", inst):
            out = run_mechanism("SUBMOD_GREEDY", inst, tape=tape)
            t = trace(out)
            assert inst.v[out.chosen] <= F(1, 3) * t["V1"]
            if t["kappa"]:
                assert out.total_payment == inst.v[out.chosen] / t["kappa"]


def test_m1_flag_contract():
    for inst in corpus_for("M1", 15, seed=2):
        ctx = context(inst, inst.true_costs)
        for i in range(inst.k):
            opt = exact_benchmark("opt_i", inst, param=i).value
            for val in (opt, opt / 2, 2 * opt):
                chosen, pay, flag = m1(ctx, i, val)[:3]
                if flag:
                    assert inst.v[chosen] <= val / 2
                    assert inst.true_costs[i](chosen) <= pay <= inst.budget
                else:
                    assert pay == 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_bf_in_exp_expected_payment(seed):
    inst = gen_random(RandomParams(n=5, k=3, valuation="xos", costs="general"), seed)
    tapes = enumerate_tapes("BF_IN_EXP", inst)
    assert sum(w for _, w in tapes) == 1
    total = F(0)
    for tape, w in tapes:
        out = run_mechanism("BF_IN_EXP", inst, tape=tape)
        total += w * out.total_payment
        for i, c in enumerate(inst.true_costs):
            assert out.payments[i] >= c(out.chosen)
    assert total <= inst.budget


def test_tape_space_ignores_report_for_partition_mechs(i0):
    a = tape_space("UNIBF_XOS_NOB", i0)
    b = tape_space("UNIBF_XOS_NOB", i0, i0.profile((1, 1)))
    assert a == b


def test_aggregate_cost_matches_reports(i0):
    ctx = context(i0, i0.profile((1, 1)))
    assert ctx.q == costs_of(i0, i0.profile((1, 1)))
