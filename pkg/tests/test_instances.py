import json
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bfmd.instances import (
    CostClass,
    CostFunction,
    Instance,
    InstanceError,
    RandomParams,
    Valuation,
    aggregate_costs,
    canonical_instance,
    class_diagnostics,
    costs_of,
    frac,
    gen_lower_bound,
    gen_random,
    instance_to_json,
    parse_instance,
    serialize_instance,
    validate_class,
)
from bfmd.subsets import popcount, submasks


def _json(inst):
    return instance_to_json(inst)


def test_canonical_shape(i0):
    assert i0.n == 4 and i0.k == 2
    assert i0.groups == ((0, 1), (2, 3))
    assert i0.budget == 3
    assert [i0.v.single(e) for e in range(4)] == [4, 2, 3, 1]
    assert [i0.true_costs[0](m) for m in (1, 2)] == [2, 1]
    assert [i0.true_costs[1](m) for m in (4, 8)] == [2, 1]
    assert i0.no_overbidding
    assert i0.meta_dict["items"] == "abcd"


def test_aggregate_costs_sum_over_groups(i0):
    q = costs_of(i0)
    assert q[0b1111] == 6
    assert q[0b0101] == 4
    assert q[0] == 0
    assert aggregate_costs(i0.groups, i0.true_costs) is q or aggregate_costs(i0.groups, i0.true_costs) == q


def test_roundtrip_canonical(i0):
    data = serialize_instance(i0)
    back = parse_instance(data)
    assert back == i0
    assert back.digest == i0.digest
    assert serialize_instance(back) == data


FAMILIES = [("xos", "general"), ("submodular", "superadditive"), ("additive", "additive"),
            ("subadditive", "general"), ("xos", "additive")]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(FAMILIES), st.booleans())
def test_roundtrip_random(seed, fam, nob):
    inst = gen_random(RandomParams(n=5, k=2, valuation=fam[0], costs=fam[1], no_overbidding=nob), seed)
    back = parse_instance(serialize_instance(inst))
    assert back == inst
    assert serialize_instance(back) == serialize_instance(inst)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(FAMILIES))
def test_random_instances_meet_declared_classes(seed, fam):
    inst = gen_random(RandomParams(n=5, k=3, valuation=fam[0], costs=fam[1]), seed)
    assert validate_class(inst.v)
    for c in inst.true_costs:
        if fam[1] == "additive":
            assert c.additive
        if fam[1] in ("additive", "superadditive"):
            assert c.superadditive


def test_generation_is_seeded():
    p = RandomParams(n=6, k=3)
    assert gen_random(p, 11) == gen_random(p, 11)


def test_frac_rejects_floats():
    with pytest.raises(TypeError):
        frac(0.5)
    assert frac("3/4") == F(3, 4)


@pytest.mark.parametrize("mutate, path", [
    (lambda d: d.__setitem__("groups", [[0, 1], [1, 2, 3]]), "groups"),
    (lambda d: d.pop("budget"), "budget"),
    (lambda d: d.__setitem__("budget", "x/y"), "budget"),
    (lambda d: d.__setitem__("n", 0), "n"),
    (lambda d: d["true_costs"][1]["table"].__setitem__("1", "-1"), "true_costs[1]"),
    (lambda d: d["cost_classes"].pop(), "cost_classes"),
])
def test_parse_errors_name_the_field(i0, mutate, path):
    d = json.loads(serialize_instance(i0))
    mutate(d)
    with pytest.raises(InstanceError) as err:
        parse_instance(json.dumps(d))
    assert err.value.path.startswith(path)


def test_overlapping_groups_message(i0):
    d = json.loads(serialize_instance(i0))
    d["groups"] = [[0, 1], [1, 2, 3]]
    with pytest.raises(InstanceError, match="groups not disjoint"):
        parse_instance(json.dumps(d))


def test_malformed_json():
    with pytest.raises(InstanceError, match="malformed JSON"):
        parse_instance(b"{not json")


def test_true_cost_must_be_class_member(i0):
    other = CostFunction.from_weights(0, (0, 1), (5, 5))
    with pytest.raises(InstanceError, match="not in cost class"):
        i0.replace(true_costs=(other, i0.true_costs[1]))


def test_no_overbidding_is_enforced(i0):
    big = CostFunction.from_weights(0, (0, 1), (4, 1))
    cls = CostClass(0, (i0.true_costs[0], big))
    with pytest.raises(InstanceError, match="no_overbidding"):
        i0.replace(cost_classes=(cls, i0.cost_classes[1]))


def test_cost_flags_are_checked():
    with pytest.raises(InstanceError):
        CostFunction(0, (0, 1), (F(0), F(1), F(1), F(3)), additive=True)
    with pytest.raises(InstanceError):
        CostFunction(0, (0, 1), (F(0), F(2), F(2), F(3)), superadditive=True)
    with pytest.raises(InstanceError):
        CostFunction(0, (0, 1), (F(0), F(2), F(1), F(1)))  # not monotone
    with pytest.raises(InstanceError):
        CostFunction(0, (0,), (F(1), F(2)))  # not normalized


def test_cost_class_members_distinct(i0):
    c = i0.true_costs[0]
    with pytest.raises(InstanceError):
        CostClass(0, (c, c))


# --- class validation ---------------------------------------------------------------

def _table(n, fn):
    return Valuation.from_table(n, [F(fn(s)) for s in range(1 << n)], "subadditive")


def test_coverage_is_submodular():
    sets = [{1, 2}, {2, 3}, {3, 4}]

    def cover(s):
        out = set()
        for e in range(3):
            if s >> e & 1:
                out |= sets[e]
        return len(out)
    v = Valuation.from_table(3, [F(cover(s)) for s in range(8)], "submodular")
    assert validate_class(v)
    assert validate_class(v, "xos")
    assert validate_class(v, "subadditive")
    assert not validate_class(v, "additive")


def test_non_xos_subadditive_witness():
    # v = 1 on every nonempty proper subset of 3 items, v(all) = 2
    v = Valuation.from_table(3, [F(0)] + [F(1)] * 6 + [F(2)], "xos")
    assert validate_class(v, "subadditive")
    assert not validate_class(v)
    assert class_diagnostics(v) == ["declared xos; no supporting price for S={0,1,2}"]


def test_max_of_additives_is_xos_not_submodular():
    # max(a+b, 3c/2): with c present, a and b are complements
    v = Valuation.xos([(1, 1, 0), (0, 0, F(3, 2))])
    assert validate_class(v, "xos")
    assert not validate_class(v, "submodular")


def test_superadditive_valuation_is_not_subadditive():
    v = _table(2, lambda s: popcount(s) ** 2)
    assert not validate_class(v)
    assert "subadditive" in class_diagnostics(v)[0]


def test_non_monotone_flag():
    v = Valuation.from_table(2, [F(0), F(2), F(2), F(1)], "subadditive", monotone=True)
    assert not validate_class(v)
    assert "monotone" in class_diagnostics(v)[0]


# --- lower-bound families -----------------------------------------------------------

def test_det_overbid():
    inst = gen_lower_bound("det_overbid", alpha=5)
    assert inst.k == 1 and inst.budget == 1
    assert inst.v.table == (0, 5, 1, 6)
    members = inst.cost_classes[0].members
    assert [(c(1), c(2)) for c in members] == [(1, 0), (2, 1)]
    with pytest.raises(InstanceError):
        gen_lower_bound("det_overbid", alpha=F(1, 2))


def test_rand_overbid():
    inst = gen_lower_bound("rand_overbid", n=3, epsilon=1)
    gamma = 4
    assert [inst.v.single(e) for e in range(3)] == [gamma ** 2, gamma, 1]
    big = 1 + 3 * gamma ** 3
    costs = [[c(1 << e) for e in range(3)] for c in inst.cost_classes[0].members]
    assert costs == [[1, 0, 0], [big, 1, 0], [big, big, 1]]


def test_los_nob():
    inst = gen_lower_bound("los_nob", n=4)
    assert inst.budget == 4 and inst.no_overbidding
    assert [c(1) for c in inst.cost_classes[0].members] == [1, 2, 4]
    with pytest.raises(InstanceError):
        gen_lower_bound("los_nob", n=3)


def test_phi_and_emax_trap():
    phi = gen_lower_bound("phi")
    assert phi.v.single(1) == F(1618, 1000)
    fn = gen_lower_bound("emax_trap", budget=4)
    assert [(c(1), c(2)) for c in fn.cost_classes[0].members] == [(4, 1), (5, 4)]
    assert not fn.no_overbidding


def test_anari_support():
    inst = gen_lower_bound("anari", n=4, seed=1, grid=4)
    assert inst.k == 4
    assert all(len(c) == 3 for c in inst.cost_classes)  # floor(4(1-1/e)) + 1 grid points
    assert inst.budget == F(0, 4) + F(int(4 * 4 * (1 - 2 / 2.718281828459045)), 4)


def test_unknown_family():
    with pytest.raises(InstanceError):
        gen_lower_bound("nope")


def test_profile_and_region(i0):
    assert i0.true_index == (0, 0)
    prof = i0.profile((1, 0))
    assert prof[0](1) == 3
    assert i0.region([1]) == 0b1100
    assert i0.players_in(0b0101) == [0, 1]
    assert all(s in submasks(15) for s in range(16))
