"""Desk-scale corpora matched to each mechanism's preconditions."""
from __future__ import annotations

import random
from dataclasses import replace

from .benchmarks import exact_benchmark
from .instances import CostClass, CostFunction, Instance, RandomParams, Valuation, gen_random
from .mechanisms import MechParams

# mechanism -> (valuation family, cost family, no_overbidding, budget rule)
PROFILES = {
    "SECOND_OPT": ("xos", "general", False, "third"),
    "UNIBF_XOS_NOB": ("xos", "general", True, "half"),
    "UNIBF_SUPADD_NOB": ("xos", "superadditive", True, "half"),
    "UNIBF_ADD_NOB": ("additive", "additive", True, "half"),
    "XOS_GEN_OVERBID": ("xos", "general", False, "third"),
    "SECOND_OPT_POLY": ("additive", "additive", False, "third"),
    "ADDITIVE_OVERBID": ("additive", "additive", False, "third"),
    "SECOND_OPT_CDEMD": ("xos", "superadditive", False, "third"),
    "XOS_SUPADD_OVERBID": ("xos", "superadditive", False, "third"),
    "SUBMOD_GREEDY": ("submodular", "general", False, "half"),
    "M1": ("xos", "superadditive", False, "third"),
    "M2": ("xos", "superadditive", False, "third"),
    "BF_IN_EXP": ("xos", "general", False, "half"),
    "SUBADD_BF_IN_EXP": ("subadditive", "general", False, "half"),
    "SUBADD_UNIBF": ("subadditive", "general", False, "third"),
    "OPTALG_UNIFORM": ("subadditive", "general", False, "third"),
    "OPTALG_EMAX": ("subadditive", "superadditive", True, "half"),
    "OPTALG_ZETA": ("xos", "general", True, "half"),
    "OPTALG_LOGN": ("xos", "general", True, "half"),
    "OPTALG_LOGN_EXP": ("xos", "general", False, "half"),
}

SHAPES = [(3, 2), (4, 2), (4, 3), (5, 2), (5, 3), (6, 3), (6, 2), (5, 4), (6, 4), (7, 3)]


def shape(j):
    return SHAPES[j % len(SHAPES)]


def random_corpus(valuation, costs, nob=False, budget="half", count=50, seed=0, class_size=2) -> list:
    out = []
    for j in range(count):
        n, k = shape(j)
        params = RandomParams(n=n, k=k, valuation=valuation, costs=costs, class_size=class_size,
                              budget=budget, no_overbidding=nob)
        out.append(gen_random(params, seed * 10007 + j))
    return out


def corpus_for(mech: str, count=50, seed=0) -> list:
    val, cost, nob, budget = PROFILES[mech]
    return random_corpus(val, cost, nob, budget, count, seed + sum(map(ord, mech)))


def single_player_params(mech: str, inst: Instance, player: int) -> MechParams:
    """M1/M2 are run at the public target Val = opt_i (true costs)."""
    target = exact_benchmark("opt_i", inst, param=player).value
    return MechParams(player=player, target=target)


def with_budget(inst: Instance, budget) -> Instance:
    return replace(inst, budget=budget)


def flat_instance(seed: int, k: int) -> Instance:
    """k single-item players with near-equal additive values, everything affordable, no overbidding.

    OPT_Bench(l) is positive only when more than l players contribute, which the
    mixed-shape corpora rarely produce; this family makes those bounds bind.
    """
    rng = random.Random(seed)
    values = [rng.choice((2, 3)) for _ in range(k)]
    classes, true = [], []
    for i in range(k):
        a, b = rng.sample((1, 2, 3), 2)
        members = (CostFunction.from_weights(i, (i,), (a,)), CostFunction.from_weights(i, (i,), (b,)))
        classes.append(CostClass(i, members))
        true.append(members[0])
    budget = sum(c(1 << i) for i, c in enumerate(true))
    return Instance(k, tuple((i,) for i in range(k)), budget, Valuation.additive(values, "xos"), tuple(true),
                    tuple(classes), True, {"family": "flat", "seed": str(seed)})


def flat_corpus(count=50, seed=0) -> list:
    return [flat_instance(seed * 10007 + j, 6 + j % 3) for j in range(count)]
