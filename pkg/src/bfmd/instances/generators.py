"""Instance generators: the canonical toy instance, lower-bound families, random instances."""
from __future__ import annotations

import math
import random
from dataclasses import asdict, dataclass
from fractions import Fraction

from ..subsets import popcount
from .types import CostClass, CostFunction, Instance, InstanceError, Valuation, aggregate_costs
from .validation import validate_class

PHI_SURROGATE = Fraction(1618, 1000)


def _single_player(values, budget, costs, true=0, nob=False, cls="additive", meta=None):
    n = len(values)
    items = tuple(range(n))
    members = tuple(CostFunction.from_weights(0, items, c) for c in costs)
    return Instance(n, (items,), Fraction(budget), Valuation.additive(values, cls),
                    (members[true],), (CostClass(0, members),), nob, meta or {})


def canonical_instance() -> Instance:
    """Items a,b,c,d; player 0 owns {a,b}, player 1 owns {c,d}; B=3.

    Additive values (4,2,3,1) and true additive costs (2,1,2,1). Each class
    carries one extra member so deviations can be audited.
    """
    g0, g1 = (0, 1), (2, 3)
    c0 = CostFunction.from_weights(0, g0, (2, 1))
    c0b = CostFunction.from_weights(0, g0, (3, 1))
    c1 = CostFunction.from_weights(1, g1, (2, 1))
    c1b = CostFunction.from_weights(1, g1, (1, 2))
    return Instance(4, (g0, g1), Fraction(3), Valuation.additive((4, 2, 3, 1), "additive"),
                    (c0, c1), (CostClass(0, (c0, c0b)), CostClass(1, (c1, c1b))), True,
                    {"name": "I0", "items": "abcd"})


def gen_lower_bound(family: str, **params) -> Instance:
    if family == "det_overbid":
        alpha = Fraction(params.get("alpha", 2))
        if alpha < 1:
            raise InstanceError("alpha", "alpha must be >= 1")
        return _single_player((alpha, 1), 1, [(1, 0), (2, 1)],
                              meta={"family": "det_overbid", "alpha": str(alpha), "items": "ef"})
    if family == "rand_overbid":
        n = int(params.get("n", 3))
        eps = Fraction(params.get("epsilon", 1))
        if eps <= 0:
            raise InstanceError("epsilon", "epsilon must be positive")
        gamma = 1 + Fraction(n) / eps
        values = [gamma ** (n - e) for e in range(1, n + 1)]
        big = 1 + n * gamma ** n
        costs = [[big] * (l - 1) + [1] + [0] * (n - l) for l in range(1, n + 1)]
        return _single_player(values, 1, costs,
                              meta={"family": "rand_overbid", "n": str(n), "epsilon": str(eps)})
    if family == "los_nob":
        n = int(params.get("n", 4))
        if n < 1 or n & (n - 1):
            raise InstanceError("n", "n must be a power of 2")
        thetas = [1 << l for l in range(n.bit_length())]
        return _single_player([1] * n, n, [[t] * n for t in thetas], nob=True,
                              meta={"family": "los_nob", "n": str(n)})
    if family == "phi":
        return _single_player((1, PHI_SURROGATE), 2, [(1, 2), (Fraction(3, 2), Fraction(1, 2))], nob=True,
                              meta={"family": "phi", "phi_surrogate": str(PHI_SURROGATE)})
    if family == "emax_trap":
        b = Fraction(params.get("budget", 4))
        return _single_player((2, 1), b, [(b, 1), (b + 1, b)],
                              meta={"family": "emax_trap", "items": "ef"})
    if family == "anari":
        return _anari(int(params.get("n", 3)), int(params.get("seed", 0)), int(params.get("grid", 4)))
    raise InstanceError("family", f"unknown family {family!r}")


def _anari(n, seed, grid):
    # Cost CDF 1/(e(1-x)) on [0, 1-1/e], inverted and floored onto a 1/grid lattice.
    rng = random.Random(seed)
    top = math.floor(grid * (1 - 1 / math.e))
    support = [Fraction(j, grid) for j in range(top + 1)]
    groups = tuple((e,) for e in range(n))
    classes, true = [], []
    for i in range(n):
        u = rng.random()
        x = 0.0 if u < 1 / math.e else 1 - 1 / (math.e * u)
        j = min(top, math.floor(grid * x))
        members = tuple(CostFunction.from_weights(i, (i,), (s,)) for s in support)
        classes.append(CostClass(i, members))
        true.append(members[j])
    budget = Fraction(math.floor(grid * n * (1 - 2 / math.e)), grid)
    return Instance(n, groups, budget, Valuation.additive([1] * n), tuple(true), tuple(classes), True,
                    {"family": "anari", "n": str(n), "seed": str(seed), "grid": str(grid)})


@dataclass(frozen=True)
class RandomParams:
    n: int = 4
    k: int = 2
    valuation: str = "xos"
    costs: str = "general"
    class_size: int = 2
    budget: str = "half"
    no_overbidding: bool = False
    max_value: int = 6
    max_cost: int = 4


def _random_valuation(rng, n, family, max_value):
    if family == "additive":
        w = [rng.randint(0, max_value) for _ in range(n)]
        if not any(w):
            w[rng.randrange(n)] = 1
        return Valuation.additive(w, "additive")
    if family == "submodular":
        # weighted coverage
        m = n + 2
        wt = [rng.randint(1, 4) for _ in range(m)]
        cover = [sum(1 << x for x in rng.sample(range(m), rng.randint(1, 3))) for _ in range(n)]

        def cov(s):
            u = 0
            for e in range(n):
                if s >> e & 1:
                    u |= cover[e]
            return sum(wt[x] for x in range(m) if u >> x & 1)
        return Valuation.from_function(n, cov, "submodular")
    if family == "xos":
        clauses = [[rng.randint(0, max_value) for _ in range(n)] for _ in range(rng.randint(2, 3))]
        return Valuation.xos(clauses, "xos")
    if family == "subadditive":
        w = [rng.randint(1, 4) for _ in range(n)]
        t = rng.randint(2, 3)

        def ceil_w(s):
            return -(-sum(w[e] for e in range(n) if s >> e & 1) // t)
        return Valuation.from_function(n, ceil_w, "subadditive")
    raise InstanceError("valuation", f"unknown valuation family {family!r}")


def _random_cost(rng, owner, items, family, max_cost):
    m = len(items)
    if family == "additive":
        return CostFunction.from_weights(owner, items, [rng.randint(0, max_cost) for _ in range(m)])
    if family == "superadditive":
        a = [rng.randint(0, max_cost) for _ in range(m)]
        b = rng.randint(0, 2)

        def f(s):
            size = popcount(s)
            return sum(a[j] for j in range(m) if s >> j & 1) + b * size * (size - 1) // 2
        return CostFunction.from_function(owner, items, f, additive=(b == 0 or m < 2), superadditive=True)
    if family == "general":
        t = [0] * (1 << m)
        for s in range(1, 1 << m):
            base = max(t[s ^ (1 << j)] for j in range(m) if s >> j & 1)
            bump = rng.randint(0, max_cost) if popcount(s) == 1 else rng.randint(0, max_cost // 2 + 1)
            t[s] = base + bump
        return CostFunction(owner, tuple(items), tuple(t))
    raise InstanceError("costs", f"unknown cost family {family!r}")


def gen_random(params: RandomParams, seed: int) -> Instance:
    n, k = params.n, params.k
    if k > n or k < 1:
        raise InstanceError("k", "need 1 <= k <= n")
    rng = random.Random(seed)
    perm = list(range(n))
    rng.shuffle(perm)
    owner = {perm[i]: i for i in range(k)}
    for e in perm[k:]:
        owner[e] = rng.randrange(k)
    groups = tuple(tuple(sorted(e for e in range(n) if owner[e] == i)) for i in range(k))
    v = _random_valuation(rng, n, params.valuation, params.max_value)
    classes = []
    for i, g in enumerate(groups):
        members = []
        for _ in range(50 * params.class_size):
            c = _random_cost(rng, i, g, params.costs, params.max_cost)
            if c not in members:
                members.append(c)
            if len(members) == params.class_size:
                break
        classes.append(CostClass(i, tuple(members)))
    true = tuple(cls.members[rng.randrange(len(cls.members))] for cls in classes)
    total = aggregate_costs(groups, true)[(1 << n) - 1]
    if params.budget == "half":
        budget = max(Fraction(1), Fraction(math.ceil(total / 2)))
    elif params.budget == "third":
        budget = max(Fraction(1), Fraction(math.ceil(total / 3)))
    else:
        budget = Fraction(params.budget)
    if params.no_overbidding:
        top = max(c.table[1 << j] for cls in classes for c in cls.members for j in range(len(c.items)))
        budget = max(budget, top)
    inst = Instance(n, groups, budget, v, true, tuple(classes), params.no_overbidding,
                    {"generator": "random", "seed": str(seed),
                     **{f"param.{key}": str(val) for key, val in asdict(params).items()}})
    if not validate_class(v):
        raise InstanceError("valuation", "generated valuation fails its declared class")
    return inst
