"""Immutable domain types. All numbers are Fractions; subsets are bitmasks."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

from ..subsets import mask_of, submasks

VALUATION_VARIANTS = ("table", "additive", "xos")
VALUATION_CLASSES = ("additive", "submodular", "xos", "subadditive")
N_MAX_VALIDATE = 12
N_MAX_RUN = 10


class InstanceError(ValueError):
    """Invalid instance data. `path` names the offending field."""

    def __init__(self, path, msg):
        super().__init__(f"{path}: {msg}")
        self.path = path
        self.msg = msg


def frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x.strip())
    if isinstance(x, float):
        raise TypeError("floats are not accepted; use int, str or Fraction")
    return Fraction(x)


def _additive_table(weights):
    n = len(weights)
    t = [Fraction(0)] * (1 << n)
    for m in range(1, 1 << n):
        low = m & -m
        t[m] = t[m ^ low] + weights[low.bit_length() - 1]
    return t


@dataclass(frozen=True)
class Valuation:
    n: int
    variant: str
    payload: tuple
    declared_class: str = "xos"
    monotone: bool = True

    def __post_init__(self):
        if self.variant not in VALUATION_VARIANTS:
            raise InstanceError("valuation.variant", f"unknown variant {self.variant!r}")
        if self.declared_class not in VALUATION_CLASSES:
            raise InstanceError("valuation.class", f"unknown class {self.declared_class!r}")
        if self.variant == "table":
            payload = tuple(frac(x) for x in self.payload)
            if len(payload) != 1 << self.n:
                raise InstanceError("valuation.table", f"expected {1 << self.n} entries, got {len(payload)}")
        elif self.variant == "additive":
            payload = tuple(frac(x) for x in self.payload)
            if len(payload) != self.n:
                raise InstanceError("valuation.weights", f"expected {self.n} weights")
        else:
            payload = tuple(tuple(frac(x) for x in cl) for cl in self.payload)
            if not payload:
                raise InstanceError("valuation.clauses", "at least one clause required")
            for j, cl in enumerate(payload):
                if len(cl) != self.n:
                    raise InstanceError(f"valuation.clauses[{j}]", f"expected {self.n} weights")
        object.__setattr__(self, "payload", payload)
        if self.table[0] != 0:
            raise InstanceError("valuation", "not normalized: v(empty) != 0")

    @classmethod
    def additive(cls, weights, declared_class="additive"):
        w = tuple(frac(x) for x in weights)
        return cls(len(w), "additive", w, declared_class, all(x >= 0 for x in w))

    @classmethod
    def from_table(cls, n, table, declared_class, monotone=True):
        return cls(n, "table", tuple(table), declared_class, monotone)

    @classmethod
    def from_function(cls, n, fn, declared_class, monotone=True):
        return cls(n, "table", tuple(frac(fn(m)) for m in range(1 << n)), declared_class, monotone)

    @classmethod
    def xos(cls, clauses, declared_class="xos", monotone=True):
        cl = tuple(tuple(frac(x) for x in c) for c in clauses)
        return cls(len(cl[0]), "xos", cl, declared_class, monotone)

    @cached_property
    def table(self) -> tuple:
        if self.variant == "table":
            return self.payload
        if self.variant == "additive":
            return tuple(_additive_table(self.payload))
        best = None
        for cl in self.payload:
            t = _additive_table(cl)
            best = t if best is None else [max(a, b) for a, b in zip(best, t)]
        return tuple(best)

    def __getitem__(self, mask):
        return self.table[mask]

    def __call__(self, mask):
        return self.table[mask]

    def single(self, e) -> Fraction:
        return self.table[1 << e]


@dataclass(frozen=True)
class CostFunction:
    """Monotone normalized cost on subsets of the owner's items.

    `table` is indexed by local bitmask: bit j is the owner's j-th item in
    ascending id order.
    """

    owner: int
    items: tuple
    table: tuple
    additive: bool = False
    superadditive: bool = False

    def __post_init__(self):
        items = tuple(int(e) for e in self.items)
        table = tuple(frac(x) for x in self.table)
        object.__setattr__(self, "items", items)
        object.__setattr__(self, "table", table)
        path = f"costs[{self.owner}]"
        if len(table) != 1 << len(items):
            raise InstanceError(f"{path}.table", f"expected {1 << len(items)} entries, got {len(table)}")
        if list(items) != sorted(set(items)):
            raise InstanceError(f"{path}.items", "items must be ascending and distinct")
        if table[0] != 0:
            raise InstanceError(f"{path}.table", "not normalized: c(empty) != 0")
        m = len(items)
        for s in range(1 << m):
            for j in range(m):
                if not s >> j & 1 and table[s] > table[s | 1 << j]:
                    raise InstanceError(f"{path}.table", f"not monotone at local set {s}")
        if self.additive and not is_additive_fn(table, m):
            raise InstanceError(f"{path}.additive", "flagged additive but is not")
        if self.superadditive and not is_superadditive_fn(table, m):
            raise InstanceError(f"{path}.superadditive", "flagged superadditive but is not")

    @classmethod
    def from_weights(cls, owner, items, weights):
        w = [frac(x) for x in weights]
        return cls(owner, tuple(items), tuple(_additive_table(w)), True, True)

    @classmethod
    def from_function(cls, owner, items, fn, additive=False, superadditive=False):
        m = len(items)
        return cls(owner, tuple(items), tuple(frac(fn(s)) for s in range(1 << m)), additive, superadditive)

    def local(self, mask: int) -> int:
        loc = 0
        for j, e in enumerate(self.items):
            if mask >> e & 1:
                loc |= 1 << j
        return loc

    def __call__(self, mask: int) -> Fraction:
        """Cost of the owner's part of a global mask."""
        return self.table[self.local(mask)]

    def single(self, e) -> Fraction:
        return self.table[1 << self.items.index(e)]


def is_additive_fn(table, m) -> bool:
    for s in range(1, 1 << m):
        if table[s] != sum((table[1 << j] for j in range(m) if s >> j & 1), Fraction(0)):
            return False
    return True


def is_superadditive_fn(table, m) -> bool:
    full = (1 << m) - 1
    for s in range(1, 1 << m):
        rest = full ^ s
        for t in submasks(rest):
            if t and t > s and table[s | t] < table[s] + table[t]:
                return False
    return True


@dataclass(frozen=True)
class CostClass:
    owner: int
    members: tuple

    def __post_init__(self):
        members = tuple(self.members)
        object.__setattr__(self, "members", members)
        if not members:
            raise InstanceError(f"cost_classes[{self.owner}]", "empty cost class")
        if len(set(members)) != len(members):
            raise InstanceError(f"cost_classes[{self.owner}]", "members not pairwise distinct")
        for j, c in enumerate(members):
            if c.owner != self.owner:
                raise InstanceError(f"cost_classes[{self.owner}][{j}]", "wrong owner")

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, j):
        return self.members[j]

    def index(self, c) -> int:
        return self.members.index(c)


@dataclass(frozen=True)
class Instance:
    n: int
    groups: tuple
    budget: Fraction
    valuation: Valuation
    true_costs: tuple
    cost_classes: tuple
    no_overbidding: bool = False
    meta: tuple = field(default=())

    def __post_init__(self):
        groups = tuple(tuple(int(e) for e in sorted(g)) for g in self.groups)
        object.__setattr__(self, "groups", groups)
        object.__setattr__(self, "budget", frac(self.budget))
        object.__setattr__(self, "true_costs", tuple(self.true_costs))
        object.__setattr__(self, "cost_classes", tuple(
            c if isinstance(c, CostClass) else CostClass(i, tuple(c)) for i, c in enumerate(self.cost_classes)))
        meta = self.meta
        if isinstance(meta, dict):
            meta = tuple(sorted((str(k), str(v)) for k, v in meta.items()))
        object.__setattr__(self, "meta", tuple(meta))
        self._check()

    def _check(self):
        if self.n < 1:
            raise InstanceError("n", "need at least one item")
        if self.valuation.n != self.n:
            raise InstanceError("valuation", "item count does not match n")
        seen = set()
        for i, g in enumerate(self.groups):
            if not g:
                raise InstanceError(f"groups[{i}]", "empty group")
            for e in g:
                if not 0 <= e < self.n:
                    raise InstanceError(f"groups[{i}]", f"item {e} out of range")
                if e in seen:
                    raise InstanceError("groups", "groups not disjoint")
                seen.add(e)
        if len(seen) != self.n:
            raise InstanceError("groups", "groups do not cover all items")
        if self.budget < 0:
            raise InstanceError("budget", "negative budget")
        k = len(self.groups)
        if len(self.true_costs) != k:
            raise InstanceError("true_costs", f"expected {k} cost functions")
        if len(self.cost_classes) != k:
            raise InstanceError("cost_classes", f"expected {k} classes")
        for i, g in enumerate(self.groups):
            cls = self.cost_classes[i]
            if cls.owner != i:
                raise InstanceError(f"cost_classes[{i}]", "wrong owner")
            for j, c in enumerate(cls.members):
                if c.items != g:
                    raise InstanceError(f"cost_classes[{i}][{j}]", "items do not match group")
                if self.no_overbidding:
                    for s in range(len(g)):
                        if c.table[1 << s] > self.budget:
                            raise InstanceError(f"cost_classes[{i}][{j}]",
                                                "violates no_overbidding: single item costs more than B")
            if self.true_costs[i] not in cls.members:
                raise InstanceError(f"true_costs[{i}]", "true cost not in cost class")

    @property
    def k(self) -> int:
        return len(self.groups)

    @property
    def universe(self) -> int:
        return (1 << self.n) - 1

    @cached_property
    def group_masks(self) -> tuple:
        return tuple(mask_of(g) for g in self.groups)

    @cached_property
    def owner(self) -> tuple:
        own = [0] * self.n
        for i, g in enumerate(self.groups):
            for e in g:
                own[e] = i
        return tuple(own)

    @property
    def v(self) -> Valuation:
        return self.valuation

    @property
    def meta_dict(self) -> dict:
        return dict(self.meta)

    def region(self, players) -> int:
        m = 0
        for i in players:
            m |= self.group_masks[i]
        return m

    def players_in(self, mask) -> list:
        return [i for i, g in enumerate(self.group_masks) if g & mask]

    def profile(self, idx) -> tuple:
        """Cost profile from per-player class indices."""
        return tuple(self.cost_classes[i].members[j] for i, j in enumerate(idx))

    @cached_property
    def true_index(self) -> tuple:
        return tuple(self.cost_classes[i].index(c) for i, c in enumerate(self.true_costs))

    @cached_property
    def digest(self) -> str:
        from .io import serialize_instance
        return hashlib.sha256(serialize_instance(self)).hexdigest()[:16]

    def replace(self, **kw) -> "Instance":
        from dataclasses import replace
        return replace(self, **kw)


@lru_cache(maxsize=8192)
def aggregate_costs(groups: tuple, profile: tuple) -> tuple:
    """Table of c(S) = sum_i c_i(S & G_i) over all global masks."""
    parts = {0: Fraction(0)}
    for g, c in zip(groups, profile):
        nxt = {}
        for loc in range(1 << len(g)):
            gm = 0
            for j, e in enumerate(g):
                if loc >> j & 1:
                    gm |= 1 << e
            cost = c.table[loc]
            for m, val in parts.items():
                nxt[m | gm] = val + cost
        parts = nxt
    n = max((e for g in groups for e in g), default=-1) + 1
    return tuple(parts[m] for m in range(1 << n))


def costs_of(inst: Instance, profile=None) -> tuple:
    return aggregate_costs(inst.groups, tuple(profile) if profile is not None else inst.true_costs)
