"""Tapes, outcomes, parameters, the evaluation context and VCG payments."""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace
from fractions import Fraction
from functools import lru_cache

from ..instances import N_MAX_RUN, Instance, aggregate_costs, validate_class
from ..oracles import constrained_demand

CLASS_ORDER = ("additive", "submodular", "xos", "subadditive")


class MechanismError(ValueError):
    pass


@dataclass(frozen=True)
class RandomTape:
    """Every coin a mechanism may flip. None means "not provided"."""

    partition_bits: tuple | None = None
    branch_coin: Fraction | None = None
    sample_coin: Fraction | None = None
    proxy_partition_bits: tuple | None = None
    j_coin: bool | None = None
    exponent_coin: int | None = None
    index_coin: int | None = None

    def need(self, name):
        val = getattr(self, name)
        if val is None:
            raise MechanismError(f"tape is missing field {name}")
        return val

    def to_json(self) -> dict:
        out = {}
        for f in fields(self):
            val = getattr(self, f.name)
            if val is None:
                continue
            if isinstance(val, tuple):
                val = [bool(b) for b in val]
            elif isinstance(val, Fraction):
                val = f"{val.numerator}/{val.denominator}"
            out[f.name] = val
        return out

    @classmethod
    def from_json(cls, d) -> "RandomTape":
        kw = {}
        for key, val in d.items():
            if key in ("partition_bits", "proxy_partition_bits"):
                val = tuple(bool(b) for b in val)
            elif key in ("branch_coin", "sample_coin"):
                val = Fraction(val)
                if not 0 <= val < 1:
                    raise MechanismError(f"{key} must lie in [0, 1)")
            elif key == "j_coin":
                val = bool(val)
            elif key in ("exponent_coin", "index_coin"):
                val = int(val)
            else:
                raise MechanismError(f"unknown tape field {key}")
            kw[key] = val
        return cls(**kw)


@dataclass(frozen=True)
class Outcome:
    chosen: int
    payments: tuple
    flags: tuple = ()
    trace: tuple = field(default=(), compare=False)

    def payment(self, i) -> Fraction:
        return self.payments[i]

    @property
    def total_payment(self) -> Fraction:
        return sum(self.payments, Fraction(0))

    def to_json(self) -> dict:
        def enc(x):
            if isinstance(x, Fraction):
                return f"{x.numerator}/{x.denominator}"
            if isinstance(x, (list, tuple)):
                return [enc(y) for y in x]
            return x
        return {
            "chosen": self.chosen,
            "payments": [enc(p) for p in self.payments],
            "flags": {str(i): f for i, f in self.flags},
            "trace": [[name, enc(val)] for name, val in self.trace],
        }


@dataclass(frozen=True)
class MechParams:
    """Mechanism knobs. None selects the mechanism's own default."""

    lam: Fraction | None = None
    p: Fraction | None = None
    beta: Fraction = Fraction(1)
    gamma: Fraction = Fraction(1)
    epsilon: Fraction | None = None
    r: int | None = None
    target: Fraction | None = None
    player: int = 0
    gamma_hat: Fraction | None = None
    sd_refine: bool = False
    hook: str = "UNIBF_XOS_NOB"

    def __post_init__(self):
        for name in ("lam", "p", "beta", "gamma", "epsilon", "target", "gamma_hat"):
            val = getattr(self, name)
            if val is not None and not isinstance(val, Fraction):
                if isinstance(val, float):
                    raise MechanismError(f"{name}: floats are not accepted")
                object.__setattr__(self, name, Fraction(val))
        if self.lam is not None and not 0 <= self.lam <= Fraction(1, 2):
            raise MechanismError("lambda must lie in [0, 1/2]")
        if self.p is not None and not 0 <= self.p <= 1:
            raise MechanismError("p must lie in [0, 1]")
        if self.beta < 1 or self.gamma < 1:
            raise MechanismError("beta and gamma must be >= 1")
        if self.gamma_hat is not None and self.gamma_hat < 1:
            raise MechanismError("gamma_hat must be >= 1")

    def with_defaults(self, **defaults) -> "MechParams":
        kw = {k: v for k, v in defaults.items() if getattr(self, k) is None}
        return replace(self, **kw) if kw else self

    def to_json(self) -> dict:
        out = {}
        for f in fields(self):
            val = getattr(self, f.name)
            if isinstance(val, Fraction):
                val = f"{val.numerator}/{val.denominator}"
            out[f.name] = val
        return out


class Context:
    """An instance together with one reported cost profile, plus a memo table."""

    def __init__(self, inst: Instance, reports: tuple):
        self.inst = inst
        self.reports = reports
        self.q = aggregate_costs(inst.groups, reports)
        self.v = inst.v
        self.B = inst.budget
        self.memo = {}

    def cached(self, key, fn):
        if key not in self.memo:
            self.memo[key] = fn()
        return self.memo[key]

    def zeros(self) -> list:
        return [Fraction(0)] * self.inst.k


@lru_cache(maxsize=4096)
def context(inst: Instance, reports: tuple) -> Context:
    return Context(inst, reports)


@lru_cache(maxsize=256)
def class_ok(v, cls) -> bool:
    return validate_class(v, cls)


def check_requirements(spec, inst: Instance, reports=None):
    """Raise MechanismError unless the instance meets the mechanism's preconditions."""
    if inst.n > N_MAX_RUN:
        raise MechanismError(f"n={inst.n} exceeds mechanism limit {N_MAX_RUN}")
    if inst.budget <= 0:
        raise MechanismError("budget must be positive")
    declared = inst.v.declared_class
    if CLASS_ORDER.index(declared) > CLASS_ORDER.index(spec.valuation):
        raise MechanismError(f"{spec.id} needs a {spec.valuation} valuation, instance declares {declared}")
    if not class_ok(inst.v, declared):
        raise MechanismError(f"valuation fails its declared class {declared}")
    if spec.no_overbidding and not inst.no_overbidding:
        raise MechanismError(f"{spec.id} needs a no_overbidding instance")
    profiles = [c for cls in inst.cost_classes for c in cls.members]
    if reports is not None:
        profiles += list(reports)
    if spec.costs == "superadditive" and not all(c.superadditive for c in profiles):
        raise MechanismError(f"{spec.id} needs superadditive costs")
    if spec.costs == "additive" and not all(c.additive for c in profiles):
        raise MechanismError(f"{spec.id} needs additive costs")


def vcg_payments(ctx: Context, winner: int, kappa, cap, region: int, vtab=None, excluded=None) -> list:
    """Payments v(W)/kappa - c(W - G_i) - h_i for every player touching W.

    h_i = (1/kappa) * best capped-demand objective over region - G_i.
    `excluded(sub_region)` may supply that best set (default: brute force).
    """
    if kappa == 0:
        raise MechanismError("VCG payments need kappa > 0")
    inst, q = ctx.inst, ctx.q
    vtab = vtab if vtab is not None else ctx.v
    pay = ctx.zeros()
    for i, g in enumerate(inst.group_masks):
        if not winner & g:
            continue
        sub = region & ~g
        best = excluded(sub) if excluded else constrained_demand(vtab, q, kappa, cap, sub)
        h = (vtab[best] - kappa * q[best]) / kappa
        pay[i] = vtab[winner] / kappa - q[winner & ~g] - h
    return pay


def pay_b_to_owner(ctx, chosen: int) -> list:
    pay = ctx.zeros()
    if chosen:
        pay[ctx.inst.owner[(chosen & -chosen).bit_length() - 1]] = ctx.B
    return pay


def branch(tape: RandomTape, p) -> bool:
    """True when the "with probability p" branch is taken."""
    return tape.need("branch_coin") < p


def branch_points(p):
    """The two mass points of a branch coin: (coin, probability)."""
    pts = []
    if p > 0:
        pts.append((Fraction(0), Fraction(p)))
    if p < 1:
        pts.append((Fraction(p), 1 - Fraction(p)))
    return pts


def partitions(k):
    return [tuple(bool(x >> i & 1) for i in range(k)) for x in range(1 << k)]
