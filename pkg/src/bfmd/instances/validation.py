"""Class checks for valuations: additive, submodular, subadditive, XOS."""
from __future__ import annotations

from fractions import Fraction

from ..lp import simplex
from ..subsets import fmt_set, items_of, submasks
from .types import N_MAX_VALIDATE, InstanceError, Valuation


def is_monotone(t, n) -> bool:
    for s in range(1 << n):
        for e in range(n):
            if not s >> e & 1 and t[s] > t[s | 1 << e]:
                return False
    return True


def is_additive(t, n) -> bool:
    for s in range(1, 1 << n):
        low = s & -s
        if t[s] != t[s ^ low] + t[low]:
            return False
    return True


def submodular_witness(t, n):
    """(S, e, f) violating v(S+e)+v(S+f) >= v(S+e+f)+v(S), or None."""
    for s in range(1 << n):
        for e in range(n):
            if s >> e & 1:
                continue
            for f in range(e + 1, n):
                if s >> f & 1:
                    continue
                if t[s | 1 << e] + t[s | 1 << f] < t[s | 1 << e | 1 << f] + t[s]:
                    return s, e, f
    return None


def subadditive_witness(t, n, monotone=True):
    """(S, T) with v(S|T) > v(S)+v(T), or None.

    For monotone v disjoint pairs suffice; otherwise all pairs are scanned.
    """
    full = (1 << n) - 1
    for s in range(1, 1 << n):
        others = submasks(full ^ s) if monotone else range(1, 1 << n)
        for u in others:
            if u and t[s | u] > t[s] + t[u]:
                return s, u
    return None


def xos_witness(v: Valuation):
    """A set S with no supporting additive price, or None.

    For each S solve min sum_T v(T) mu_T subject to every element of S being
    covered exactly once; S has a supporting price iff the optimum is v(S).
    """
    n, t = v.n, v.table
    if v.variant in ("additive", "xos"):
        return None
    if submodular_witness(t, n) is None:
        return None
    for s in range(1, 1 << n):
        elems = items_of(s)
        cols = [u for u in submasks(s) if u]
        A = [[Fraction(1 if u >> e & 1 else 0) for u in cols] for e in elems]
        res = simplex([t[u] for u in cols], A, [1] * len(elems), ["="] * len(elems), maximize=False)
        if res.value < t[s]:
            return s
    return None


def validate_class(v: Valuation, cls: str | None = None) -> bool:
    cls = cls or v.declared_class
    n = v.n
    if n > N_MAX_VALIDATE:
        raise InstanceError("valuation", f"n={n} exceeds validation limit {N_MAX_VALIDATE}")
    t = v.table
    if t[0] != 0:
        raise InstanceError("valuation", "not normalized")
    if any(x < 0 for x in t):
        return False
    if v.monotone and not is_monotone(t, n):
        return False
    if cls == "additive":
        return is_additive(t, n)
    if cls == "submodular":
        return submodular_witness(t, n) is None
    if cls == "subadditive":
        return subadditive_witness(t, n, is_monotone(t, n)) is None
    if cls == "xos":
        return xos_witness(v) is None
    raise InstanceError("valuation.class", f"unknown class {cls!r}")


def class_diagnostics(v: Valuation) -> list[str]:
    """Human-readable reasons why v fails its declared class."""
    n, t = v.n, v.table
    out = []
    if any(x < 0 for x in t):
        out.append("valuation takes negative values")
    if v.monotone and not is_monotone(t, n):
        out.append("valuation flagged monotone but is not")
    cls = v.declared_class
    if cls == "additive" and not is_additive(t, n):
        out.append("declared additive but is not additive")
    elif cls == "submodular":
        w = submodular_witness(t, n)
        if w:
            out.append(f"declared submodular; exchange inequality fails at S={fmt_set(w[0])}, e={w[1]}, f={w[2]}")
    elif cls == "subadditive":
        w = subadditive_witness(t, n, is_monotone(t, n))
        if w:
            out.append(f"declared subadditive; v(S|T) > v(S)+v(T) at S={fmt_set(w[0])}, T={fmt_set(w[1])}")
    elif cls == "xos":
        w = xos_witness(v)
        if w is not None:
            out.append(f"declared xos; no supporting price for S={fmt_set(w)}")
    return out
