"""Instance JSON encoding. Rationals are "p/q" strings; table keys are decimal masks."""
from __future__ import annotations

import json
from fractions import Fraction

from .types import CostClass, CostFunction, Instance, InstanceError, Valuation


def fstr(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def parse_rational(s, path) -> Fraction:
    if isinstance(s, bool) or not isinstance(s, (str, int)):
        raise InstanceError(path, f"expected a \"p/q\" string, got {s!r}")
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise InstanceError(path, f"bad rational {s!r}") from None


def _table_to_json(table):
    return {str(m): fstr(x) for m, x in enumerate(table)}


def _table_from_json(obj, size, path):
    if not isinstance(obj, dict):
        raise InstanceError(path, "expected an object keyed by bitmask")
    out = []
    for m in range(size):
        if str(m) not in obj:
            raise InstanceError(f"{path}.{m}", "missing table entry")
        out.append(parse_rational(obj[str(m)], f"{path}.{m}"))
    extra = set(obj) - {str(m) for m in range(size)}
    if extra:
        raise InstanceError(path, f"unexpected keys {sorted(extra)}")
    return out


def valuation_to_json(v: Valuation) -> dict:
    d = {"variant": v.variant, "class": v.declared_class, "monotone": v.monotone}
    if v.variant == "table":
        d["table"] = _table_to_json(v.payload)
    elif v.variant == "additive":
        d["weights"] = [fstr(x) for x in v.payload]
    else:
        d["clauses"] = [[fstr(x) for x in cl] for cl in v.payload]
    return d


def valuation_from_json(obj, n) -> Valuation:
    path = "valuation"
    if not isinstance(obj, dict) or "variant" not in obj:
        raise InstanceError(path, "expected an object with a variant")
    variant = obj["variant"]
    cls = obj.get("class", "xos")
    mono = bool(obj.get("monotone", True))
    if variant == "table":
        payload = _table_from_json(obj.get("table"), 1 << n, f"{path}.table")
    elif variant == "additive":
        w = obj.get("weights")
        if not isinstance(w, list):
            raise InstanceError(f"{path}.weights", "expected a list")
        payload = [parse_rational(x, f"{path}.weights[{j}]") for j, x in enumerate(w)]
    elif variant == "xos":
        cl = obj.get("clauses")
        if not isinstance(cl, list):
            raise InstanceError(f"{path}.clauses", "expected a list of lists")
        payload = [[parse_rational(x, f"{path}.clauses[{a}][{j}]") for j, x in enumerate(c)]
                   for a, c in enumerate(cl)]
    else:
        raise InstanceError(f"{path}.variant", f"unknown variant {variant!r}")
    return Valuation(n, variant, tuple(payload), cls, mono)


def cost_to_json(c: CostFunction) -> dict:
    return {"table": _table_to_json(c.table), "additive": c.additive, "superadditive": c.superadditive}


def cost_from_json(obj, owner, items, path) -> CostFunction:
    if not isinstance(obj, dict):
        raise InstanceError(path, "expected an object")
    table = _table_from_json(obj.get("table"), 1 << len(items), f"{path}.table")
    try:
        return CostFunction(owner, tuple(items), tuple(table),
                            bool(obj.get("additive", False)), bool(obj.get("superadditive", False)))
    except InstanceError as err:
        raise InstanceError(path, err.msg) from None


def instance_to_json(inst: Instance) -> dict:
    return {
        "n": inst.n,
        "groups": [list(g) for g in inst.groups],
        "budget": fstr(inst.budget),
        "valuation": valuation_to_json(inst.valuation),
        "true_costs": [cost_to_json(c) for c in inst.true_costs],
        "cost_classes": [[cost_to_json(c) for c in cls.members] for cls in inst.cost_classes],
        "no_overbidding": inst.no_overbidding,
        "meta": dict(inst.meta),
    }


def serialize_instance(inst: Instance) -> bytes:
    return (json.dumps(instance_to_json(inst), indent=1) + "\n").encode("utf-8")


def instance_from_json(d) -> Instance:
    if not isinstance(d, dict):
        raise InstanceError("$", "expected a JSON object")
    for key in ("n", "groups", "budget", "valuation", "true_costs", "cost_classes"):
        if key not in d:
            raise InstanceError(key, "missing field")
    n = d["n"]
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise InstanceError("n", "expected a positive integer")
    groups = d["groups"]
    if not isinstance(groups, list) or not all(isinstance(g, list) for g in groups):
        raise InstanceError("groups", "expected a list of item lists")
    seen = set()
    for i, g in enumerate(groups):
        for e in g:
            if not isinstance(e, int) or isinstance(e, bool):
                raise InstanceError(f"groups[{i}]", f"bad item id {e!r}")
            if e in seen:
                raise InstanceError("groups", "groups not disjoint")
            seen.add(e)
    groups = [sorted(g) for g in groups]
    budget = parse_rational(d["budget"], "budget")
    v = valuation_from_json(d["valuation"], n)
    tc = d["true_costs"]
    cc = d["cost_classes"]
    if not isinstance(tc, list) or len(tc) != len(groups):
        raise InstanceError("true_costs", f"expected {len(groups)} entries")
    if not isinstance(cc, list) or len(cc) != len(groups):
        raise InstanceError("cost_classes", f"expected {len(groups)} entries")
    true_costs = [cost_from_json(c, i, groups[i], f"true_costs[{i}]") for i, c in enumerate(tc)]
    classes = []
    for i, cls in enumerate(cc):
        if not isinstance(cls, list):
            raise InstanceError(f"cost_classes[{i}]", "expected a list")
        members = [cost_from_json(c, i, groups[i], f"cost_classes[{i}][{j}]") for j, c in enumerate(cls)]
        classes.append(CostClass(i, tuple(members)))
    meta = d.get("meta", {})
    if not isinstance(meta, dict):
        raise InstanceError("meta", "expected an object")
    return Instance(n, tuple(tuple(g) for g in groups), budget, v, tuple(true_costs), tuple(classes),
                    bool(d.get("no_overbidding", False)), meta)


def parse_instance(data) -> Instance:
    if isinstance(data, (bytes, bytearray)):
        data = data.decode("utf-8")
    try:
        d = json.loads(data)
    except json.JSONDecodeError as err:
        raise InstanceError("$", f"malformed JSON: {err}") from None
    return instance_from_json(d)


def load_instance(path) -> Instance:
    with open(path, "rb") as fh:
        return parse_instance(fh.read())


def save_instance(inst: Instance, path):
    with open(path, "wb") as fh:
        fh.write(serialize_instance(inst))
