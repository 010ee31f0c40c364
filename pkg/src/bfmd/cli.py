"""Command-line front end: validate, run, audit, suite, generate.

Exit codes: 0 success, 1 audit or validation failure, 2 input error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

from .benchmarks import KINDS, exact_benchmark
from .corpus import random_corpus
from .instances import (
    InstanceError,
    canonical_instance,
    class_diagnostics,
    fstr,
    gen_lower_bound,
    load_instance,
    save_instance,
    validate_class,
)
from .mechanisms import REGISTRY, MechanismError, MechParams, RandomTape, resolve_params, run_mechanism
from .subsets import fmt_set
from .verify import TapeOverflow, check_mechanism, enumerate_tapes, lemma_suite, sample_tapes

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _rational(s):
    try:
        return Fraction(s)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not an exact rational: {s!r}") from None


def parse_tapes(spec: str):
    """'enumerate', 'file:PATH' or 'seed:N,count:M'."""
    if spec == "enumerate":
        return ("enumerate",)
    if spec.startswith("file:"):
        return ("file", spec[5:])
    if spec.startswith("seed:"):
        parts = dict(p.split(":", 1) for p in spec.split(",") if ":" in p)
        try:
            seed, count = int(parts["seed"]), int(parts.get("count", 1000))
        except (KeyError, ValueError):
            raise InputError(f"bad tape source {spec!r}") from None
        if count < 1:
            raise InputError("sample count must be positive")
        return ("seed", seed, count)
    raise InputError(f"bad tape source {spec!r}; use enumerate, file:PATH or seed:N,count:M")


def parse_benchmarks(text):
    """Comma list of benchmark kinds; 'KIND:PARAM' passes a parameter, e.g. OPT_Bench_l:5."""
    out = []
    for tok in filter(None, (t.strip() for t in (text or "").split(","))):
        kind, _, param = tok.partition(":")
        if kind not in KINDS:
            raise InputError(f"unknown benchmark {kind!r}")
        out.append((tok, kind, param or None))
    return out


def _load(path):
    try:
        return load_instance(path)
    except OSError as err:
        raise InputError(f"{path}: {err.strerror}") from None
    except InstanceError as err:
        raise InputError(f"{path}: {err}") from None


def _params(args) -> MechParams:
    kw = {}
    for name, key in (("lam", "lam"), ("p", "p"), ("beta", "beta"), ("gamma", "gamma"),
                      ("epsilon", "epsilon"), ("target", "target"), ("gamma_hat", "gamma_hat")):
        val = getattr(args, key, None)
        if val is not None:
            kw[name] = val
    if getattr(args, "player", None) is not None:
        kw["player"] = args.player
    if getattr(args, "r", None) is not None:
        kw["r"] = args.r
    try:
        return MechParams(**kw)
    except MechanismError as err:
        raise InputError(str(err)) from None


def _read_tapes(path):
    try:
        data = json.loads(Path(path).read_text())
    except OSError as err:
        raise InputError(f"{path}: {err.strerror}") from None
    except json.JSONDecodeError as err:
        raise InputError(f"{path}: malformed JSON: {err}") from None
    if isinstance(data, dict):
        data = [data]
    if not isinstance(data, list) or not data:
        raise InputError(f"{path}: expected a tape object or a nonempty list of tapes")
    try:
        tapes = [RandomTape.from_json(d) for d in data]
    except (MechanismError, ValueError, TypeError) as err:
        raise InputError(f"{path}: {err}") from None
    return [(t, Fraction(1, len(tapes))) for t in tapes]


def _emit(args, text):
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=1) + "\n"


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# --- commands ------------------------------------------------------------------------

def cmd_validate(args) -> int:
    ok = True
    lines = []
    for path in args.paths:
        try:
            inst = load_instance(path)
        except OSError as err:
            lines.append(f"{path}: error: {err.strerror}")
            ok = False
            continue
        except InstanceError as err:
            lines.append(f"{path}: error: {err}")
            ok = False
            continue
        lines.append(f"{path}: parsed n={inst.n} k={inst.k} budget={fstr(inst.budget)} digest={inst.digest}")
        try:
            good = validate_class(inst.v)
        except InstanceError as err:
            lines.append(f"{path}: error: {err}")
            ok = False
            continue
        cls = inst.v.declared_class
        if good:
            lines.append(f"{path}: valuation: {cls} ok")
        else:
            ok = False
            for msg in class_diagnostics(inst.v) or [f"declared {cls} but fails the class check"]:
                lines.append(f"{path}: valuation: {msg}")
        for i, c in enumerate(inst.true_costs):
            tags = [t for t, f in (("additive", c.additive), ("superadditive", c.superadditive)) if f]
            lines.append(f"{path}: costs[{i}]: ok {' '.join(tags)}".rstrip())
        if inst.no_overbidding:
            lines.append(f"{path}: no-overbidding: ok")
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK if ok else EXIT_FAIL


def _run_one(inst, mech, params, source, benches):
    full = resolve_params(mech, inst, params)
    if source[0] == "enumerate":
        tapes = enumerate_tapes(mech, inst, full)
    elif source[0] == "seed":
        tapes = sample_tapes(mech, inst, full, seed=source[1], count=source[2])
    else:
        tapes = source[1]
    names = inst.meta_dict.get("items")
    outcomes = []
    expected = Fraction(0)
    for tape, w in tapes:
        out = run_mechanism(mech, inst, None, tape, full)
        val = inst.v[out.chosen]
        expected += w * val
        outcomes.append({"tape": tape.to_json(), "probability": fstr(w), "value": fstr(val),
                         "chosen_items": fmt_set(out.chosen, names), **out.to_json()})
    ratios = {}
    for label, kind, param in benches:
        try:
            b = exact_benchmark(kind, inst, param=param).value
        except (ValueError, ZeroDivisionError) as err:
            raise InputError(f"benchmark {label}: {err}") from None
        ratios[label] = {"benchmark": fstr(b), "ratio": None if b == 0 else fstr(expected / b)}
    return {
        "instance": inst.digest,
        "mechanism": mech,
        "params": full.to_json(),
        "tape_source": source[0],
        "expected_value": fstr(expected),
        "exact": source[0] == "enumerate",
        "benchmarks": ratios,
        "outcomes": outcomes,
    }


def cmd_run(args) -> int:
    params = _params(args)
    source = parse_tapes(args.tapes)
    if source[0] == "file":
        source = ("file", _read_tapes(source[1]))
    benches = parse_benchmarks(args.benchmarks)
    insts = [_load(p) for p in args.instance]
    reports = []
    for inst in insts:
        for mech in args.mech:
            reports.append(_run_one(inst, mech, params, source, benches))
    reports.sort(key=lambda r: (r["instance"], r["mechanism"]))
    if args.format == "csv":
        rows = []
        for r in reports:
            if not r["benchmarks"]:
                rows.append([r["instance"], r["mechanism"], r["expected_value"], "", "", ""])
            for label, b in r["benchmarks"].items():
                rows.append([r["instance"], r["mechanism"], r["expected_value"], label, b["benchmark"],
                             b["ratio"] or ""])
        _emit(args, _csv(["instance", "mechanism", "expected_value", "benchmark", "benchmark_value", "ratio"],
                         rows))
    else:
        _emit(args, _dump(reports[0] if len(reports) == 1 else reports))
    return EXIT_OK


def cmd_audit(args) -> int:
    params = _params(args)
    benches = parse_benchmarks(args.benchmarks)
    if any(param for _, _, param in benches):
        raise InputError("audit benchmarks take no parameters")
    strict = {"auto": None, "full": True, "deviations": False}[args.profiles]
    reports = []
    for inst in [_load(p) for p in args.instance]:
        for mech in args.mech:
            rep = check_mechanism(mech, inst, args.mode, params, strict, [k for _, k, _ in benches])
            reports.append(rep)
    reports.sort(key=lambda r: (r.instance, r.mechanism))
    if args.format == "csv":
        rows = [[r.instance, r.mechanism, c.name, "PASS" if c.passed else "FAIL", c.detail]
                for r in reports for c in r.checks]
        _emit(args, _csv(["instance", "mechanism", "check", "result", "detail"], rows))
    else:
        data = [r.to_json() for r in reports]
        _emit(args, _dump(data[0] if len(data) == 1 else data))
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def _corpus_paths(args):
    paths = list(args.instance or [])
    if args.corpus:
        d = Path(args.corpus)
        if not d.is_dir():
            raise InputError(f"{d}: not a directory")
        paths += sorted(str(p) for p in d.glob("*.json"))
    if not paths:
        raise InputError("no instances given; use --corpus DIR or --instance PATH")
    return paths


def cmd_suite(args) -> int:
    insts = [_load(p) for p in _corpus_paths(args)]
    rep = lemma_suite(insts)
    if args.format == "csv":
        rows = [[c.name, "PASS" if c.passed else "FAIL", c.detail] for c in rep.checks]
        _emit(args, _csv(["check", "result", "detail"], rows))
    else:
        _emit(args, _dump(rep.to_json()))
    return EXIT_OK if rep.passed else EXIT_FAIL


def _kv(pairs):
    out = {}
    for p in pairs or []:
        key, sep, val = p.partition("=")
        if not sep:
            raise InputError(f"expected KEY=VALUE, got {p!r}")
        out[key] = val
    return out


def cmd_generate(args) -> int:
    kw = _kv(args.set)
    if args.kind == "canonical":
        insts = [canonical_instance()]
    elif args.kind == "random":
        try:
            insts = random_corpus(kw.get("valuation", "xos"), kw.get("costs", "additive"),
                                  kw.get("nob", "0") in ("1", "true"), kw.get("budget", "half"),
                                  args.count, args.seed)
        except (InstanceError, ValueError) as err:
            raise InputError(str(err)) from None
    else:
        try:
            insts = [gen_lower_bound(args.kind, **kw)]
        except (InstanceError, ValueError, TypeError) as err:
            raise InputError(str(err)) from None
    if len(insts) == 1 and not args.out.endswith("/") and not Path(args.out).is_dir():
        save_instance(insts[0], args.out)
        return EXIT_OK
    d = Path(args.out)
    d.mkdir(parents=True, exist_ok=True)
    for j, inst in enumerate(insts):
        save_instance(inst, d / f"{args.kind}_{j:03d}.json")
    return EXIT_OK


# --- parser --------------------------------------------------------------------------

def _mech_flags(p, mech_required=True):
    p.add_argument("--instance", action="append", required=True, metavar="PATH")
    p.add_argument("--mech", action="append", required=mech_required, choices=sorted(REGISTRY),
                   metavar="ID")
    p.add_argument("--lambda", dest="lam", type=_rational)
    p.add_argument("--p", type=_rational)
    p.add_argument("--beta", type=_rational)
    p.add_argument("--gamma", type=_rational)
    p.add_argument("--epsilon", type=_rational)
    p.add_argument("--target", type=_rational, help="Val for the single-player mechanisms")
    p.add_argument("--player", type=int)
    p.add_argument("--gamma-hat", dest="gamma_hat", type=_rational)
    p.add_argument("--r", type=int)
    p.add_argument("--benchmarks", default="", metavar="LIST")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", metavar="PATH")


def build_parser():
    ap = argparse.ArgumentParser(prog="bfmd", description="Budget-feasible mechanism laboratory.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and class-check instance files")
    p.add_argument("paths", nargs="+", metavar="PATH")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="run mechanisms on explicit, enumerated or sampled tapes")
    _mech_flags(p)
    p.add_argument("--tapes", default="enumerate")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("audit", help="exhaustive truthfulness / IR / NPT / budget audit")
    _mech_flags(p)
    p.add_argument("--mode", choices=("universal", "expectation"))
    p.add_argument("--profiles", choices=("auto", "full", "deviations"), default="auto")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("suite", help="structural lemma suite over a corpus")
    p.add_argument("--corpus", metavar="DIR")
    p.add_argument("--instance", action="append", metavar="PATH")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", metavar="PATH")
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("generate", help="write generated instances")
    p.add_argument("kind", help="canonical, random, or a lower-bound family "
                                "(det_overbid, rand_overbid, los_nob, phi, emax_trap, anari)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, metavar="PATH")
    p.set_defaults(func=cmd_generate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        return args.func(args)
    except (InputError, MechanismError, InstanceError, TapeOverflow) as err:
        sys.stderr.write(f"bfmd: error: {err}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
