import json
import subprocess
import sys

import pytest

from bfmd.cli import main
from bfmd.instances import (
    CostClass,
    CostFunction,
    Instance,
    Valuation,
    canonical_instance,
    gen_lower_bound,
    save_instance,
)
from fractions import Fraction as F


@pytest.fixture
def i0_path(tmp_path):
    p = tmp_path / "i0.json"
    save_instance(canonical_instance(), p)
    return str(p)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_validate_ok(i0_path, capsys):
    code, out, _ = run(["validate", i0_path], capsys)
    assert code == 0
    assert "valuation: additive ok" in out


def test_validate_overlapping_groups(i0_path, tmp_path, capsys):
    d = json.loads(open(i0_path).read())
    d["groups"] = [[0, 1], [1, 2, 3]]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(d))
    code, out, _ = run(["validate", str(bad)], capsys)
    assert code == 1
    assert "groups not disjoint" in out


def test_validate_names_xos_witness(tmp_path, capsys):
    v = Valuation.from_table(3, [F(0)] + [F(1)] * 6 + [F(2)], "xos")
    costs = tuple(CostFunction.from_weights(i, (i,), (1,)) for i in range(3))
    inst = Instance(3, ((0,), (1,), (2,)), 3, v, costs, tuple(CostClass(i, (c,)) for i, c in enumerate(costs)))
    p = tmp_path / "x.json"
    save_instance(inst, p)
    code, out, _ = run(["validate", str(p)], capsys)
    assert code == 1
    assert "S={0,1,2}" in out


def test_run_second_opt(i0_path, capsys):
    code, out, _ = run(["run", "--instance", i0_path, "--mech", "SECOND_OPT", "--benchmarks", "opt2"], capsys)
    assert code == 0
    rep = json.loads(out)
    o = rep["outcomes"][0]
    assert o["chosen_items"] == "{a,b}"
    assert o["payments"] == ["3/1", "0/1"]
    assert rep["benchmarks"]["opt2"]["ratio"] == "3/2"
    assert rep["instance"] == canonical_instance().digest


def test_run_tape_file(i0_path, tmp_path, capsys):
    tapes = tmp_path / "t.json"
    tapes.write_text(json.dumps([{"partition_bits": [True, False], "branch_coin": "0"},
                                 {"partition_bits": [True, False], "branch_coin": "9/10"}]))
    code, out, _ = run(["run", "--instance", i0_path, "--mech", "UNIBF_XOS_NOB", "--tapes", f"file:{tapes}"],
                       capsys)
    assert code == 0
    rep = json.loads(out)
    assert [o["probability"] for o in rep["outcomes"]] == ["1/2", "1/2"]
    assert rep["outcomes"][1]["chosen_items"] == "{a}"
    assert rep["exact"] is False


def test_run_csv_is_sorted(i0_path, tmp_path, capsys):
    other = tmp_path / "fn.json"
    save_instance(gen_lower_bound("los_nob", n=2), other)
    code, out, _ = run(["run", "--instance", str(other), "--instance", i0_path, "--mech", "SECOND_OPT",
                        "--mech", "OPTALG_EMAX", "--benchmarks", "OPTalg", "--format", "csv"], capsys)
    assert code == 0
    rows = [r.split(",") for r in out.strip().splitlines()[1:]]
    keys = [(r[0], r[1]) for r in rows]
    assert keys == sorted(keys) and len(keys) == 4


def test_run_seeded_monte_carlo_deterministic(i0_path, tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for p in (a, b):
        assert main(["run", "--instance", i0_path, "--mech", "UNIBF_XOS_NOB",
                     "--tapes", "seed:3,count:20", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()


def test_audit_pass(i0_path, tmp_path):
    out = tmp_path / "a.json"
    assert main(["audit", "--instance", i0_path, "--mech", "UNIBF_XOS_NOB", "--out", str(out)]) == 0
    first = out.read_bytes()
    assert json.loads(first)["passed"] is True
    assert main(["audit", "--instance", i0_path, "--mech", "UNIBF_XOS_NOB", "--out", str(out)]) == 0
    assert out.read_bytes() == first


def test_audit_negative_control(tmp_path, capsys):
    p = tmp_path / "fn.json"
    save_instance(gen_lower_bound("emax_trap"), p)
    code, out, _ = run(["audit", "--instance", str(p), "--mech", "STRAWMAN_EMAX"], capsys)
    assert code == 1
    rep = json.loads(out)
    cx = next(c for c in rep["checks"] if c["name"] == "truthfulness")["counterexample"]
    assert cx["utility_lie"] == "3/1"
    assert "tape" in cx


@pytest.mark.parametrize("argv", [
    ["run", "--instance", "missing.json", "--mech", "SECOND_OPT"],
    ["run", "--instance", "{i0}", "--mech", "NOPE"],
    ["run", "--instance", "{i0}", "--mech", "SECOND_OPT", "--lambda", "3/4"],
    ["run", "--instance", "{i0}", "--mech", "SECOND_OPT", "--tapes", "seed:x"],
    ["run", "--instance", "{i0}", "--mech", "SECOND_OPT", "--benchmarks", "bogus"],
    ["run", "--instance", "{i0}", "--mech", "SECOND_OPT", "--benchmarks", "OPT_Param"],
    ["run", "--instance", "{i0}", "--mech", "SECOND_OPT", "--benchmarks", "opt_i:7"],
    ["run", "--instance", "{i0}", "--mech", "M1"],
    ["audit", "--instance", "{i0}", "--mech", "SUBMOD_GREEDY", "--lambda", "x"],
])
def test_input_errors_exit_2(argv, i0_path, capsys):
    argv = [a.replace("{i0}", i0_path) for a in argv]
    code, _, _ = run(argv, capsys)
    assert code == 2


def test_class_mismatch_is_input_error(tmp_path, capsys):
    p = tmp_path / "fn.json"
    save_instance(gen_lower_bound("emax_trap"), p)
    code, _, err = run(["audit", "--instance", str(p), "--mech", "UNIBF_XOS_NOB"], capsys)
    assert code == 2
    assert "error" in err


def test_suite_and_generate(tmp_path, capsys):
    d = tmp_path / "corpus"
    assert main(["generate", "random", "--set", "valuation=xos", "--count", "4", "--out", str(d) + "/"]) == 0
    assert len(list(d.glob("*.json"))) == 4
    assert main(["generate", "canonical", "--out", str(d / "i0.json")]) == 0
    code, out, _ = run(["suite", "--corpus", str(d), "--format", "csv"], capsys)
    assert code == 0
    assert "partition_lemma,PASS" in out
    assert main(["suite", "--corpus", str(tmp_path / "nope")]) == 2


def test_module_entry_point(i0_path):
    r = subprocess.run([sys.executable, "-m", "bfmd", "validate", i0_path], capture_output=True, text=True)
    assert r.returncode == 0
