import csv
import json
import math
import subprocess
import sys

import pytest

from hyperdist.cli import CSV_COLUMNS, SCHEMA, UsageError, parse_box, run

SHORT = ["--omega-grid", "16:256:x2"]


def strict_load(path):
    def reject(token):
        raise ValueError(f"non-standard JSON constant {token}")
    with open(path) as fh:
        return json.load(fh, parse_constant=reject)


def invoke(tmp_path, *argv, name="out.json"):
    out = tmp_path / name
    code = run([*argv, "--out", str(out)])
    return code, (strict_load(out) if out.exists() else None)


def without_timestamp(doc):
    doc = dict(doc)
    assert "T" in doc.pop("timestamp")
    return doc


# worked examples

def test_order_of_omega_squared_sine(tmp_path):
    code, doc = invoke(tmp_path, "order", "--expr", "omega^2*sin(omega*x)", "--dim", "1",
                       "--box", "-1,1")
    assert code == 0
    assert doc["schema"] == SCHEMA and doc["command"] == "order"
    assert doc["report"]["m"] == 2


def test_distributional_order_of_omega_squared_sine(tmp_path):
    code, doc = invoke(tmp_path, "dorder", "--expr", "omega^2*sin(omega*x)", "--dim", "1",
                       "--box", "-1,1")
    assert code == 0 and doc["report"]["m"] == 0


def test_decompose_sine(tmp_path):
    code, doc = invoke(tmp_path, "decompose", "--expr", "sin(x)", "--dim", "1", "--box", "-1,1")
    assert code == 0
    assert doc["report"]["alpha"] == [2]
    assert doc["report"]["mode"] == "finite_scontinuous"
    assert doc["report"]["report"]["passed"] is True


# other commands

def test_eval_at_point(tmp_path):
    code, doc = invoke(tmp_path, "eval", "--expr", "omega^-1*sin(omega*x)", "--point", "1",
                       "--omega", "2")
    assert code == 0
    assert doc["report"]["values"] == [[2.0, pytest.approx(math.sin(2.0) / 2, abs=1e-15)]]


def test_classify_samples(tmp_path):
    code, doc = invoke(tmp_path, "classify", "--samples", "16:0.0625,32:0.03125,64:0.015625,"
                       "128:0.0078125")
    assert code == 0
    assert doc["report"]["class"]["label"] == "infinitesimal"
    assert doc["report"]["class"]["p"] == pytest.approx(-1.0)


def test_pair_against_zero(tmp_path):
    code, doc = invoke(tmp_path, "pair", "--expr", "omega*sin(omega*x)", "--against", "0", *SHORT)
    assert code == 0
    assert doc["report"]["dprime_close"]["verdict"] is True


def test_zero_decompose(tmp_path):
    code, doc = invoke(tmp_path, "zero-decompose", "--expr", "omega^-1*sin(omega*x)",
                       "--box", "-1,1", *SHORT)
    assert code == 0
    assert doc["report"]["mode"] == "infinitesimal"


def test_point_value(tmp_path):
    code, doc = invoke(tmp_path, "pointvalue", "--expr", "sin(x)+omega^-1*sin(omega*x)",
                       "--point", "1")
    assert code == 0
    assert doc["report"]["standard_part"] == pytest.approx(math.sin(1.0), abs=1e-3)


def test_point_value_of_fast_sine_fails_verification(tmp_path, capsys):
    code, _ = invoke(tmp_path, "pointvalue", "--expr", "sin(omega*x)", "--point", "0.3")
    assert code == 2
    assert "not S-continuous" in capsys.readouterr().err


# exit codes and diagnostics

@pytest.mark.parametrize("argv", [
    ["order", "--expr", "sin(x"],
    ["order", "--expr", "x^1.5"],
    ["order", "--expr", "y", "--dim", "1"],
    ["order", "--expr", "x", "--box", "1,0"],
    ["order", "--expr", "x", "--omega-grid", "16:1000:x2"],
    ["frobnicate"],
    [],
    ["eval", "--expr", "x"],
])
def test_usage_and_parse_errors_exit_one(tmp_path, argv, capsys):
    assert run(argv) == 1
    assert capsys.readouterr().err.strip()


def test_box_parsing():
    assert parse_box("-1,1;0,2").intervals == ((-1.0, 1.0), (0.0, 2.0))
    with pytest.raises(UsageError):
        parse_box("1;2")


# determinism and formats

def test_repeat_runs_are_identical(tmp_path):
    argv = ["order", "--expr", "omega*sin(omega*x)", "--box", "-1,1", *SHORT]
    _, a = invoke(tmp_path, *argv, name="a.json")
    _, b = invoke(tmp_path, *argv, name="b.json")
    assert without_timestamp(a) == without_timestamp(b)


def test_csv_columns(tmp_path):
    path = tmp_path / "rows.csv"
    code = run(["order", "--expr", "omega*sin(omega*x)", "--box", "-1,1", *SHORT,
                "--csv", str(path), "--out", str(tmp_path / "o.json")])
    assert code == 0
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert tuple(rows[0]) == CSV_COLUMNS == ("omega", "probe_id", "value", "ratio", "slope")
    assert len(rows) > 1
    omegas = {float(r[0]) for r in rows[1:]}
    assert omegas == {16.0, 32.0, 64.0, 128.0, 256.0}


def test_stdout_when_no_out(capsys):
    assert run(["eval", "--expr", "x", "--point", "0.5", "--omega", "16"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["report"]["values"] == [[16.0, 0.5]]


# configuration

def test_config_file_sets_grid(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# short grid\nnet.levels = 3\nquad.tolerance = 1e-11\n")
    code, doc = invoke(tmp_path, "eval", "--expr", "x", "--point", "0", "--config", str(cfg))
    assert code == 0
    assert doc["grid"] == "16:128:x2"
    assert doc["config"]["quad.tolerance"] == 1e-11


def test_flags_win_over_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("net.levels = 4\n")
    _, doc = invoke(tmp_path, "eval", "--expr", "x", "--point", "0", "--config", str(cfg),
                    "--omega-grid", "32:256:x2")
    assert doc["grid"] == "32:256:x2"


def test_unknown_config_key_is_an_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("net.levels = 3\nquad.speed = 11\n")
    assert run(["eval", "--expr", "x", "--point", "0", "--config", str(cfg)]) == 1
    assert "bad.cfg:2" in capsys.readouterr().err


def test_environment_names_default_config(tmp_path, monkeypatch):
    cfg = tmp_path / "env.cfg"
    cfg.write_text("net.levels = 4\n")
    monkeypatch.setenv("HYPERDIST_CONFIG", str(cfg))
    _, doc = invoke(tmp_path, "eval", "--expr", "x", "--point", "0")
    assert doc["grid"] == "16:256:x2"


# verify

def test_verify_reproduces_decomposition(tmp_path):
    code, _ = invoke(tmp_path, "decompose", "--expr", "omega*sin(omega*x)", "--box", "-1,1",
                     *SHORT, name="dec.json")
    assert code == 0
    code, doc = invoke(tmp_path, "verify", "--in", str(tmp_path / "dec.json"), name="ver.json")
    assert code == 0
    rep = doc["report"]
    assert rep["reproduced"] and rep["passed"] and rep["mismatches"] == []
    assert len(rep["compared"]) >= 5


def test_verify_flags_a_tampered_primitive(tmp_path):
    invoke(tmp_path, "decompose", "--expr", "sin(x)", "--box", "-1,1", *SHORT, name="dec.json")
    doc = strict_load(tmp_path / "dec.json")
    doc["report"]["g"] = "(+ " + doc["report"]["g"] + " (^ x1 3))"
    (tmp_path / "bad.json").write_text(json.dumps(doc))
    code, out = invoke(tmp_path, "verify", "--in", str(tmp_path / "bad.json"), name="ver.json")
    assert code == 2
    assert not out["report"]["reproduced"]


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "hyperdist", "eval", "--expr", "x^2",
                           "--point", "1.5", "--omega", "16"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["report"]["values"] == [[16.0, 2.25]]
