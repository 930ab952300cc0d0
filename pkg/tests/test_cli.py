import csv
import io
import json
import subprocess
import sys

import pytest

from widecorr.cli import main

SMALL = ["--widths", "8,16,32", "--seeds", "6", "--depth", "2", "--input-dim", "3"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


# ---------------------------------------------------------------- predict


def test_predict_builtin(capsys):
    assert run(capsys, "predict", "--builtin", "C_{4,2}")[:2] == (0, "(0,2), s_C=-1, s_V=-2\n")


def test_predict_spec_text(capsys):
    assert run(capsys, "predict", "--spec", "f(x1) f(x2)")[:2] == (0, "(0,2), s_C=0, s_V=0\n")


def test_predict_all_builtins(capsys):
    code, out, _ = run(capsys, "predict")
    assert code == 0
    assert out.splitlines()[4] == "C_{4,3}: (1,0), s_C=-1, s_V=-3"


def test_predict_json(capsys):
    code, out, _ = run(capsys, "predict", "--builtin", "C64", "--format", "json")
    assert json.loads(out) == {"spec": "C_{6,4}", "n_e": 0, "n_o": 2, "m": 6, "s_C": "-2", "s_V": "-4"}


def test_predict_malformed_spec(capsys):
    code, _, err = run(capsys, "predict", "--spec", "f(x1)[a")
    assert code == 2
    assert "position 7" in err


def test_predict_unknown_builtin(capsys):
    assert run(capsys, "predict", "--builtin", "C_77")[0] == 2


def test_bad_flag_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as info:
        main(["predict", "--frobnicate"])
    assert info.value.code == 2


# ---------------------------------------------------------------- exact


def test_exact_four_point_square(capsys):
    code, out, _ = run(capsys, "exact", "--builtin", "C_40", "--activation", "x^2")
    assert code == 0
    assert json.loads(out) == {
        "poly": [
            {"power": 0, "numerator": "27", "denominator": "1"},
            {"power": -1, "numerator": "288", "denominator": "1"},
        ],
        "input_monomial": "x1^2*x2^2*x3^2*x4^2",
        "leading_exponent": 0,
    }


def test_exact_linear_c43_restricted(capsys):
    code, out, _ = run(capsys, "exact", "--builtin", "C_43", "--depth", "2", "--derivative-layers", "V;W2;U")
    assert code == 0
    doc = json.loads(out)
    assert doc["poly"] == [{"power": -2, "numerator": "1", "denominator": "1"}]
    assert doc["leading_exponent"] == -2


def test_exact_text_format(capsys):
    code, out, _ = run(capsys, "exact", "--builtin", "C_21", "--format", "text")
    assert (code, out) == (0, "(2)*x1*x2\n")


def test_exact_rational_polynomial_activation(capsys):
    code, out, _ = run(capsys, "exact", "--builtin", "C_20", "--activation", "polynomial(1/2,1)")
    assert code == 0
    assert json.loads(out)["terms"]  # constant and linear parts give two input monomials


def test_exact_vector_inputs_use_gram_entries(capsys):
    code, out, _ = run(capsys, "exact", "--builtin", "C_20", "--input-dim", "3")
    assert json.loads(out)["input_monomial"] == "<x1,x2>"


def test_exact_zero_value(capsys):
    code, out, _ = run(capsys, "exact", "--spec", "f(x1) f(x2) f(x3)")
    assert json.loads(out) == {"poly": [], "input_monomial": "1", "leading_exponent": None}


def test_exact_over_budget(capsys):
    code, _, err = run(capsys, "exact", "--builtin", "C_43", "--depth", "2", "--activation", "x^2")
    assert code == 3
    assert "budget" in err


def test_exact_rejects_non_polynomial(capsys):
    code, _, err = run(capsys, "exact", "--builtin", "C_20", "--activation", "tanh")
    assert code == 2 and "polynomial" in err


def test_exact_needs_a_spec(capsys):
    assert run(capsys, "exact")[0] == 2


def test_exact_per_layer_activation_count(capsys):
    assert run(capsys, "exact", "--builtin", "C_20", "--depth", "2", "--activation", "x;x;x")[0] == 2


# ---------------------------------------------------------------- estimate and fit


def test_estimate_from_config(tmp_path, capsys):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({
        "schema_version": 1, "spec": "C_{2,1}", "activation": "tanh", "depth": 2, "input_dim": 3,
        "widths": [8, 16], "seeds": 5, "master_seed": 4, "paper_scale": False,
    }))
    out_file = tmp_path / "est.csv"
    assert run(capsys, "estimate", "--config", str(cfg), "--out", str(out_file))[0] == 0
    rows = list(csv.DictReader(io.StringIO(out_file.read_text())))
    assert [r["width"] for r in rows] == ["8", "16"]
    assert {r["spec"] for r in rows} == {"C_{2,1}"}
    assert rows[0]["seeds"] == "5"
    # flags override the config
    code, out, _ = run(capsys, "estimate", "--config", str(cfg), "--seeds", "3")
    assert {r["seeds"] for r in csv.DictReader(io.StringIO(out))} == {"3"}


def test_estimate_config_validation(tmp_path, capsys):
    cfg = tmp_path / "exp.json"
    cfg.write_text(json.dumps({"schema_version": 9}))
    assert run(capsys, "estimate", "--config", str(cfg))[0] == 2
    cfg.write_text(json.dumps({"colour": "blue"}))
    assert run(capsys, "estimate", "--config", str(cfg))[0] == 2


def test_estimate_one_seed_is_a_usage_error(capsys):
    assert run(capsys, "estimate", "--builtin", "C_21", *SMALL[:2], "--seeds", "1")[0] == 2


def test_estimate_unsupported_topology(capsys):
    code, _, err = run(capsys, "estimate", "--spec", "f(x1)[a,b] f(x2)[a,b]", *SMALL)
    assert code == 4
    assert "share more than one index" in err


def test_fit_reads_estimate_csv(tmp_path, capsys):
    est = tmp_path / "est.csv"
    args = ["--widths", "8,16,32", "--seeds", "60", "--depth", "1", "--input-dim", "3"]
    assert run(capsys, "estimate", "--builtin", "C_21", "--activation", "tanh", *args, "--out", str(est))[0] == 0
    code, out, _ = run(capsys, "fit", "--input", str(est))
    doc = json.loads(out)
    assert code == 0
    assert {"slope", "intercept", "r_squared", "dropped_widths"} <= set(doc)
    code, out, _ = run(capsys, "fit", "--input", str(est), "--variance-mode")
    assert json.loads(out)["dropped_widths"] == []


def test_fit_failure_exit_code(tmp_path, capsys):
    est = tmp_path / "est.csv"
    est.write_text(
        "spec,activation,width,seeds,mean,stderr,sample_variance\n"
        "s,tanh,8,4,0.0,1.0,4.0\ns,tanh,16,4,0.1,1.0,4.0\n"
    )
    assert run(capsys, "fit", "--input", str(est))[0] == 1
    assert run(capsys, "fit", "--input", str(est), "--activation", "relu")[0] == 2


# ---------------------------------------------------------------- report


def test_report_rows_and_flags(capsys):
    code, out, _ = run(capsys, "report", "--builtin", "C_21", "--builtin", "C_43",
                       "--activation", "tanh", "--activation", "relu", *SMALL)
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert [(r["spec"], r["activation"]) for r in rows] == [
        ("C_{2,1}", "tanh"), ("C_{4,3}", "tanh"), ("C_{2,1}", "relu"), ("C_{4,3}", "relu"),
    ]
    assert rows[1]["predicted"] == "-1" and rows[1]["n_e"] == "1"
    for r in rows:
        if not r["measured"]:
            assert r["note"] and r["agreement"] == "0" and r["points_used"] == "0"
            continue
        gap = float(r["measured"]) - float(r["predicted"])
        assert r["agreement"] == str(int(abs(gap) <= 0.2))
        assert r["below_bound"] == str(int(gap < -0.2))


def test_report_json_and_variance_mode(capsys):
    code, out, _ = run(capsys, "report", "--builtin", "C_21", "--activation", "tanh", *SMALL,
                       "--variance-mode", "--format", "json", "--tolerance", "0.5")
    doc = json.loads(out)
    assert doc["schema_version"] == 1
    assert doc["metadata"]["variance_mode"] is True and doc["metadata"]["tolerance"] == 0.5
    assert doc["rows"][0]["predicted"] == "-1"


def test_report_default_tolerances(capsys):
    code, out, _ = run(capsys, "report", "--builtin", "C_21", "--activation", "tanh", *SMALL, "--format", "json")
    assert json.loads(out)["metadata"]["tolerance"] == 0.2


def test_report_partial_results_with_failure_manifest(capsys, tmp_path):
    out_file = tmp_path / "r.json"
    code, _, err = run(capsys, "report", "--spec", "f(x1)[a,b] f(x2)[a,b]", "--builtin", "C_20",
                       "--activation", "tanh", *SMALL, "--format", "json", "--out", str(out_file))
    assert code == 4
    doc = json.loads(out_file.read_text())
    assert [r["spec"] for r in doc["rows"]] == ["C_{2,0}"]
    assert "share more than one index" in doc["failures"][0]["error"]
    assert "skipped" in err


def test_report_is_worker_count_independent(tmp_path, capsys):
    outs = []
    for workers in ("1", "3"):
        path = tmp_path / f"r{workers}.csv"
        est = tmp_path / f"e{workers}.csv"
        args = ["report", "--activation", "tanh", "--activation", "softplus", *SMALL,
                "--workers", workers, "--out", str(path), "--estimates-out", str(est)]
        assert run(capsys, *args)[0] == 0
        outs.append((path.read_bytes(), est.read_bytes()))
    assert outs[0] == outs[1]


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "widecorr", "predict", "--builtin", "C_43"],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout == "(1,0), s_C=-1, s_V=-3\n"
