import csv
import io
import json
import math

import pytest

from entrate import check_consistency, load_model, shipped_model_path
from entrate.cli import ExperimentConfig, main, run_command
from entrate.errors import InputError
from entrate.source import MAX_SUPPORT_ENV


def shipped(name):
    return str(shipped_model_path(name))


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    body = [line for line in text.splitlines() if not line.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(body))))


def header(text):
    meta = {}
    for line in text.splitlines():
        if line.startswith("# "):
            key, value = line[2:].split(": ", 1)
            meta[key] = json.loads(value)
    return meta


def test_validate_shipped_models(capsys):
    for name in ("circular_hmm.json", "qrw_cycle4.json"):
        code, out, _ = run(capsys, "validate", shipped(name))
        assert code == 0
        doc = json.loads(out)
        assert doc["consistency"]["passed"]
        assert doc["meta"]["tol"] == 1e-9


def test_bad_row_is_an_input_error(capsys, tmp_path):
    path = tmp_path / "bad.json"
    doc = json.loads(shipped_model_path("circular_hmm.json").read_text())
    doc["A"][1] = [0, 0, 0.9]
    path.write_text(json.dumps(doc))
    code, out, err = run(capsys, "validate", str(path))
    assert code == 2 and out == ""
    error = json.loads(err)
    assert error["error"] == "ValidationError"
    assert "A row 1" in error["message"]
    assert error["report"]["bad_rows"]["A"] == [1]


def test_malformed_json_reports_position(capsys, tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{"kind": "hmm",\n "pi": [1, 0,]}')
    code, _, err = run(capsys, "validate", str(path))
    assert code == 2
    assert f"{path}:2:" in json.loads(err)["message"]


def test_unknown_kind_and_missing_file(capsys, tmp_path):
    path = tmp_path / "odd.json"
    path.write_text('{"kind": "spline"}')
    assert run(capsys, "validate", str(path))[0] == 2
    assert run(capsys, "validate", str(tmp_path / "nope.json"))[0] == 2


def test_entropy_curve_closed_form(capsys):
    code, out, _ = run(capsys, "entropy-curve", "circular_hmm.json", "--t-max", "30")
    assert code == 0
    rows = table(out)
    assert len(rows) == 30
    assert float(rows[-1]["entropy_rate"]) == pytest.approx(math.log(2) / 3, abs=1e-9)
    assert header(out)["t_max"] == 30


def test_entropy_curve_base_two_and_window(capsys):
    code, out, _ = run(capsys, "entropy-curve", "circular_hmm.json", "--t-max", "30", "--base", "2", "--window", "24:30")
    assert code == 0
    assert float(table(out)[-1]["entropy_rate"]) == pytest.approx(1 / 3, abs=1e-12)
    est = header(out)["estimate"]
    assert est["lower_est"] <= 1 / 3 <= est["upper_est"]


def test_entropy_curve_to_file(capsys, tmp_path):
    target = tmp_path / "curve.csv"
    code, out, _ = run(capsys, "entropy-curve", "qrw_cycle4.json", "--t-max", "5", "--out", str(target))
    assert code == 0 and out == ""
    rows = table(target.read_text())
    assert [int(r["t"]) for r in rows] == [1, 2, 3, 4, 5]
    assert json.loads((tmp_path / "curve.csv.json").read_text())["base"] == "e"


def test_tv_identical_models(capsys):
    code, out, _ = run(capsys, "tv", "bernoulli_03.json", "bernoulli_03.json", "--t-max", "8")
    assert code == 0
    assert all(float(r["d_tv_t"]) == 0 for r in table(out))
    assert header(out)["converged"] is True


def test_tv_alphabet_mismatch(capsys):
    code, _, err = run(capsys, "tv", "bernoulli_03.json", "markov_stationary.json", "--t-max", "3")
    assert code == 2
    assert "alphabet" in json.loads(err)["message"]


def test_lipschitz_holds_on_close_models(capsys):
    code, out, _ = run(capsys, "lipschitz", "circular_hmm.json", "circular_hmm_stationary.json", "--t-max", "6")
    assert code == 0
    assert header(out)["violations"] == []


def test_cesaro_circular(capsys):
    code, out, _ = run(capsys, "cesaro", "circular_hmm.json", "--n", "6", "--t", "6")
    assert code == 0
    rows = table(out)
    for r in rows:
        n = int(r["n"])
        assert float(r["lower"]) <= float(r["mid"]) + 1e-9 <= float(r["upper"]) + 2e-9
        assert float(r["d_tv_t_to_mean"]) <= 2 / n + 1e-9


def test_stationary_mean_round_trip(capsys, tmp_path):
    for name in ("circular_hmm.json", "qrw_cycle4.json"):
        target = tmp_path / f"mean_{name}"
        code, _, _ = run(capsys, "stationary-mean", name, "--out", str(target))
        assert code == 0
        report = json.loads((tmp_path / f"mean_{name}.report.json").read_text())
        assert report["valid"]
        again = load_model(target)
        assert check_consistency(again, 6, 1e-9, prune=True).passed


def test_stationary_mean_stdout(capsys):
    code, out, _ = run(capsys, "stationary-mean", "circular_hmm.json")
    doc = json.loads(out)
    assert code == 0
    assert doc["coefficients"] == pytest.approx([1 / 3] * 3, abs=1e-9)
    assert doc["model"]["kind"] == "linear_combination"


def test_evo_dim(capsys):
    code, out, _ = run(capsys, "evo-dim", "circular_hmm.json", "--k", "9")
    assert code == 0 and json.loads(out)["rank"] == 3
    code, out, _ = run(capsys, "evo-dim", "markov_stationary.json")
    assert json.loads(out)["rank"] == 1


def test_counterexample(capsys):
    code, out, _ = run(capsys, "counterexample", "--p", "2", "--delta", "1.0")
    doc = json.loads(out)
    assert code == 0
    assert (doc["m"], doc["N"], doc["verified"]) == (2, 5, True)
    assert run(capsys, "counterexample", "--p", "1", "--delta", "0.5")[0] == 2


def test_residuals(capsys):
    code, out, _ = run(capsys, "residuals", "circular_hmm.json", "--k", "3", "--t", "5")
    doc = json.loads(out)
    assert code == 0
    assert doc["I"] == pytest.approx(doc["J"], abs=1e-9)
    assert doc["identity_gap"] <= 1e-9


def test_resource_limit_exit_code(capsys, monkeypatch):
    monkeypatch.setenv(MAX_SUPPORT_ENV, "50")
    code, _, err = run(capsys, "entropy-curve", "bernoulli_03.json", "--t-max", "10")
    assert code == 3
    assert json.loads(err)["error"] == "ResourceError"


def test_invalid_options(capsys):
    assert run(capsys, "entropy-curve", "circular_hmm.json", "--t-max", "0")[0] == 2
    assert run(capsys, "validate", "circular_hmm.json", "--tol", "-1")[0] == 2
    with pytest.raises(SystemExit):
        main(["entropy-curve", "circular_hmm.json", "--window", "5"])
    with pytest.raises(InputError):
        ExperimentConfig("plot")


def test_outputs_are_deterministic(capsys):
    first = run(capsys, "tv", "circular_hmm.json", "circular_hmm_stationary.json", "--t-max", "6", "--seed", "7")
    second = run(capsys, "tv", "circular_hmm.json", "circular_hmm_stationary.json", "--t-max", "6", "--seed", "7")
    assert first == second
    assert header(first[1])["seed"] == 7


def test_run_command_directly(capsys):
    config = ExperimentConfig("evo-dim", [shipped("bernoulli_03.json")], k=4, t=3, tol=1e-8)
    assert run_command(config) == 0
    assert json.loads(capsys.readouterr().out)["rank"] == 1
