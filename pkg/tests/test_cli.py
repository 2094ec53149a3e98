import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from pse_tomo import cli


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg) if not isinstance(cfg, str) else cfg)
    return p


def run(tmp_path, cfg, *extra):
    out = tmp_path / "out"
    code = cli.main(["run", str(write(tmp_path, cfg)), "--out", str(out), *extra])
    return code, out


def report(out):
    return json.loads((out / "report.json").read_text())


@pytest.mark.parametrize(
    "cfg",
    [
        {"command": "characterize-kraus", "d_s": 2, "d_e": 2, "channel": "identity"},
        {"command": "characterize-kraus", "d_s": 3, "d_e": 2, "channel": {"preset": "random", "seed": 1}, "scheme": "paulix"},
        {"command": "characterize-kraus", "d_s": 2, "d_e": 2, "channel": {"preset": "amplitude-damping", "gamma": 0.3}},
        {"command": "characterize-density", "d_s": 6, "project": True},
        {"command": "characterize-unitary", "d_s": 3, "unitary": "hadamard"},
        {"command": "characterize-observable", "d_s": 3, "scenario": "projector"},
        {"command": "characterize-observable", "d_s": 2, "observable": "pauli-y"},
        {"command": "weak-value", "d_s": 3},
        {"command": "weak-value", "d_s": 2, "observable": "pauli-z", "method": "second_order", "theta": 1e-3},
        {"command": "modular-value", "d_s": 3, "thetas": [0.1, 0.5]},
        {"command": "mzi-demo", "mzi": {"kind": "kraus", "alpha": 0.6, "delta": 0.7}},
        {"command": "mzi-demo", "mzi": {"kind": "density", "coupling": {"preset": "amplitude-damping", "gamma": 0.3}}},
    ],
    ids=lambda c: c["command"],
)
def test_commands_succeed_with_small_residual(tmp_path, cfg):
    code, out = run(tmp_path, cfg)
    assert code == 0
    rep = report(out)
    tol = 1e-5 if cfg.get("method") == "second_order" else 1e-9
    assert rep["result"]["residual"] <= tol
    assert rep["config"] == cfg and rep["version"] == cli.__version__


def test_kraus_identity_residual(tmp_path):
    code, out = run(tmp_path, {"command": "characterize-kraus", "d_s": 2, "channel": "identity"})
    assert code == 0 and report(out)["result"]["residual"] <= 1e-10


def test_damping_preset_gives_standard_kraus_pair(tmp_path):
    cfg = {"command": "characterize-kraus", "d_s": 2, "d_e": 2, "channel": {"preset": "amplitude-damping", "gamma": 0.3}}
    _, out = run(tmp_path, cfg)
    k = np.array(report(out)["result"]["schemes"]["hadamard"]["kraus"])
    k = k[..., 0] + 1j * k[..., 1]
    assert np.allclose(k[0], np.diag([1, np.sqrt(0.7)]), atol=1e-10)
    assert np.allclose(k[1], [[0, np.sqrt(0.3)], [0, 0]], atol=1e-10)


def test_hidden_mode_drops_truth(tmp_path):
    _, out = run(tmp_path, {"command": "characterize-density", "d_s": 3, "hidden": True})
    res = report(out)["result"]
    assert "truth" not in res and "residual" not in res and "matrix" in res


def test_explicit_matrix(tmp_path):
    u = [[[0, 0], [1, 0]], [[1, 0], [0, 0]]]
    _, out = run(tmp_path, {"command": "characterize-unitary", "d_s": 2, "unitary": {"matrix": u}})
    assert report(out)["result"]["matrix"] == [[[0.0, 0.0], [1.0, 0.0]], [[1.0, 0.0], [0.0, 0.0]]]


def test_noise_sweep_csv(tmp_path):
    cfg = {"command": "noise-sweep", "d_s": 2, "d_e": 2, "trace_e": 1.8, "methods": ["ours_povm", "xu2021_povm"],
           "thetas": {"start": 0.05, "stop": 1.5, "num": 12}, "n": 1000000}
    code, out = run(tmp_path, cfg, "--format", "csv")
    assert code == 0
    text = (out / "table.csv").read_text()
    assert text.splitlines()[0] == "method,d_s,d_e,theta,n,trials,analytic_error,empirical_error,ratio"
    rows = list(csv.DictReader(text.splitlines()))
    assert len(rows) == 24
    by = {}
    for r in rows:
        by.setdefault(r["theta"], {})[r["method"]] = float(r["analytic_error"])
    assert all(v["ours_povm_element"] < v["xu2021_povm_element"] for v in by.values())


def test_noise_sweep_monte_carlo(tmp_path):
    cfg = {"command": "noise-sweep", "d_s": 2, "d_e": 1, "methods": ["ours_density", "vallone2018_density"],
           "thetas": [0.8], "n": 10000, "trials": 30, "state": "random"}
    code, out = run(tmp_path, cfg, "--format", "csv")
    rows = list(csv.DictReader((out / "table.csv").read_text().splitlines()))
    assert code == 0 and all(float(r["ratio"]) > 0 for r in rows)


def test_emit_table_empty_and_one_row():
    assert cli.emit_table([]) == ",".join(cli.CSV_HEADER) + "\n"
    row = {"method": "ours_density", "d_s": 2, "d_e": 1, "theta": 0.5, "n": 100, "trials": 0,
           "analytic_error": 0.1 / 3, "empirical_error": None, "ratio": None}
    text = cli.emit_table([row])
    lines = text.splitlines()
    assert len(lines) == 2
    parsed = next(csv.DictReader(lines))
    assert parsed["analytic_error"] == "0.0333333333333" and parsed["ratio"] == ""


def test_json_round_trip(tmp_path):
    _, out = run(tmp_path, {"command": "weak-value", "d_s": 3})
    text = (out / "report.json").read_text()
    assert cli.dumps_report(json.loads(text)) == text


def test_twelve_significant_digits():
    assert cli._round(1 / 3) == 0.333333333333
    assert cli._round({"a": [np.float64(2 / 3), np.int64(3), None, True]}) == {"a": [0.666666666667, 3, None, True]}


def test_determinism_byte_identical(tmp_path):
    cfg = {"command": "noise-sweep", "d_s": 2, "d_e": 2, "n": 5000, "trials": 10, "thetas": [0.4, 0.9]}
    p = write(tmp_path, cfg)
    texts = []
    for name in ("a", "b"):
        assert cli.main(["run", str(p), "--out", str(tmp_path / name), "--seed", "7", "--format", "csv"]) == 0
        rep = json.loads((tmp_path / name / "report.json").read_text())
        rep.pop("wall_time")
        texts.append((json.dumps(rep, sort_keys=True), (tmp_path / name / "table.csv").read_bytes()))
    assert texts[0] == texts[1]
    assert cli.main(["run", str(p), "--out", str(tmp_path / "c"), "--seed", "8"]) == 0
    other = json.loads((tmp_path / "c" / "report.json").read_text())
    other.pop("wall_time")
    assert json.dumps(other, sort_keys=True) != texts[0][0]


@pytest.mark.parametrize(
    "cfg",
    ['{"command": ', {"command": "nope"}, {"command": "weak-value", "extra": 1},
     {"command": "characterize-unitary", "unitary": {"matrix": [[[1, 0]], [[0, 0], [1, 0]]]}}],
    ids=["syntax", "unknown-command", "unknown-field", "ragged-matrix"],
)
def test_bad_config_exit_2_no_files(tmp_path, cfg, capsys):
    code, out = run(tmp_path, cfg)
    assert code == 2
    assert not out.exists()
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "ConfigError"


def test_missing_config_exit_2(tmp_path):
    assert cli.main(["run", str(tmp_path / "missing.json")]) == 2


def test_precondition_exit_3(tmp_path, capsys):
    cfg = {"command": "weak-value", "d_s": 2, "observable": "pauli-z", "pre_state": "zero",
           "post_state": {"ket": [[0, 0], [1, 0]]}}
    code, out = run(tmp_path, cfg)
    assert code == 3 and not out.exists()
    err = json.loads(capsys.readouterr().err)
    assert err["error"] == "OrthogonalPostselection" and "overlap" in err["params"]


def test_numerical_exit_4(monkeypatch, tmp_path, capsys):
    from pse_tomo.errors import IllConditioned

    def boom(cfg, seed):
        raise IllConditioned("moment system is ill-conditioned", condition_number=1e12)

    monkeypatch.setitem(cli.DISPATCH, "weak-value", boom)
    code, out = run(tmp_path, {"command": "weak-value"})
    assert code == 4 and not out.exists()
    assert json.loads(capsys.readouterr().err)["params"]["condition_number"] == 1e12


def test_env_var_output_dir(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.ENV_OUT, str(tmp_path / "env"))
    p = write(tmp_path, {"command": "characterize-unitary", "output": {"dir": str(tmp_path / "cfgdir")}})
    assert cli.main(["run", str(p)]) == 0
    assert (tmp_path / "env" / "report.json").exists() and not (tmp_path / "cfgdir").exists()


def test_config_output_dir_and_format(tmp_path, monkeypatch):
    monkeypatch.delenv(cli.ENV_OUT, raising=False)
    p = write(tmp_path, {"command": "mzi-demo", "output": {"dir": str(tmp_path / "cfgdir"), "format": "csv"}})
    assert cli.main(["run", str(p)]) == 0
    text = (tmp_path / "cfgdir" / "table.csv").read_text()
    assert text.startswith("field,index,re,im\n") and "element" in text


def test_module_entry_point(tmp_path):
    p = write(tmp_path, {"command": "characterize-density", "d_s": 2})
    r = subprocess.run([sys.executable, "-m", "pse_tomo", "run", str(p), "--out", str(tmp_path / "o")],
                       capture_output=True, text=True)
    assert r.returncode == 0 and json.loads(r.stdout)["residual"] <= 1e-10
    r = subprocess.run([sys.executable, "-m", "pse_tomo", "run", str(tmp_path / "nope.json")],
                       capture_output=True, text=True)
    assert r.returncode == 2 and json.loads(r.stderr)["error"] == "ConfigError"
