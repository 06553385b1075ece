"""Unit tests for the command-line interface and its exit-code contract."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from armadesign.cli import main

CONFIG_DIR = Path(__file__).resolve().parents[1] / "demos" / "configs"
MODEL = str(CONFIG_DIR / "model_arma11.json")
DESIGN_UR = str(CONFIG_DIR / "design_ur.json")
DESIGN_AT = str(CONFIG_DIR / "design_at.json")


def simulate_csv(tmp_path: Path, name: str = "sim.csv", horizon: int = 2500) -> str:
    out = str(tmp_path / name)
    rc = main(["simulate", "--model", MODEL, "--design", DESIGN_UR,
               "--horizon", str(horizon), "--seed", "5", "--out", out])
    assert rc == 0
    return out


def test_usage_errors_exit_2(tmp_path):
    # bad horizon
    assert main(["simulate", "--model", MODEL, "--design", DESIGN_UR,
                 "--horizon", "0", "--seed", "1",
                 "--out", str(tmp_path / "x.csv")]) == 2
    # missing input file
    assert main(["simulate", "--model", str(tmp_path / "nope.json"),
                 "--design", DESIGN_UR, "--horizon", "10",
                 "--out", str(tmp_path / "x.csv")]) == 2
    # malformed CSV into fit
    bad = tmp_path / "bad.csv"
    bad.write_text("this,is\nnot,a panel\n")
    assert main(["fit", "--data", str(bad), "--p", "1", "--q", "0",
                 "--out", str(tmp_path / "f.json")]) == 2
    # unknown subcommand (argparse usage failure)
    assert main(["frobnicate"]) == 2
    # empty design list
    assert main(["compare", "--model", MODEL, "--designs", "",
                 "--reps", "5", "--horizon", "100",
                 "--out", str(tmp_path / "c.json")]) == 2


def test_computation_errors_exit_1(tmp_path):
    unstable = tmp_path / "unstable.json"
    unstable.write_text(json.dumps({
        "kind": "arma", "p": 1, "q": 0, "mu": 0.0, "a": [1.05], "b": 0.1,
        "theta": [], "sigma2": 1.0,
    }))
    assert main(["simulate", "--model", str(unstable), "--design", DESIGN_UR,
                 "--horizon", "50", "--seed", "1",
                 "--out", str(tmp_path / "x.csv")]) == 1


def test_fit_and_indicators_roundtrip(tmp_path, capsys):
    csv = simulate_csv(tmp_path)
    fit_out = str(tmp_path / "fit.json")
    assert main(["fit", "--data", csv, "--p", "1", "--q", "1", "--ma-stage",
                 "--out", fit_out]) == 0
    fit = json.loads(Path(fit_out).read_text())
    assert fit["kind"] == "arma" and fit["p"] == 1 and fit["q"] == 1
    ind_out = str(tmp_path / "ind.json")
    assert main(["indicators", "--fit", fit_out, "--out", ind_out]) == 0
    captured = capsys.readouterr().out
    assert "recommendation" in captured
    ind = json.loads(Path(ind_out).read_text())
    assert set(ind["mse"]) == {"AD", "UR", "AT"}
    assert ind["recommendation"] in {"AD", "UR", "AT"}


def test_fit_auto_order(tmp_path):
    csv = simulate_csv(tmp_path, horizon=6000)
    fit_out = str(tmp_path / "fit.json")
    assert main(["fit", "--data", csv, "--auto-order", "--pmax", "2",
                 "--qmax", "2", "--out", fit_out]) == 0
    fit = json.loads(Path(fit_out).read_text())
    assert 0 <= fit["p"] <= 2 and 0 <= fit["q"] <= 2


def test_design_subcommand_emits_designs(tmp_path):
    csv = simulate_csv(tmp_path)
    fit_out = str(tmp_path / "fit.json")
    assert main(["fit", "--data", csv, "--p", "1", "--q", "1", "--ma-stage",
                 "--out", fit_out]) == 0
    co_out = str(tmp_path / "co.json")
    rl_out = str(tmp_path / "rl.json")
    assert main(["design", "co", "--fit", fit_out, "--out", co_out]) == 0
    assert main(["design", "rl", "--fit", fit_out, "--out", rl_out]) == 0
    co = json.loads(Path(co_out).read_text())
    rl = json.loads(Path(rl_out).read_text())
    assert co["variant"] == "markov" and co["label"] == "CO"
    assert rl["variant"] == "qdependent" and rl["label"] == "RL"


def test_design_rl_with_no_carryover_falls_back_to_coin(tmp_path, capsys):
    csv = simulate_csv(tmp_path)
    fit_out = str(tmp_path / "fit.json")
    assert main(["fit", "--data", csv, "--p", "1", "--q", "0",
                 "--out", fit_out]) == 0
    out = str(tmp_path / "rl0.json")
    assert main(["design", "rl", "--fit", fit_out, "--out", out]) == 0
    design = json.loads(Path(out).read_text())
    assert design["variant"] == "markov"
    assert design["alpha"] == 0.5 and design["beta"] == 0.5


def test_compare_ranks_designs(tmp_path, capsys):
    cmp_out = str(tmp_path / "cmp.json")
    assert main(["compare", "--model", MODEL,
                 "--designs", f"{DESIGN_UR},{DESIGN_AT}",
                 "--reps", "30", "--horizon", "1200", "--seed", "2",
                 "--out", cmp_out]) == 0
    payload = json.loads(Path(cmp_out).read_text())
    assert len(payload["reports"]) == 2
    assert payload["ranking"][0] == "AT"  # positive noise correlation
    labels = {r["design_label"] for r in payload["reports"]}
    assert labels == {"UR", "AT"}
    assert all(r["n_failed"] == 0 for r in payload["reports"])


def test_seed_env_fallback(tmp_path, monkeypatch):
    out_flag = str(tmp_path / "a.csv")
    out_env = str(tmp_path / "b.csv")
    assert main(["simulate", "--model", MODEL, "--design", DESIGN_UR,
                 "--horizon", "200", "--seed", "7", "--out", out_flag]) == 0
    monkeypatch.setenv("ARMADESIGN_SEED", "7")
    assert main(["simulate", "--model", MODEL, "--design", DESIGN_UR,
                 "--horizon", "200", "--out", out_env]) == 0
    assert Path(out_flag).read_bytes() == Path(out_env).read_bytes()
