"""Unit tests for simulators, bootstrap resampling, and the Monte Carlo driver."""

from __future__ import annotations

import dataclasses
import json

import numpy as np
import pytest

from armadesign.models import ArmaModel, VarmaModel, UnstableModelError, true_ate
from armadesign.designs import at_design, ur_design
from armadesign.estimation import attach_ma_stage, fit_arma_yw
from armadesign.simulation import (
    BootstrapSpec,
    bootstrap_simulate,
    monte_carlo_mse,
    peak_dummy,
    save_report,
    simulate_arma,
    simulate_varma,
)


ARMA11 = ArmaModel(mu=2.0, a=(0.5,), b=0.05, theta=(0.5,), sigma2=1.0)


def test_simulate_is_deterministic_and_shaped():
    p1 = simulate_arma(ARMA11, ur_design(), 500, seed=3)
    p2 = simulate_arma(ARMA11, ur_design(), 500, seed=3)
    assert np.array_equal(p1.Y, p2.Y) and np.array_equal(p1.U, p2.U)
    assert p1.Y.shape == (500, 1) and p1.U.shape == (500,)
    assert p1.dt_label == "1h"
    p3 = simulate_arma(ARMA11, ur_design(), 500, seed=4)
    assert not np.array_equal(p1.Y, p3.Y)


def test_common_random_numbers_across_designs():
    # same seed, different designs: identical noise, so the all-treated panel
    # differs from the alternating panel by the treatment response only
    p_ur = simulate_arma(ARMA11, ur_design(), 800, seed=12)
    p_at = simulate_arma(ARMA11, at_design(), 800, seed=12)
    assert not np.array_equal(p_ur.U, p_at.U)
    # the innovation stream is shared, so outcomes are strongly coupled
    corr = np.corrcoef(p_ur.Y[:, 0], p_at.Y[:, 0])[0, 1]
    assert corr > 0.95


def test_unstable_model_rejected():
    bad = ArmaModel(mu=0.0, a=(1.01,), b=0.1, theta=(), sigma2=1.0)
    with pytest.raises(UnstableModelError):
        simulate_arma(bad, ur_design(), 100, seed=0)


def test_varma_single_channel_equals_arma_exactly():
    mv = VarmaModel(
        mu=(2.0,), A=(((0.5,),),), b=(0.05,), M=(((0.5,),),), Sigma=((1.0,),)
    )
    pa = simulate_arma(ARMA11, ur_design(), 600, seed=9)
    pv = simulate_varma(mv, ur_design(), 600, seed=9)
    assert float(np.max(np.abs(pa.Y[:, 0] - pv.Y[:, 0]))) == 0.0
    assert np.array_equal(pa.U, pv.U)


def test_exogenous_channel_requirements():
    mv = VarmaModel(
        mu=(0.0,), A=(((0.4,),),), b=(0.05,), M=(), Sigma=((1.0,),),
        C=((0.7,),),
    )
    T = 4000
    with pytest.raises(ValueError):
        simulate_varma(mv, ur_design(), T, seed=1)  # E is required
    E = np.ones((T, 1))
    panel = simulate_varma(mv, ur_design(), T, seed=1, E=E)
    assert panel.E is not None and panel.E.shape == (T, 1)
    # a constant exogenous input shifts the stationary mean by C/(1-a)
    assert abs(panel.Y[:, 0].mean() - 0.7 / 0.6) < 0.15
    plain = VarmaModel(mu=(0.0,), A=(((0.4,),),), b=(0.05,), M=(), Sigma=((1.0,),))
    with pytest.raises(ValueError):
        simulate_varma(plain, ur_design(), T, seed=1, E=E)  # no exogenous slot


def test_peak_dummy_patterns():
    # hourly grid: 24 steps/day, flagged from 08:00 through 19:00 inclusive
    e = np.reshape(peak_dummy(48, "1h"), -1)
    day = e[:24]
    assert day.sum() == 12
    assert np.array_equal(np.flatnonzero(day), np.arange(8, 20))
    assert np.array_equal(e[:24], e[24:])
    # half-hour grid: 48 steps/day, 24 flagged
    e30 = np.reshape(peak_dummy(96, "30min"), -1)
    assert e30[:48].sum() == 24
    assert e30[16] == 1.0 and e30[15] == 0.0


def _fitted(T: int = 6000, seed=40):
    panel = simulate_arma(ARMA11, ur_design(), T, seed=seed)
    return attach_ma_stage(fit_arma_yw(panel, 1, 1))


def test_bootstrap_parametric_path():
    fit = _fitted()
    p1 = bootstrap_simulate(fit, 0.1, ur_design(), 500, seed=6)
    p2 = bootstrap_simulate(fit, 0.1, ur_design(), 500, seed=6)
    assert np.array_equal(p1.Y, p2.Y)
    assert p1.Y.shape == (500, 1)
    spec = BootstrapSpec(fit=fit, b_inject=0.1, dt_label="1h")
    oracle = 2.0 * 0.1 / (1.0 - float(np.sum(fit.ar_hat)))
    report = monte_carlo_mse(spec, ur_design(), R=60, T_or_days=2000, base_seed=50)
    z = (np.mean(report.ate_estimates) - oracle) / (
        np.std(report.ate_estimates, ddof=1) / np.sqrt(60)
    )
    assert abs(z) < 4.0
    assert report.oracle_ate == pytest.approx(oracle, abs=1e-12)


def test_bootstrap_block_fallback_and_errors():
    fit = fit_arma_yw(simulate_arma(ARMA11, ur_design(), 6000, seed=41), 1, 1)
    assert fit.ma_hat is None  # no MA stage attached
    panel = bootstrap_simulate(fit, 0.05, ur_design(), 400, seed=7)
    assert panel.Y.shape == (400, 1)
    bare = dataclasses.replace(fit, residuals=None)
    with pytest.raises(ValueError):
        bootstrap_simulate(bare, 0.05, ur_design(), 400, seed=7)


def test_monte_carlo_report_contents(tmp_path):
    model = ArmaModel(mu=0.0, a=(0.5,), b=0.005, theta=(), sigma2=1.0)
    report = monte_carlo_mse(model, ur_design(), R=40, T_or_days=1000, base_seed=13)
    assert report.reps == 40 and report.n_failed == 0
    assert len(report.ate_estimates) == 40
    assert report.oracle_ate == pytest.approx(true_ate(model), abs=1e-15)
    assert report.mse == pytest.approx(
        np.mean((np.array(report.ate_estimates) - report.oracle_ate) ** 2), abs=1e-15
    )
    assert report.rmse == pytest.approx(np.sqrt(report.mse), abs=1e-15)
    assert report.se_of_mse > 0
    path = tmp_path / "report.json"
    save_report(report, path)
    loaded = json.loads(path.read_text())
    assert loaded["design_label"] == "UR"
    assert loaded["config_digest"] == report.config_digest


def test_monte_carlo_jobs_do_not_change_results():
    model = ArmaModel(mu=0.0, a=(0.5,), b=0.005, theta=(), sigma2=1.0)
    serial = monte_carlo_mse(model, ur_design(), R=24, T_or_days=800, base_seed=5)
    threaded = monte_carlo_mse(
        model, ur_design(), R=24, T_or_days=800, base_seed=5, jobs=4
    )
    assert serial.ate_estimates == threaded.ate_estimates
    assert serial.config_digest == threaded.config_digest
