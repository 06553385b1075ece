"""Unit tests for panel handling and the moment-based fitting pipeline."""

from __future__ import annotations

import dataclasses

import numpy as np
import pytest

from armadesign.models import ArmaModel, VarmaModel, true_ate
from armadesign.designs import ur_design, ad_design, QDependent, PolicyTable
from armadesign.estimation import (
    NotIdentifiableError,
    NotRealizableError,
    PanelData,
    attach_ma_stage,
    estimate_ate,
    fit_arma_yw,
    fit_ma_innovations,
    fit_varma_yw,
    instrument_orthogonality,
    load_fit,
    load_panel_csv,
    save_fit,
    save_panel_csv,
    select_order,
)
from armadesign.simulation import simulate_arma, simulate_varma


ARMA11 = ArmaModel(mu=2.0, a=(0.5,), b=0.05, theta=(0.5,), sigma2=1.0)


def test_arma_fit_recovers_moderate_model():
    panel = simulate_arma(ARMA11, ur_design(), 20_000, seed=31)
    fit = fit_arma_yw(panel, 1, 1)
    assert abs(fit.ar_hat[0] - 0.5) < 0.05
    assert abs(fit.mu_hat - 2.0) < 0.25
    assert abs(fit.b_hat - 0.05) < 0.05
    assert abs(fit.ate_hat - true_ate(ARMA11)) < 0.2
    assert fit.ar_stable and fit.n_used > 19_000
    fit = attach_ma_stage(fit)
    assert fit.ma_hat is not None and abs(float(np.ravel(fit.ma_hat)[0]) - 0.5) < 0.1
    assert fit.noise_cov_hat is not None
    assert abs(float(np.ravel(fit.noise_cov_hat)[0]) - 1.0) < 0.1


def test_estimate_ate_matches_closed_form_of_fit():
    panel = simulate_arma(ARMA11, ur_design(), 5_000, seed=8)
    fit = fit_arma_yw(panel, 1, 1)
    assert estimate_ate(fit) == pytest.approx(fit.ate_hat, abs=1e-15)
    assert fit.ate_hat == pytest.approx(
        2.0 * fit.b_hat / (1.0 - np.sum(fit.ar_hat)), abs=1e-12
    )


def test_varma_fit_recovers_two_channel_model_with_exogenous():
    model = VarmaModel(
        mu=(1.0, -0.5),
        A=(((0.4, 0.1), (0.0, 0.3)),),
        b=(0.08, 0.02),
        M=(((0.3, 0.0), (0.1, 0.2)),),
        Sigma=((1.0, 0.2), (0.2, 0.8)),
        C=((0.5,), (0.0,)),
    )
    T = 40_000
    rng = np.random.default_rng(12)
    E = (rng.uniform(size=(T, 1)) < 0.5).astype(float)
    panel = simulate_varma(model, ur_design(), T, seed=21, E=E)
    fit = fit_varma_yw(panel, 1, 1)
    assert float(np.max(np.abs(fit.ar_hat[0] - np.array(model.A[0])))) < 0.08
    assert float(np.max(np.abs(np.ravel(fit.b_hat) - np.array(model.b)))) < 0.08
    assert fit.c_hat is not None
    assert abs(float(fit.c_hat[0, 0]) - 0.5) < 0.15
    assert abs(fit.ate_hat - true_ate(model)) < 0.3


def test_select_order_finds_true_order():
    panel = simulate_arma(ARMA11, ur_design(), 20_000, seed=(140, 0))
    sel = select_order(panel, p_max=3, q_max=3, criterion="bic")
    assert (sel.p, sel.q) == (1, 1)
    assert sel.criterion == "bic"
    assert sel.scores.shape == (4, 4)
    assert np.isfinite(sel.scores[1, 1])


def test_constant_treatment_is_not_identifiable():
    constant = QDependent(PolicyTable(q=1, table=(-1, 1)))  # holds its sign forever
    panel = simulate_arma(ARMA11, constant, 2_000, seed=2)
    assert np.all(panel.U == panel.U[0])
    with pytest.raises(NotIdentifiableError):
        fit_arma_yw(panel, 1, 1)


def test_instruments_are_orthogonal_in_sample():
    panel = simulate_arma(ARMA11, ad_design(12), 10_000, seed=44)
    fit = fit_arma_yw(panel, 1, 1)
    assert float(np.max(np.abs(instrument_orthogonality(fit, panel)))) < 1e-10


def test_panel_csv_roundtrip(tmp_path):
    model = ARMA11
    panel = simulate_arma(model, ur_design(), 300, seed=77, dt_label="30min")
    E = np.arange(300, dtype=float).reshape(-1, 1)
    panel = PanelData(Y=panel.Y, U=panel.U, E=E, dt_label=panel.dt_label)
    path = tmp_path / "panel.csv"
    save_panel_csv(panel, path)
    back = load_panel_csv(path, dt_label="30min")
    assert np.array_equal(back.Y, panel.Y)
    assert np.array_equal(back.U, panel.U)
    assert np.array_equal(back.E, panel.E)
    assert back.dt_label == panel.dt_label


def test_fit_json_roundtrip(tmp_path):
    panel = simulate_arma(ARMA11, ur_design(), 4_000, seed=19)
    fit = attach_ma_stage(fit_arma_yw(panel, 1, 1))
    path = tmp_path / "fit.json"
    save_fit(fit, path)
    back = load_fit(path)
    assert back.kind == fit.kind and (back.p, back.q, back.d) == (1, 1, 1)
    assert back.ate_hat == pytest.approx(fit.ate_hat, abs=1e-15)
    assert np.allclose(back.gamma_z, fit.gamma_z, atol=1e-15)
    assert back.noise_cov_hat is not None


def test_ma_innovations_hand_case_and_rejection():
    theta, s2 = fit_ma_innovations(np.array([1.64, 0.8]), 1)
    assert float(np.ravel(theta)[0]) == pytest.approx(0.8, abs=1e-6)
    assert float(s2) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(NotRealizableError):
        fit_ma_innovations(np.array([1.0, 0.9]), 1)


def test_panel_validation():
    with pytest.raises(ValueError):
        PanelData(Y=np.zeros((10, 1)), U=np.ones(9))
    with pytest.raises((ValueError, OSError)):
        load_panel_csv("/nonexistent/panel.csv")
