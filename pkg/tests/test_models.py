"""Unit tests for model containers, filters, and the state-space form."""

from __future__ import annotations

import numpy as np
import pytest

from helpers import random_stable_arma

from armadesign.models import (
    ArmaModel,
    VarmaModel,
    arma_filter,
    check_no_unit_root,
    load_model,
    noise_autocov,
    save_model,
    to_state_space,
    true_ate,
    varma_filter,
)


def small_varma() -> VarmaModel:
    return VarmaModel(
        mu=(0.0, 1.0),
        A=(((0.4, 0.1), (0.0, 0.3)),),
        b=(0.05, 0.0),
        M=(((0.3, 0.0), (0.1, 0.2)),),
        Sigma=((1.0, 0.2), (0.2, 0.8)),
    )


def test_true_ate_closed_forms():
    m = ArmaModel(mu=0.0, a=(0.5,), b=0.005, theta=(), sigma2=1.0)
    assert true_ate(m) == pytest.approx(2 * 0.005 / 0.5, abs=1e-15)
    mv = small_varma()
    a_sum = np.array([[0.4, 0.1], [0.0, 0.3]])
    expect = 2.0 * np.linalg.solve(np.eye(2) - a_sum, np.array([0.05, 0.0]))[0]
    assert true_ate(mv) == pytest.approx(expect, abs=1e-12)


def test_arma_filter_noise_free_fixed_point():
    m = ArmaModel(mu=3.0, a=(0.4, 0.2), b=0.1, theta=(0.5,), sigma2=1.0)
    T = 400
    y = arma_filter(m, np.zeros(T), np.ones(T))
    target = (3.0 + 0.1) / (1.0 - 0.6)
    assert abs(y[-1] - target) < 1e-10
    assert abs(y[-2] - target) < 1e-10


def test_varma_filter_single_channel_matches_arma():
    m = ArmaModel(mu=1.0, a=(0.5, -0.2), b=0.05, theta=(0.4, 0.1), sigma2=2.0)
    mv = VarmaModel(
        mu=(1.0,),
        A=(((0.5,),), ((-0.2,),)),
        b=(0.05,),
        M=(((0.4,),), ((0.1,),)),
        Sigma=((2.0,),),
    )
    rng = np.random.default_rng(5)
    eps = rng.standard_normal(300) * np.sqrt(2.0)
    u = np.where(rng.uniform(size=300) < 0.5, 1.0, -1.0)
    y_uni = arma_filter(m, eps, u)
    y_multi = varma_filter(mv, eps.reshape(-1, 1), u)
    assert float(np.max(np.abs(y_uni - y_multi[:, 0]))) <= 1e-12


def test_noise_autocov_ma1_hand_values():
    m = ArmaModel(mu=0.0, a=(0.5,), b=0.005, theta=(0.8,), sigma2=1.0)
    gamma = noise_autocov(m)
    assert gamma == pytest.approx([1.64, 0.8], abs=1e-14)
    m0 = ArmaModel(mu=0.0, a=(0.5,), b=0.005, theta=(), sigma2=2.5)
    assert noise_autocov(m0) == pytest.approx([2.5], abs=1e-14)


def test_stability_report():
    stable = check_no_unit_root(ArmaModel(mu=0, a=(0.5,), b=0.1, theta=(), sigma2=1))
    assert stable.stable and stable.spectral_radius == pytest.approx(0.5, abs=1e-12)
    unstable = check_no_unit_root(
        ArmaModel(mu=0, a=(1.05,), b=0.1, theta=(), sigma2=1)
    )
    assert not unstable.stable
    assert unstable.spectral_radius == pytest.approx(1.05, abs=1e-12)


def test_model_json_roundtrip(tmp_path):
    m = ArmaModel(mu=1.25, a=(0.3, -0.1), b=0.02, theta=(0.6,), sigma2=0.75)
    path = tmp_path / "m.json"
    save_model(m, path)
    m2 = load_model(path)
    assert (m2.mu, m2.b, m2.sigma2) == (m.mu, m.b, m.sigma2)
    assert np.array_equal(m2.a, m.a) and np.array_equal(m2.theta, m.theta)
    mv = small_varma()
    pv = tmp_path / "mv.json"
    save_model(mv, pv)
    mv2 = load_model(pv)
    assert np.array_equal(mv2.A, mv.A) and np.array_equal(mv2.Sigma, mv.Sigma)
    assert true_ate(mv2) == true_ate(mv)


def test_model_validation_rejects_bad_inputs():
    with pytest.raises(ValueError):
        ArmaModel(mu=0.0, a=(0.5,), b=0.1, theta=(), sigma2=0.0)
    with pytest.raises(ValueError):
        ArmaModel(mu=0.0, a=(0.5,), b=0.1, theta=(), sigma2=-1.0)
    with pytest.raises(ValueError):
        VarmaModel(
            mu=(0.0, 0.0),
            A=(((0.4, 0.1),),),  # ragged AR block
            b=(0.05, 0.0),
            M=(),
            Sigma=((1.0, 0.0), (0.0, 1.0)),
        )


def test_state_space_dimension_and_agreement():
    rng = np.random.default_rng(77)
    for _ in range(10):
        m = random_stable_arma(rng)
        form = to_state_space(m)
        assert form.d_s >= 1
        eps = rng.standard_normal(200) * np.sqrt(m.sigma2)
        u = np.where(rng.uniform(size=200) < 0.5, 1.0, -1.0)
        assert np.max(np.abs(arma_filter(m, eps, u) - form.simulate(eps, u))) <= 1e-10
