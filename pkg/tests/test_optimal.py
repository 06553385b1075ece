"""Unit tests for the design optimizers: polynomial and dynamic-programming."""

from __future__ import annotations

import numpy as np
import pytest

from armadesign.designs import Markov, QDependent
from armadesign.optimal import (
    MdpSpec,
    co_design,
    exhaustive_search,
    policy_objective,
    rl_design,
    solve_alpha,
    value_iteration,
)


def test_solve_alpha_hand_cases():
    # f(x) = 0.5 x on [-1,1]: minimum at x=-1, i.e. alpha=0
    sol = solve_alpha((0.5,))
    assert sol["alpha"] == pytest.approx(0.0, abs=1e-12)
    assert sol["objective"] == pytest.approx(-0.5, abs=1e-12)
    # f(x) = -0.5 x: maximum persistence, alpha=1
    sol = solve_alpha((-0.5,))
    assert sol["alpha"] == pytest.approx(1.0, abs=1e-12)
    assert sol["objective"] == pytest.approx(-0.5, abs=1e-12)
    # f(x) = -x + x^2: interior critical point x=1/2, alpha=3/4
    sol = solve_alpha((-1.0, 1.0))
    assert sol["alpha"] == pytest.approx(0.75, abs=1e-12)
    assert sol["objective"] == pytest.approx(-0.25, abs=1e-12)
    # f(x) = x^2: flat minimum at x=0
    sol = solve_alpha((0.0, 1.0))
    assert sol["alpha"] == pytest.approx(0.5, abs=1e-12)
    assert sol["objective"] == pytest.approx(0.0, abs=1e-12)
    # no carryover cost at all: fair coin by convention
    sol = solve_alpha(())
    assert sol["alpha"] == 0.5 and sol["objective"] == 0.0
    assert solve_alpha((0.0, 0.0))["alpha"] == 0.5


def test_value_iteration_hand_cases():
    # positive lag-1 cost: alternate
    policy = value_iteration(MdpSpec(q=1, c=(0.5,)))
    assert policy_objective(policy, (0.5,)) == pytest.approx(-0.5, abs=1e-12)
    assert tuple(policy.table) == (1, -1)
    # negative lag-1 cost: persist
    policy = value_iteration(MdpSpec(q=1, c=(-0.5,)))
    assert policy_objective(policy, (-0.5,)) == pytest.approx(-0.5, abs=1e-12)
    assert tuple(policy.table) == (-1, 1)
    # the two-lag cost (1.44, -1.6) is minimized by strict alternation
    policy = value_iteration(MdpSpec(q=2, c=(1.44, -1.6)))
    assert tuple(policy.table) == (1, -1, 1, -1)
    assert policy_objective(policy, (1.44, -1.6)) == pytest.approx(-3.04, abs=1e-12)


def test_value_iteration_zero_cost_prefers_treatment():
    policy = value_iteration(MdpSpec(q=2, c=(0.0, 0.0)))
    assert tuple(policy.table) == (1, 1, 1, 1)
    assert policy_objective(policy, (0.0, 0.0)) == 0.0


def test_exhaustive_search_small_cases():
    out = exhaustive_search((0.5,), 1)
    assert out["objective"] == pytest.approx(-0.5, abs=1e-12)
    out = exhaustive_search((1.44, -1.6), 2)
    assert out["objective"] == pytest.approx(-3.04, abs=1e-12)
    with pytest.raises(ValueError):
        exhaustive_search((0.1,) * 5, 5)  # brute force capped at q=4


def test_policy_objective_matches_manual_cycle():
    # period-2 cycle (+1, -1): lag-1 mean -1, lag-2 mean +1
    policy = value_iteration(MdpSpec(q=2, c=(1.0, -0.25)))
    obj = policy_objective(policy, (1.0, -0.25))
    assert obj == pytest.approx(1.0 * -1.0 + -0.25 * 1.0, abs=1e-12)


def test_design_constructors():
    from armadesign.asymptotics import ck_from_model
    from armadesign.models import ArmaModel

    ck = ck_from_model(ArmaModel(mu=0, a=(0.5,), b=0.005, theta=(0.8,), sigma2=1))
    co = co_design(ck)
    assert isinstance(co, Markov) and co.name == "CO"
    assert 0.0 <= co.alpha <= 1.0
    rl = rl_design(ck)
    assert isinstance(rl, QDependent) and rl.name == "RL"
    assert rl.policy.q == 1
    # positive lag-1 cost: both land on alternation with equal objectives
    assert co.alpha == pytest.approx(0.0, abs=1e-12)
    assert policy_objective(rl.policy, ck) == pytest.approx(-ck.c[0], abs=1e-12)


def test_spec_validation():
    with pytest.raises(ValueError):
        MdpSpec(q=0, c=())
    with pytest.raises(ValueError):
        MdpSpec(q=2, c=(0.1,))
    with pytest.raises(ValueError):
        MdpSpec(q=1, c=(0.1,), gamma=1.0)
    with pytest.raises(ValueError):
        MdpSpec(q=1, c=(0.1,), tol=0.0)


def test_optimizers_respect_brute_force_on_random_draws():
    rng = np.random.default_rng(23)
    for _ in range(25):
        q = int(rng.integers(1, 4))
        c = rng.uniform(-1, 1, size=q)
        vi_obj = policy_objective(value_iteration(MdpSpec(q=q, c=tuple(c))), c)
        assert abs(vi_obj - exhaustive_search(c, q)["objective"]) <= 1e-9
        sol = solve_alpha(c)
        poly = np.polynomial.Polynomial(np.concatenate(([0.0], c)))
        grid_best = min(poly(2.0 * a - 1.0) for a in np.linspace(0.0, 1.0, 21))
        assert sol["objective"] <= grid_best + 1e-12
