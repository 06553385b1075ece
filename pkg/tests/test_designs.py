"""Unit tests for treatment designs: analytic moments and sequence generation."""

from __future__ import annotations

import numpy as np
import pytest

from armadesign.designs import (
    Markov,
    PolicyTable,
    QDependent,
    ad_design,
    at_design,
    autocov,
    design_from_dict,
    design_to_dict,
    generate,
    load_design,
    save_design,
    ur_design,
    xi,
)


def test_named_design_autocovariances():
    ur = ur_design()
    assert [autocov(ur, k) for k in (1, 2, 5)] == [0.0, 0.0, 0.0]
    at = at_design()
    assert [autocov(at, k) for k in (1, 2, 3)] == [-1.0, 1.0, -1.0]
    ad4 = ad_design(4)
    assert autocov(ad4, 1) == pytest.approx(0.5, abs=1e-15)
    assert autocov(ad4, 2) == pytest.approx(0.0, abs=1e-15)
    assert autocov(ad4, 3) == pytest.approx(-0.5, abs=1e-15)
    assert autocov(ad4, 4) == pytest.approx(-1.0, abs=1e-15)
    assert autocov(ad_design(100), 1) == pytest.approx(0.98, abs=1e-15)
    # period-1 switchback is exactly the alternating design
    assert autocov(ad_design(1), 1) == -1.0


def test_design_means():
    assert xi(ur_design()) == 0.0
    assert xi(at_design()) == 0.0
    assert xi(ad_design(24)) == 0.0
    # stationary mean of the chain: pi_plus = beta/(1-alpha+beta)
    assert xi(Markov(alpha=0.2, beta=0.2)) == pytest.approx(-0.6, abs=1e-12)
    assert xi(Markov(alpha=0.3, beta=0.7)) == pytest.approx(0.0, abs=1e-12)


def test_generate_is_deterministic_and_binary():
    for design in (ur_design(), at_design(), ad_design(5),
                   Markov(alpha=0.7, beta=0.3)):
        u1 = generate(design, 500, seed=42)
        u2 = generate(design, 500, seed=42)
        assert np.array_equal(u1, u2)
        assert set(np.unique(u1)).issubset({-1.0, 1.0})


def test_alternating_and_switchback_patterns():
    u = generate(at_design(), 6, seed=0)
    assert np.all(u[1:] == -u[:-1])
    # blocks of m identical signs, flipping between blocks
    m = 4
    u = generate(ad_design(m), 4 * m, seed=1)
    blocks = u.reshape(4, m)
    assert np.all(blocks == blocks[:, :1])
    assert np.all(blocks[1:, 0] == -blocks[:-1, 0])


def test_markov_generate_matches_transition_probability():
    alpha = 0.8
    u = generate(Markov(alpha=alpha, beta=1 - alpha), 200_000, seed=9)
    stays = np.mean(u[1:] == u[:-1])
    assert abs(stays - alpha) < 3.0 * np.sqrt(alpha * (1 - alpha) / len(u))


def test_policy_table_cycle_statistics():
    # q=1 alternating policy: from either state, flip sign forever
    flip = PolicyTable(q=1, table=(1, -1))
    assert flip.lag_mean_all_starts(1) == pytest.approx(-1.0, abs=1e-15)
    assert flip.lag_mean_all_starts(2) == pytest.approx(1.0, abs=1e-15)
    hold = PolicyTable(q=1, table=(-1, 1))
    assert hold.lag_mean_all_starts(1) == pytest.approx(1.0, abs=1e-15)
    design = QDependent(flip)
    u = generate(design, 10, seed=3)
    assert np.all(u[1:] == -u[:-1])


def test_design_json_roundtrip(tmp_path):
    designs = [
        ur_design(),
        at_design(),
        ad_design(12),
        Markov(alpha=0.25, beta=0.5, label="drifty"),
        QDependent(PolicyTable(q=2, table=(1, -1, -1, 1)), label="learned"),
    ]
    for i, design in enumerate(designs):
        path = tmp_path / f"d{i}.json"
        save_design(design, path)
        back = load_design(path)
        assert design_to_dict(back) == design_to_dict(design)
        assert back.name == design.name
        u1 = generate(design, 64, seed=(5, i))
        u2 = generate(back, 64, seed=(5, i))
        assert np.array_equal(u1, u2)


def test_design_dict_rejects_unknown_kind():
    with pytest.raises(ValueError):
        design_from_dict({"kind": "mystery"})
