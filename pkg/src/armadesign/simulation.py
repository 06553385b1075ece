"""Synthetic experiment generators and the Monte Carlo MSE harness.

Four data sources share the PanelData output format:

* simulate_arma / simulate_varma — exact simulation of the controlled
  (V)ARMA recursions with i.i.d. Gaussian noise and a treatment sequence
  drawn from a design;
* bootstrap_simulate — the parametric bootstrap: replay a fitted model with
  an injected treatment effect, fresh noise from the fitted MA stage (or
  residual block resampling when no MA stage is attached), and a synthetic
  peak-hours dummy for the fitted exogenous coefficient;
* dispatch_simulate — a small ride-dispatch micro-simulator on a spatial
  grid whose income series does NOT follow an ARMA model, for
  model-misspecification experiments.

monte_carlo_mse repeats generate -> fit -> estimate over seeded replicates
and reports the empirical MSE of the ATE estimator against the generator's
oracle ATE.  Replicate r always draws from the substream (base_seed, r), so
results are bit-identical regardless of the number of worker threads.
"""

from __future__ import annotations

import concurrent.futures
import hashlib
import json
import math
import re
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import stats as _stats

from ._jsonio import dump_json, to_jsonable
from ._rng import STREAM_DISPATCH, STREAM_NOISE, STREAM_ORACLE, substream
from .designs import DesignSpec, design_to_dict, generate
from .estimation import FitResult, PanelData, fit_arma_yw, fit_varma_yw, fit_to_dict
from .models import (
    ArmaModel,
    UnstableModelError,
    VarmaModel,
    arma_filter,
    check_no_unit_root,
    model_to_dict,
    true_ate,
    varma_filter,
)

__all__ = [
    "simulate_arma",
    "simulate_varma",
    "peak_dummy",
    "BootstrapSpec",
    "bootstrap_simulate",
    "DispatchConfig",
    "dispatch_simulate",
    "dispatch_oracle_ate",
    "McReport",
    "monte_carlo_mse",
    "save_report",
]


# --------------------------------------------------------------------------
# controlled (V)ARMA simulation
# --------------------------------------------------------------------------

def _default_burn_in(p: int, q: int) -> int:
    return 10 * (p + q + 1)


def _require_stable(model) -> None:
    report = check_no_unit_root(model)
    if not report.stable:
        raise UnstableModelError(
            f"cannot simulate an unstable model (spectral radius "
            f"{report.spectral_radius:.6f})"
        )


def _noise_factor(Sigma: np.ndarray) -> np.ndarray:
    """Lower-triangular-ish factor L with L @ L.T = Sigma, PSD-tolerant."""
    try:
        return np.linalg.cholesky(Sigma)
    except np.linalg.LinAlgError:
        evals, evecs = np.linalg.eigh(Sigma)
        return evecs * np.sqrt(np.clip(evals, 0.0, None))


def simulate_arma(
    model: ArmaModel,
    design: DesignSpec,
    T: int,
    seed,
    burn_in: int | None = None,
    dt_label: str = "1h",
) -> PanelData:
    """Draw a length-T panel from the controlled ARMA recursion.

    Noise and treatment sequences cover burn_in extra steps (default
    10 (p+q+1)) that are discarded, so the kept sample is effectively
    stationary.  Identical (model, design, T, seed) reproduce the panel
    bit-for-bit.
    """
    _require_stable(model)
    if T < 1:
        raise ValueError(f"T must be positive, got {T}")
    burn = _default_burn_in(model.p, model.q) if burn_in is None else int(burn_in)
    if burn < model.p + model.q:
        raise ValueError(f"burn_in must be at least p+q = {model.p + model.q}")
    total = T + burn
    eps = substream(seed, STREAM_NOISE).standard_normal(total) * math.sqrt(model.sigma2)
    u = generate(design, total, seed)
    y = arma_filter(model, eps, u)
    return PanelData(Y=y[burn:], U=u[burn:], dt_label=dt_label)


def simulate_varma(
    model: VarmaModel,
    design: DesignSpec,
    T: int,
    seed,
    E: np.ndarray | None = None,
    burn_in: int | None = None,
    dt_label: str = "1h",
) -> PanelData:
    """Multivariate analogue of simulate_arma with Normal(0, Sigma) noise.

    An exogenous matrix E of shape (T, m) is required exactly when the
    model carries exogenous loadings C; it is zero-padded over the burn-in
    window and passed through into the returned panel.
    """
    _require_stable(model)
    if T < 1:
        raise ValueError(f"T must be positive, got {T}")
    burn = _default_burn_in(model.p, model.q) if burn_in is None else int(burn_in)
    if burn < model.p + model.q:
        raise ValueError(f"burn_in must be at least p+q = {model.p + model.q}")
    if (model.C is not None) != (E is not None):
        raise ValueError("E must be supplied if and only if the model has C")
    total = T + burn
    z = substream(seed, STREAM_NOISE).standard_normal((total, model.d))
    eps = z @ _noise_factor(model.Sigma).T
    u = generate(design, total, seed)
    exog = None
    if E is not None:
        E = np.asarray(E, dtype=float)
        if E.ndim == 1:
            E = E.reshape(-1, 1)
        if E.shape != (T, model.C.shape[1]):
            raise ValueError(
                f"E must have shape ({T}, {model.C.shape[1]}), got {E.shape}"
            )
        exog = np.vstack([np.zeros((burn, E.shape[1])), E])
    y = varma_filter(model, eps, u, exog)
    return PanelData(Y=y[burn:], U=u[burn:], E=E, dt_label=dt_label)


# --------------------------------------------------------------------------
# parametric bootstrap
# --------------------------------------------------------------------------

_DT_RE = re.compile(r"^\s*(\d*)\s*(h|hr|hour|hours|m|min|mins|minute|minutes)\s*$", re.I)


def _minutes_per_step(dt_label: str) -> float:
    m = _DT_RE.match(dt_label or "")
    if not m:
        raise ValueError(
            f"cannot parse dt_label {dt_label!r}; expected forms like '1h' or '30min'"
        )
    count = int(m.group(1)) if m.group(1) else 1
    unit = m.group(2).lower()
    return count * (60.0 if unit.startswith("h") else 1.0)


def peak_dummy(T: int, dt_label: str) -> np.ndarray:
    """0/1 indicator of 8am-8pm, for steps starting at midnight."""
    step_min = _minutes_per_step(dt_label)
    minute_of_day = (np.arange(T) * step_min) % 1440.0
    return ((minute_of_day >= 480.0) & (minute_of_day < 1200.0)).astype(float)


@dataclass(frozen=True)
class BootstrapSpec:
    """Generator spec for monte_carlo_mse: replay `fit` with an injected b."""

    fit: FitResult
    b_inject: float
    dt_label: str = "1h"


def _plugin_model(fit: FitResult, b_inject: float, for_block_fallback: bool) -> VarmaModel:
    """Lift a fitted model (either kind) into a VarmaModel for replay."""
    if fit.kind == "arma":
        d = 1
        mu = np.array([fit.mu_hat], dtype=float)
        A = np.asarray(fit.ar_hat, dtype=float).reshape(-1, 1, 1)
        b = np.array([b_inject], dtype=float)
        M = (
            np.zeros((0, 1, 1))
            if (for_block_fallback or fit.ma_hat is None)
            else np.asarray(fit.ma_hat, dtype=float).reshape(-1, 1, 1)
        )
        Sigma = np.eye(1) if fit.noise_cov_hat is None else np.atleast_2d(
            np.asarray(fit.noise_cov_hat, dtype=float)
        )
        C = None
    else:
        d = fit.d
        mu = np.asarray(fit.mu_hat, dtype=float).reshape(d)
        A = np.asarray(fit.ar_hat, dtype=float)
        b = np.full(d, float(b_inject))
        M = (
            np.zeros((0, d, d))
            if (for_block_fallback or fit.ma_hat is None)
            else np.asarray(fit.ma_hat, dtype=float)
        )
        Sigma = (
            np.eye(d)
            if fit.noise_cov_hat is None
            else np.asarray(fit.noise_cov_hat, dtype=float)
        )
        C = None if fit.c_hat is None else np.asarray(fit.c_hat, dtype=float)
    if for_block_fallback:
        Sigma = np.eye(d)  # placeholder; the filter receives resampled noise
    return VarmaModel(mu=mu, A=A, b=b, M=M, Sigma=Sigma, C=C)


def _block_resample(residuals: np.ndarray, block: int, T: int, rng) -> np.ndarray:
    """Concatenate uniformly drawn residual blocks of the given length."""
    n = residuals.shape[0]
    if n < block:
        raise ValueError(
            f"only {n} residual rows available; need at least the block length {block}"
        )
    n_blocks = -(-T // block)
    starts = rng.integers(0, n - block + 1, size=n_blocks)
    out = np.concatenate([residuals[s : s + block] for s in starts], axis=0)
    return out[:T]


def bootstrap_simulate(
    fit: FitResult,
    b_inject: float,
    design: DesignSpec,
    T: int,
    seed,
    dt_label: str = "1h",
    allow_block_fallback: bool = True,
) -> PanelData:
    """Replay a fitted model with treatment coefficient b_inject on 1.

    The noise series is generated before the outcome recursion: either
    fresh Gaussian innovations through the fitted MA polynomial, or —
    when no MA stage is attached — blocks of length q+1 resampled from the
    stored first-stage residuals.  When the fit carries an exogenous
    coefficient, a single peak-hours dummy (8am-8pm from dt_label, steps
    starting at midnight) is synthesised and passed through the fitted
    loading.  No burn-in is applied, keeping the dummy aligned to the
    calendar; the recursion starts from centred zeros.
    """
    if T < 1:
        raise ValueError(f"T must be positive, got {T}")
    if fit.c_hat is not None and np.asarray(fit.c_hat).shape[1] != 1:
        raise ValueError(
            "bootstrap synthesises a single peak-hours dummy; the fit has "
            f"{np.asarray(fit.c_hat).shape[1]} exogenous columns"
        )
    parametric = fit.ma_hat is not None and fit.noise_cov_hat is not None
    if not parametric:
        if not allow_block_fallback:
            raise ValueError("fit has no MA stage and block fallback is disabled")
        if fit.residuals is None:
            raise ValueError(
                "fit has no MA stage and no stored residuals to block-resample"
            )
    model = _plugin_model(fit, b_inject, for_block_fallback=not parametric)
    rng = substream(seed, STREAM_NOISE)
    if parametric:
        z = rng.standard_normal((T, model.d))
        eps = z @ _noise_factor(model.Sigma).T
    else:
        resid = np.asarray(fit.residuals, dtype=float)
        if resid.ndim == 1:
            resid = resid.reshape(-1, 1)
        eps = _block_resample(resid, fit.q + 1, T, rng)
    u = generate(design, T, seed)
    E = peak_dummy(T, dt_label).reshape(-1, 1) if fit.c_hat is not None else None
    y = varma_filter(model, eps, u, E)
    if fit.kind == "arma":
        y = y[:, 0]
    return PanelData(Y=y, U=u, E=E, dt_label=dt_label)


# --------------------------------------------------------------------------
# ride-dispatch micro-simulator
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DispatchConfig:
    """Parameters of the grid dispatch simulator.

    Orders spawn at truncated-Gaussian mixture locations with call times
    from a two-peak daily profile and uniform destinations; idle drivers
    are matched greedily by Chebyshev distance; rides take one step per
    cell (minimum one step); income books at completion as
    fare_base + fare_per_cell * trip distance, plus treatment_effect when
    the completion interval is treated.  The treatment changes income only,
    so its ground-truth ATE is controllable while the income series keeps
    strong non-ARMA temporal structure.
    """

    grid: int = 9
    steps_per_day: int = 20
    n_drivers: int = 50
    n_orders_per_day: int = 50
    origin_means: tuple = ((2.0, 2.0), (6.0, 6.0))
    origin_sds: tuple = (1.5, 1.5)
    origin_weights: tuple = (0.5, 0.5)
    peak_means: tuple = (6.0, 14.0)
    peak_sds: tuple = (2.0, 2.0)
    peak_weights: tuple = (0.5, 0.5)
    cancel_mean: float = 3.0
    cancel_sd: float = 2.0
    cancel_lo: float = 1.0
    cancel_hi: float = 8.0
    treatment_effect: float = 0.0
    fare_base: float = 1.0
    fare_per_cell: float = 0.5

    def __post_init__(self):
        for name in ("grid", "steps_per_day", "n_orders_per_day"):
            if int(getattr(self, name)) < 1:
                raise ValueError(f"{name} must be a positive integer")
        if self.n_drivers < 0:
            raise ValueError("n_drivers must be non-negative")
        for name in ("origin_weights", "peak_weights"):
            w = np.asarray(getattr(self, name), dtype=float)
            if w.shape != (2,) or abs(float(w.sum()) - 1.0) > 1e-12 or np.any(w < 0):
                raise ValueError(f"{name} must be two non-negative weights summing to 1")
        for name in ("origin_sds", "peak_sds"):
            if np.any(np.asarray(getattr(self, name), dtype=float) <= 0):
                raise ValueError(f"{name} must be positive")
        if self.cancel_sd <= 0 or self.cancel_lo > self.cancel_hi:
            raise ValueError("cancel_wait parameters are inconsistent")
        if self.fare_base + self.treatment_effect < 0:
            raise ValueError("fare_base + treatment_effect must be non-negative")

    def to_dict(self) -> dict:
        return {
            "grid": self.grid,
            "steps_per_day": self.steps_per_day,
            "n_drivers": self.n_drivers,
            "n_orders_per_day": self.n_orders_per_day,
            "origin_means": [list(m) for m in self.origin_means],
            "origin_sds": list(self.origin_sds),
            "origin_weights": list(self.origin_weights),
            "peak_means": list(self.peak_means),
            "peak_sds": list(self.peak_sds),
            "peak_weights": list(self.peak_weights),
            "cancel_mean": self.cancel_mean,
            "cancel_sd": self.cancel_sd,
            "cancel_lo": self.cancel_lo,
            "cancel_hi": self.cancel_hi,
            "treatment_effect": self.treatment_effect,
            "fare_base": self.fare_base,
            "fare_per_cell": self.fare_per_cell,
        }

    @staticmethod
    def from_dict(data: dict) -> "DispatchConfig":
        kwargs = dict(data)
        for key in ("origin_means",):
            if key in kwargs:
                kwargs[key] = tuple(tuple(m) for m in kwargs[key])
        for key in ("origin_sds", "origin_weights", "peak_means", "peak_sds",
                    "peak_weights"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return DispatchConfig(**kwargs)


def _truncnorm_draws(rng, mean, sd, lo, hi, size):
    a, b = (lo - mean) / sd, (hi - mean) / sd
    return _stats.truncnorm.rvs(a, b, loc=mean, scale=sd, size=size, random_state=rng)


def _mixture_positions(rng, cfg: DispatchConfig, n: int) -> np.ndarray:
    comp = rng.choice(2, size=n, p=np.asarray(cfg.origin_weights, dtype=float))
    pos = np.empty((n, 2))
    for c in (0, 1):
        idx = np.flatnonzero(comp == c)
        if idx.size == 0:
            continue
        mx, my = cfg.origin_means[c]
        sd = cfg.origin_sds[c]
        pos[idx, 0] = _truncnorm_draws(rng, mx, sd, 0, cfg.grid - 1, idx.size)
        pos[idx, 1] = _truncnorm_draws(rng, my, sd, 0, cfg.grid - 1, idx.size)
    return np.rint(pos).astype(np.int64)


def _call_steps(rng, cfg: DispatchConfig, n: int) -> np.ndarray:
    comp = rng.choice(2, size=n, p=np.asarray(cfg.peak_weights, dtype=float))
    t = np.empty(n)
    for c in (0, 1):
        idx = np.flatnonzero(comp == c)
        if idx.size == 0:
            continue
        t[idx] = _truncnorm_draws(
            rng, cfg.peak_means[c], cfg.peak_sds[c], 0, cfg.steps_per_day - 1, idx.size
        )
    return np.rint(t).astype(np.int64)


def _cheb(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.max(np.abs(a - b), axis=-1)


def _dispatch_run(cfg: DispatchConfig, u: np.ndarray, rng, collect_stats: bool):
    """Core event loop; one income/unassigned/idle row per interval."""
    T = u.shape[0]
    spd = cfg.steps_per_day
    n_drv = cfg.n_drivers
    driver_pos = rng.integers(0, cfg.grid, size=(n_drv, 2))
    busy_until = np.zeros(n_drv, dtype=np.int64)
    # completions scheduled per step: step -> list of trip distances
    scheduled: dict[int, list] = {}
    waiting: list[dict] = []
    Y = np.zeros((T, 3))
    stats = {
        "spawned": np.zeros(T, dtype=np.int64),
        "cancelled": np.zeros(T, dtype=np.int64),
        "matched": np.zeros(T, dtype=np.int64),
        "completed": np.zeros(T, dtype=np.int64),
        "idle": np.zeros(T, dtype=np.int64),
        "busy": np.zeros(T, dtype=np.int64),
    }
    for t in range(T):
        step_in_day = t % spd
        if step_in_day == 0:  # draw the whole day's order book
            n_new = cfg.n_orders_per_day
            origins = _mixture_positions(rng, cfg, n_new)
            dests = rng.integers(0, cfg.grid, size=(n_new, 2))
            calls = t + _call_steps(rng, cfg, n_new)
            waits = _truncnorm_draws(
                rng, cfg.cancel_mean, cfg.cancel_sd, cfg.cancel_lo, cfg.cancel_hi, n_new
            )
            todays = sorted(range(n_new), key=lambda i: (calls[i], i))
            day_book = [
                {
                    "origin": origins[i],
                    "dest": dests[i],
                    "call": int(calls[i]),
                    "wait": float(waits[i]),
                }
                for i in todays
            ]
        # 1) bank completions scheduled for this step
        income = 0.0
        for trip in scheduled.pop(t, ()):  # income books at completion
            income += cfg.fare_base + cfg.fare_per_cell * trip
            if u[t] > 0:
                income += cfg.treatment_effect
            stats["completed"][t] += 1
        # 2) spawn orders whose call time is this step
        while day_book and day_book[0]["call"] <= t:
            order = day_book.pop(0)
            waiting.append(order)
            stats["spawned"][t] += 1
        # 3) cancel orders that waited past their tolerance
        kept = []
        for order in waiting:
            if t - order["call"] > order["wait"]:
                stats["cancelled"][t] += 1
            else:
                kept.append(order)
        waiting = kept
        # 4) greedy matching by ascending (distance, driver, order)
        idle = np.flatnonzero(busy_until <= t)
        if idle.size and waiting:
            origins = np.stack([o["origin"] for o in waiting])
            dist = _cheb(driver_pos[idle][:, None, :], origins[None, :, :])
            pairs = sorted(
                ((int(dist[i, j]), int(i), int(j))
                 for i in range(idle.size) for j in range(len(waiting))),
            )
            used_d, used_o = set(), set()
            for dd, i, j in pairs:
                if i in used_d or j in used_o:
                    continue
                used_d.add(i)
                used_o.add(j)
                drv = int(idle[i])
                order = waiting[j]
                pickup = int(_cheb(driver_pos[drv], order["origin"]))
                trip = int(_cheb(order["origin"], order["dest"]))
                finish = t + max(1, pickup + trip)
                busy_until[drv] = finish
                driver_pos[drv] = order["dest"]
                scheduled.setdefault(finish, []).append(trip)
                stats["matched"][t] += 1
            waiting = [o for j, o in enumerate(waiting) if j not in used_o]
        # 5) record the post-matching observation
        n_idle = int(np.sum(busy_until <= t))
        Y[t, 0] = income
        Y[t, 1] = len(waiting)
        Y[t, 2] = n_idle
        stats["idle"][t] = n_idle
        stats["busy"][t] = int(np.sum(busy_until > t))
    return (Y, stats) if collect_stats else (Y, None)


def dispatch_simulate(
    config: DispatchConfig,
    design: DesignSpec,
    days: int,
    seed,
    return_stats: bool = False,
):
    """Run the dispatch simulator for `days` days under a treatment design.

    Returns a PanelData with columns (income, unassigned orders, idle
    drivers) per interval; with return_stats=True, also a dict of per-step
    spawn/cancel/match/complete counts for conservation checks.
    """
    if days < 1:
        raise ValueError(f"days must be >= 1, got {days}")
    T = days * config.steps_per_day
    u = generate(design, T, seed)
    rng = substream(seed, STREAM_DISPATCH)
    Y, stats = _dispatch_run(config, u, rng, collect_stats=return_stats)
    panel = PanelData(Y=Y, U=u, dt_label="")
    return (panel, stats) if return_stats else panel


def dispatch_oracle_ate(config: DispatchConfig, days: int = 2000, seed=0) -> dict:
    """Ground-truth dispatch ATE from two constant-treatment runs.

    Both runs consume identical random streams (common random numbers), so
    the per-step income difference isolates the treatment term; the SE is a
    leave-one-day-out jackknife of the mean difference.
    """
    T = days * config.steps_per_day
    y_plus, _ = _dispatch_run(
        config, np.ones(T, dtype=np.int64), substream(seed, STREAM_ORACLE), False
    )
    y_minus, _ = _dispatch_run(
        config, -np.ones(T, dtype=np.int64), substream(seed, STREAM_ORACLE), False
    )
    diff = y_plus[:, 0] - y_minus[:, 0]
    day_means = diff.reshape(days, config.steps_per_day).mean(axis=1)
    ate = float(day_means.mean())
    loo = (day_means.sum() - day_means) / (days - 1)
    se = float(np.sqrt((days - 1) / days * np.sum((loo - loo.mean()) ** 2)))
    return {"ate": ate, "se": se, "days": days}


# --------------------------------------------------------------------------
# Monte Carlo harness
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class McReport:
    """Empirical MSE of an ATE estimator under one design."""

    design_label: str
    reps: int
    ate_estimates: tuple
    oracle_ate: float
    mse: float
    rmse: float
    se_of_mse: float
    n_failed: int
    runtime: dict
    config_digest: str

    def to_dict(self) -> dict:
        return {
            "design_label": self.design_label,
            "reps": self.reps,
            "ate_estimates": list(self.ate_estimates),
            "oracle_ate": self.oracle_ate,
            "mse": self.mse,
            "rmse": self.rmse,
            "se_of_mse": self.se_of_mse,
            "n_failed": self.n_failed,
            "runtime": dict(self.runtime),
            "config_digest": self.config_digest,
        }


def save_report(report: McReport, path) -> None:
    dump_json(report.to_dict(), path)


def _generator_dict(generator) -> dict:
    if isinstance(generator, (ArmaModel, VarmaModel)):
        return {"kind": "model", "model": model_to_dict(generator)}
    if isinstance(generator, BootstrapSpec):
        return {
            "kind": "bootstrap",
            "fit": fit_to_dict(generator.fit),
            "b_inject": generator.b_inject,
            "dt_label": generator.dt_label,
        }
    if isinstance(generator, DispatchConfig):
        return {"kind": "dispatch", "config": generator.to_dict()}
    raise TypeError(f"unsupported generator type {type(generator).__name__}")


def _oracle_for(generator, base_seed, oracle_days) -> float:
    if isinstance(generator, (ArmaModel, VarmaModel)):
        return float(true_ate(generator))
    if isinstance(generator, BootstrapSpec):
        fit = generator.fit
        if fit.kind == "arma":
            return 2.0 * generator.b_inject / (1.0 - float(np.sum(fit.ar_hat)))
        d = fit.d
        A_sum = np.sum(np.asarray(fit.ar_hat, dtype=float), axis=0)
        ones = np.full(d, generator.b_inject)
        return float(2.0 * np.linalg.solve(np.eye(d) - A_sum, ones)[0])
    if isinstance(generator, DispatchConfig):
        return float(dispatch_oracle_ate(generator, days=oracle_days, seed=base_seed)["ate"])
    raise TypeError(f"unsupported generator type {type(generator).__name__}")


def _replicate_ate(generator, design, T_or_days, base_seed, r, orders) -> float:
    seed = (base_seed, r)
    if isinstance(generator, ArmaModel):
        panel = simulate_arma(generator, design, T_or_days, seed)
        p, q = orders if orders else (generator.p, generator.q)
        fit = fit_arma_yw(panel, p, q)
    elif isinstance(generator, VarmaModel):
        if generator.C is not None:
            raise ValueError("monte_carlo_mse requires an exogenous-free model")
        panel = simulate_varma(generator, design, T_or_days, seed)
        p, q = orders if orders else (generator.p, generator.q)
        fit = fit_varma_yw(panel, p, q)
    elif isinstance(generator, BootstrapSpec):
        panel = bootstrap_simulate(
            generator.fit, generator.b_inject, design, T_or_days, seed,
            dt_label=generator.dt_label,
        )
        p, q = orders if orders else (generator.fit.p, generator.fit.q)
        fit = (fit_arma_yw if generator.fit.kind == "arma" else fit_varma_yw)(
            panel, p, q
        )
    elif isinstance(generator, DispatchConfig):
        panel = dispatch_simulate(generator, design, T_or_days, seed)
        p, q = orders if orders else (1, 1)
        fit = fit_varma_yw(panel, p, q)
    else:
        raise TypeError(f"unsupported generator type {type(generator).__name__}")
    return float(fit.ate_hat)


def monte_carlo_mse(
    generator,
    design: DesignSpec,
    R: int,
    T_or_days: int,
    base_seed,
    jobs: int = 1,
    orders: tuple | None = None,
    oracle_ate: float | None = None,
    oracle_days: int = 2000,
) -> McReport:
    """Empirical MSE of the ATE estimator over R seeded replicates.

    The generator is an ArmaModel/VarmaModel (simulate + refit at the true
    orders), a BootstrapSpec (replay a fit with injected effect; oracle from
    the fitted AR polynomial), or a DispatchConfig (oracle from long
    constant-treatment runs unless oracle_ate is given).  Replicate r uses
    the substream (base_seed, r); failed fits are excluded and counted.
    """
    if R < 1:
        raise ValueError(f"R must be >= 1, got {R}")
    t0 = time.perf_counter()
    oracle = (
        float(oracle_ate)
        if oracle_ate is not None
        else _oracle_for(generator, base_seed, oracle_days)
    )

    def run_one(r: int):
        try:
            ate = _replicate_ate(generator, design, T_or_days, base_seed, r, orders)
        except (ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
            return ("fail", f"replicate {r}: {exc}")
        if not np.isfinite(ate):
            return ("fail", f"replicate {r}: non-finite ATE estimate")
        return ("ok", ate)

    if jobs > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(run_one, range(R)))
    else:
        outcomes = [run_one(r) for r in range(R)]

    estimates = [val for st, val in outcomes if st == "ok"]
    n_failed = R - len(estimates)
    if n_failed:
        warnings.warn(
            f"{n_failed}/{R} replicates failed to fit and were excluded",
            stacklevel=2,
        )
    if not estimates:
        raise RuntimeError("every replicate failed; no MSE to report")
    err2 = (np.asarray(estimates) - oracle) ** 2
    n = err2.shape[0]
    mse = float(err2.mean())
    if n > 1:
        loo = (err2.sum() - err2) / (n - 1)
        se_of_mse = float(np.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))
    else:
        se_of_mse = float("nan")
    digest_payload = to_jsonable(
        {
            "generator": _generator_dict(generator),
            "design": design_to_dict(design),
            "R": R,
            "T_or_days": T_or_days,
            "base_seed": base_seed,
            "orders": list(orders) if orders else None,
        }
    )
    digest = hashlib.sha256(
        json.dumps(digest_payload, sort_keys=True).encode()
    ).hexdigest()
    runtime = {
        "seconds": round(time.perf_counter() - t0, 3),
        "jobs": jobs,
        "n_used": n,
    }
    return McReport(
        design_label=getattr(design, "name", type(design).__name__),
        reps=R,
        ate_estimates=tuple(float(a) for a in estimates),
        oracle_ate=oracle,
        mse=mse,
        rmse=math.sqrt(mse),
        se_of_mse=se_of_mse,
        n_failed=n_failed,
        runtime=runtime,
        config_digest=digest,
    )
