"""Small-signal asymptotic MSEs of the ATE estimator and design indicators.

In the small-signal limit (T -> infinity with the treatment effect shrinking
to zero) the MSE of T^(1/2) times the ATE estimator under a design with
limiting treatment autocovariance rho_U(k) is

    MSE = 4 / (1-a)^2 * [gamma_Z(0) + 2 sum_{k=1..q} rho_U(k) gamma_Z(k)],

divided by (1 - xi^2)^2 for designs with a nonzero limiting mean treatment
fraction xi.  Everything a design's MSE needs is captured by

    c_k = gamma_Z(k) / (1 - a)^2            (univariate)
    c_k = e1'(I-A)^{-1} Gamma_Z(k) (I-A)^{-T} e1   (multivariate),

with the noise scale always folded into c_k.  The named designs specialize
rho: AD (daily switchback in its infinite-block limit) has rho = 1, UR has
rho = 0 and AT (alternate every interval) has rho = (-1)^k, which gives the
closed forms

    MSE_AD = 4 (c_0 + 2 sum_k c_k),   MSE_UR = 4 c_0,
    MSE_AT = 4 (c_0 + 2 sum_k (-1)^k c_k).

Two efficiency indicators summarize which named design wins: EI_AD =
sum_{k>=1} gamma_Z(k)/sigma^2 and EI_AT, its alternating-sign version.  AD
beats UR and AT iff EI_AD < 0 and EI_AD < EI_AT; UR wins iff both are
positive; AT wins iff EI_AT < 0 and EI_AT < EI_AD.  MSE differences obey
mse[AD] - mse[UR] = 8 K EI_AD with K = sigma^2/(1-a)^2 (K = 1 in the
multivariate convention, where the indicators absorb the sandwich).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .designs import DesignSpec
from .estimation import FitResult, NotRealizableError, fit_ma_innovations
from .models import ArmaModel, UnstableModelError, VarmaModel, check_no_unit_root, noise_autocov

DESIGN_LABELS = ("AD", "UR", "AT")


@dataclass(frozen=True, eq=False)
class CkCoefficients:
    """Design-independent MSE coefficients c_0, c_1..c_q (noise scale folded in)."""

    c0: float
    c: np.ndarray
    source: str        # "arma" | "varma"
    scale_note: str = "noise variance folded into c_k"

    @property
    def q(self) -> int:
        return self.c.shape[0]


@dataclass(frozen=True, eq=False)
class EfficiencyReport:
    ei_ad: float
    ei_at: float
    mse: dict
    recommendation: str
    model_ref: dict

    def to_dict(self) -> dict:
        return {
            "ei_ad": self.ei_ad,
            "ei_at": self.ei_at,
            "mse": dict(self.mse),
            "recommendation": self.recommendation,
            "model_ref": dict(self.model_ref),
        }


def _is_multivariate(obj) -> bool:
    if isinstance(obj, VarmaModel):
        return True
    if isinstance(obj, ArmaModel):
        return False
    return obj.kind == "varma"


def _gamma_and_ar(obj):
    """(gamma_z (q+1,) or (q+1,d,d), AR summary, descriptor dict) for fit or model."""
    if isinstance(obj, (ArmaModel, VarmaModel)):
        rep = check_no_unit_root(obj)
        if not rep.stable:
            raise UnstableModelError(
                f"AR part has companion spectral radius {rep.spectral_radius:.6g}; "
                "asymptotic formulas require stationarity"
            )
        gamma = noise_autocov(obj)
        if isinstance(obj, ArmaModel):
            ar = float(np.sum(obj.a))
        else:
            ar = obj.A.sum(axis=0) if obj.p else np.zeros((obj.d, obj.d))
        ref = {"kind": "arma" if isinstance(obj, ArmaModel) else "varma",
               "p": obj.p, "q": obj.q, "d": obj.d, "from": "model"}
        return gamma, ar, ref
    fit: FitResult = obj
    if not fit.ar_stable:
        raise UnstableModelError(
            "fitted AR part is non-stationary; asymptotic formulas require stationarity"
        )
    if fit.kind == "arma":
        ar = float(np.sum(fit.ar_hat))
        if abs(1.0 - ar) <= 1e-9:
            raise UnstableModelError("fitted AR coefficients sum to 1; near unit root")
    else:
        ar = fit.a_sum
    ref = {"kind": fit.kind, "p": fit.p, "q": fit.q, "d": fit.d,
           "from": "fit", "n_used": fit.n_used, "ate_hat": fit.ate_hat}
    return fit.gamma_z, ar, ref


def _sandwich_vector(ar: np.ndarray) -> np.ndarray:
    d = ar.shape[0]
    e1 = np.zeros(d)
    e1[0] = 1.0
    return np.linalg.solve((np.eye(d) - ar).T, e1)  # (I-A)^{-T} e1


def ck_from_fit(obj) -> CkCoefficients:
    """c_k coefficients from a FitResult or a true model.

    Univariate: c_k = gamma_Z(k)/(1-a)^2.  Multivariate: the symmetrized
    sandwich e1'(I-A)^{-1} Gamma_Z(k) (I-A)^{-T} e1.
    """
    gamma, ar, ref = _gamma_and_ar(obj)
    if not _is_multivariate(obj):
        den = (1.0 - ar) ** 2
        vals = gamma / den
        return CkCoefficients(c0=float(vals[0]), c=vals[1:].copy(), source="arma")
    v = _sandwich_vector(ar)
    sym = 0.5 * (gamma + np.transpose(gamma, (0, 2, 1)))
    vals = np.array([float(v @ g @ v) for g in sym])
    return CkCoefficients(c0=float(vals[0]), c=vals[1:].copy(), source="varma")


# ck_from_fit accepts models too; the alias documents that usage at call sites.
ck_from_model = ck_from_fit


def _noise_scale(obj, gamma) -> float:
    """sigma2 for the univariate indicator normalization."""
    if isinstance(obj, ArmaModel):
        return obj.sigma2
    fit: FitResult = obj
    if fit.noise_cov_hat is not None:
        return float(fit.noise_cov_hat)
    try:
        _, s2 = fit_ma_innovations(gamma, fit.q)
        return float(s2)
    except NotRealizableError:
        # scale-only fallback: keeps signs, comparisons and the 8K identity
        # intact since the same value enters both EI and K
        return float(gamma[0])


def _noise_scale_multi(obj, gamma) -> float:
    """Coordinate-1 innovation variance for the multivariate normalization."""
    if isinstance(obj, VarmaModel):
        return float(obj.Sigma[0, 0])
    fit: FitResult = obj
    if fit.noise_cov_hat is not None:
        return float(np.asarray(fit.noise_cov_hat)[0, 0])
    g = np.asarray(gamma)
    if fit.d == 1:
        try:
            _, s2 = fit_ma_innovations(g[:, 0, 0], fit.q)
            return float(s2)
        except NotRealizableError:
            pass
    return float(g[0][0, 0])


def mse_named(ck: CkCoefficients) -> dict:
    """Closed-form asymptotic MSEs of the named designs from c_k."""
    c0, c = ck.c0, ck.c
    signs = (-1.0) ** np.arange(1, ck.q + 1)
    return {
        "AD": 4.0 * (c0 + 2.0 * float(np.sum(c))),
        "UR": 4.0 * c0,
        "AT": 4.0 * (c0 + 2.0 * float(np.sum(signs * c))),
    }


def mse_ad(obj) -> float:
    return mse_named(ck_from_fit(obj))["AD"]


def mse_ur(obj) -> float:
    return mse_named(ck_from_fit(obj))["UR"]


def mse_at(obj) -> float:
    return mse_named(ck_from_fit(obj))["AT"]


def efficiency_indicators(obj) -> EfficiencyReport:
    """Efficiency indicators, named-design MSEs and a recommendation.

    Accepts a FitResult or a true model.  Ties are broken toward UR, then AT.
    """
    gamma, ar, ref = _gamma_and_ar(obj)
    ck = ck_from_fit(obj)
    if ck.source == "arma":
        sigma2 = _noise_scale(obj, gamma)
        ei_ad = float(np.sum(gamma[1:])) / sigma2
        signs = (-1.0) ** np.arange(1, len(gamma))
        ei_at = float(np.sum(signs * gamma[1:])) / sigma2
        k_factor = sigma2 / (1.0 - ar) ** 2
        ref = {**ref, "sigma2_used": sigma2}
    else:
        v = _sandwich_vector(ar)
        s0 = _noise_scale_multi(obj, gamma)
        k_factor = s0 * float(v @ v)
        ei_ad = float(np.sum(ck.c)) / k_factor
        signs = (-1.0) ** np.arange(1, ck.q + 1)
        ei_at = float(np.sum(signs * ck.c)) / k_factor
        ref = {**ref, "sigma2_used": s0}
    mse = mse_named(ck)
    ref = {**ref, "k_factor": k_factor}

    # the 8K identity ties the indicators to the MSE gaps; enforce it here
    scale = max(1.0, abs(mse["AD"]), abs(mse["UR"]), abs(mse["AT"]))
    if abs((mse["AD"] - mse["UR"]) - 8.0 * k_factor * ei_ad) > 1e-9 * scale or abs(
        (mse["AT"] - mse["UR"]) - 8.0 * k_factor * ei_at
    ) > 1e-9 * scale:
        raise RuntimeError("efficiency-indicator identity violated; inconsistent inputs")

    ranked = sorted(zip((mse["UR"], mse["AT"], mse["AD"]), ("UR", "AT", "AD")),
                    key=lambda t: t[0])
    recommendation = ranked[0][1]
    return EfficiencyReport(
        ei_ad=ei_ad, ei_at=ei_at, mse=mse, recommendation=recommendation, model_ref=ref
    )


def asymptotic_mse(obj, design: DesignSpec) -> float:
    """Asymptotic MSE of sqrt(T) (ate_hat - ATE) under `design`.

    Uses the design's analytic limiting autocovariance rho_U(k); divides by
    (1 - xi^2)^2 for unbalanced designs.
    """
    ck = ck_from_fit(obj)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        x = design.xi()
    if abs(x) >= 1.0 - 1e-12:
        raise ValueError("degenerate design: |xi| = 1 never identifies the ATE")
    acc = ck.c0
    for k in range(1, ck.q + 1):
        acc += 2.0 * design.autocov(k) * ck.c[k - 1]
    return 4.0 * acc / (1.0 - x * x) ** 2
