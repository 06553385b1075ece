"""Controlled (V)ARMA model classes.

The univariate model is

    Y_t = mu + sum_{j=1..p} a_j Y_{t-j} + b U_t + Z_t,
    Z_t = eps_t + sum_{j=1..q} theta_j eps_{t-j},

with a binary treatment U_t in {-1, +1} and iid noise eps_t of variance
sigma2.  The multivariate version replaces a_j by d x d matrices A_j, b by a
vector, theta_j by matrices M_j, and optionally adds a loading matrix C on an
observed exogenous series E_t.  The leading MA coefficients theta_0 = 1 and
M_0 = I are implicit and never stored.

The long-run average treatment effect of always treating (+1) versus never
treating (-1) is

    ATE = 2 b / (1 - sum a_j)            (univariate)
    ATE = 2 e1' (I - sum A_j)^{-1} b     (multivariate, first coordinate),

valid whenever the AR part is stationary, i.e. the roots of
1 - sum a_j y^j lie outside the unit circle.  Stationarity is checked through
the companion matrix: all roots outside the unit circle iff its spectral
radius is below 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.signal

from ._jsonio import dump_json, load_json

# Margin below 1 that the companion spectral radius must clear.  Shared by
# every stationarity check in the package.
EPS_STAB = 1e-9


class UnstableModelError(ValueError):
    """Raised when an operation requires a stationary AR part and lacks one."""


def _as_float_vector(x, name: str) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True, eq=False)
class ArmaModel:
    """Controlled ARMA(p, q) model; orders are implied by coefficient lengths."""

    mu: float
    a: np.ndarray        # (p,) AR coefficients
    b: float             # treatment coefficient
    theta: np.ndarray    # (q,) MA coefficients, theta_0 = 1 implicit
    sigma2: float        # innovation variance

    def __post_init__(self):
        object.__setattr__(self, "a", np.asarray(self.a, dtype=float).reshape(-1))
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=float).reshape(-1))
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        _as_float_vector(self.a, "a")
        _as_float_vector(self.theta, "theta")
        if not np.isfinite(self.mu) or not np.isfinite(self.b):
            raise ValueError("mu and b must be finite")
        if not np.isfinite(self.sigma2) or self.sigma2 <= 0:
            raise ValueError(f"sigma2 must be positive, got {self.sigma2}")

    @property
    def p(self) -> int:
        return self.a.shape[0]

    @property
    def q(self) -> int:
        return self.theta.shape[0]

    @property
    def d(self) -> int:
        return 1

    @property
    def theta_full(self) -> np.ndarray:
        """MA polynomial coefficients including the implicit theta_0 = 1."""
        return np.concatenate(([1.0], self.theta))


@dataclass(frozen=True, eq=False)
class VarmaModel:
    """Controlled VARMA(p, q) model of dimension d, optionally with exogenous loadings."""

    mu: np.ndarray            # (d,)
    A: np.ndarray             # (p, d, d) AR coefficient matrices
    b: np.ndarray             # (d,) treatment coefficients
    M: np.ndarray             # (q, d, d) MA coefficient matrices, M_0 = I implicit
    Sigma: np.ndarray         # (d, d) innovation covariance
    C: np.ndarray | None = None   # (d, m) exogenous loadings

    def __post_init__(self):
        mu = _as_float_vector(self.mu, "mu")
        b = _as_float_vector(self.b, "b")
        d = mu.shape[0]
        A = np.asarray(self.A, dtype=float)
        if A.size == 0:
            A = A.reshape(0, d, d)
        M = np.asarray(self.M, dtype=float)
        if M.size == 0:
            M = M.reshape(0, d, d)
        Sigma = np.asarray(self.Sigma, dtype=float)
        if b.shape != (d,):
            raise ValueError(f"b must have shape ({d},), got {b.shape}")
        if A.ndim != 3 or A.shape[1:] != (d, d):
            raise ValueError(f"A must have shape (p, {d}, {d}), got {A.shape}")
        if M.ndim != 3 or M.shape[1:] != (d, d):
            raise ValueError(f"M must have shape (q, {d}, {d}), got {M.shape}")
        if Sigma.shape != (d, d):
            raise ValueError(f"Sigma must have shape ({d}, {d}), got {Sigma.shape}")
        if not np.all(np.isfinite(A)) or not np.all(np.isfinite(M)) or not np.all(np.isfinite(Sigma)):
            raise ValueError("coefficient arrays contain non-finite entries")
        if np.max(np.abs(Sigma - Sigma.T)) > 1e-8 * max(1.0, np.max(np.abs(Sigma))):
            raise ValueError("Sigma must be symmetric")
        Sigma = 0.5 * (Sigma + Sigma.T)
        if np.min(np.linalg.eigvalsh(Sigma)) < -1e-10:
            raise ValueError("Sigma must be positive semidefinite")
        C = self.C
        if C is not None:
            C = np.asarray(C, dtype=float)
            if C.ndim != 2 or C.shape[0] != d:
                raise ValueError(f"C must have shape ({d}, m), got {C.shape}")
            if not np.all(np.isfinite(C)):
                raise ValueError("C contains non-finite entries")
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "M", M)
        object.__setattr__(self, "Sigma", Sigma)
        object.__setattr__(self, "C", C)

    @property
    def p(self) -> int:
        return self.A.shape[0]

    @property
    def q(self) -> int:
        return self.M.shape[0]

    @property
    def d(self) -> int:
        return self.mu.shape[0]

    @property
    def n_exog(self) -> int:
        return 0 if self.C is None else self.C.shape[1]


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    spectral_radius: float


def companion_matrix(a: np.ndarray) -> np.ndarray:
    """Companion matrix of the AR polynomial 1 - sum a_j y^j (p x p)."""
    a = np.asarray(a, dtype=float).reshape(-1)
    p = a.shape[0]
    if p == 0:
        return np.zeros((0, 0))
    F = np.zeros((p, p))
    F[0, :] = a
    if p > 1:
        F[1:, :-1] = np.eye(p - 1)
    return F


def block_companion_matrix(A: np.ndarray) -> np.ndarray:
    """Block companion matrix of matrix AR coefficients A (p, d, d) -> (pd, pd)."""
    A = np.asarray(A, dtype=float)
    p, d = A.shape[0], A.shape[1]
    if p == 0:
        return np.zeros((0, 0))
    F = np.zeros((p * d, p * d))
    F[:d, :] = np.concatenate(list(A), axis=1)
    if p > 1:
        F[d:, :-d] = np.eye((p - 1) * d)
    return F


def check_no_unit_root(model: ArmaModel | VarmaModel) -> StabilityReport:
    """Check stationarity of the AR part via the companion spectral radius.

    Stable means every root of the AR polynomial lies outside the unit
    circle, equivalently the companion spectral radius is < 1 - EPS_STAB.
    """
    if isinstance(model, ArmaModel):
        F = companion_matrix(model.a)
    else:
        F = block_companion_matrix(model.A)
    if F.shape[0] == 0:
        return StabilityReport(stable=True, spectral_radius=0.0)
    rho = float(np.max(np.abs(np.linalg.eigvals(F))))
    return StabilityReport(stable=rho < 1.0 - EPS_STAB, spectral_radius=rho)


def true_ate(model: ArmaModel | VarmaModel) -> float:
    """Long-run ATE of always treating versus never treating (first coordinate).

    Requires a stationary AR part; raises UnstableModelError otherwise.
    """
    rep = check_no_unit_root(model)
    if not rep.stable:
        raise UnstableModelError(
            f"AR part has companion spectral radius {rep.spectral_radius:.6g} "
            ">= 1; the long-run ATE is undefined at a unit root"
        )
    if isinstance(model, ArmaModel):
        return 2.0 * model.b / (1.0 - float(np.sum(model.a)))
    Abar = model.A.sum(axis=0) if model.p else np.zeros((model.d, model.d))
    x = np.linalg.solve(np.eye(model.d) - Abar, model.b)
    return float(2.0 * x[0])


def _emission_offset(model: ArmaModel) -> float:
    """Stationary mean mu / (1 - sum a_j); the intercept reattached at emission."""
    if model.mu == 0.0:
        return 0.0
    den = 1.0 - float(np.sum(model.a))
    if abs(den) <= EPS_STAB:
        raise UnstableModelError("intercept has no stationary mean: sum(a) == 1")
    return model.mu / den


@dataclass(frozen=True, eq=False)
class StateSpaceForm:
    """Noise-free-observation state-space form of a controlled ARMA model.

    Transition  X_t = F X_{t-1} + B_u U_{t-1} + noise_col * eps_t
    Emission    Y_t = H X_t + C_u U_t + emission_offset

    The latent dimension is d_s = max(p, q+1).  The series is centered: the
    intercept is dropped from the transition and reattached at emission as
    the stationary mean.
    """

    F: np.ndarray              # (d_s, d_s)
    B_u: np.ndarray            # (d_s,)
    H: np.ndarray              # (d_s,)
    C_u: float
    noise_col: np.ndarray      # (d_s,)
    emission_offset: float

    @property
    def d_s(self) -> int:
        return self.F.shape[0]

    def simulate(self, eps: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Run the recursion from a zero initial state on given streams."""
        eps = np.asarray(eps, dtype=float)
        u = np.asarray(u, dtype=float)
        if eps.shape != u.shape:
            raise ValueError("eps and u must have equal length")
        n = eps.shape[0]
        x = np.zeros(self.d_s)
        y = np.empty(n)
        u_prev = 0.0
        for t in range(n):
            x = self.F @ x + self.B_u * u_prev + self.noise_col * eps[t]
            y[t] = self.H @ x + self.C_u * u[t] + self.emission_offset
            u_prev = u[t]
        return y


def to_state_space(model: ArmaModel) -> StateSpaceForm:
    """Exact state-space form with latent dimension max(p, q+1).

    Zero-pads a and theta to the latent dimension; the treatment enters the
    transition through B_u = b * (a_1, ..., a_{d_s}) and the emission
    directly through C_u = b, so simulating this form on shared (eps, u)
    streams reproduces the ARMA recursion sample-for-sample.
    """
    ds = max(model.p, model.q + 1)
    a_pad = np.zeros(ds)
    a_pad[: model.p] = model.a
    theta_pad = np.zeros(ds)
    theta_pad[0] = 1.0
    theta_pad[1 : model.q + 1] = model.theta
    F = np.zeros((ds, ds))
    F[:, 0] = a_pad
    if ds > 1:
        F[:-1, 1:] = np.eye(ds - 1)
    H = np.zeros(ds)
    H[0] = 1.0
    return StateSpaceForm(
        F=F,
        B_u=model.b * a_pad,
        H=H,
        C_u=model.b,
        noise_col=theta_pad,
        emission_offset=_emission_offset(model),
    )


def arma_filter(model: ArmaModel, eps: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Exact controlled-ARMA recursion on given noise and treatment streams.

    The centered series starts from zero pre-history; the intercept is added
    back as the stationary mean.  This is the reference recursion that the
    state-space form must reproduce.
    """
    eps = np.asarray(eps, dtype=float)
    u = np.asarray(u, dtype=float)
    if eps.shape != u.shape:
        raise ValueError("eps and u must have equal length")
    x = model.b * u + scipy.signal.lfilter(model.theta_full, [1.0], eps)
    ar_poly = np.concatenate(([1.0], -model.a))
    y = scipy.signal.lfilter([1.0], ar_poly, x)
    return y + _emission_offset(model)


def _varma_offset(model: VarmaModel) -> np.ndarray:
    if not np.any(model.mu):
        return np.zeros(model.d)
    Abar = model.A.sum(axis=0) if model.p else np.zeros((model.d, model.d))
    try:
        return np.linalg.solve(np.eye(model.d) - Abar, model.mu)
    except np.linalg.LinAlgError as exc:
        raise UnstableModelError("intercept has no stationary mean: I - sum(A) singular") from exc


def varma_filter(
    model: VarmaModel,
    eps: np.ndarray,
    u: np.ndarray,
    exog: np.ndarray | None = None,
) -> np.ndarray:
    """Exact controlled-VARMA recursion on given streams; returns (T, d)."""
    eps = np.asarray(eps, dtype=float)
    u = np.asarray(u, dtype=float)
    n, d = eps.shape
    if d != model.d:
        raise ValueError(f"eps must have {model.d} columns, got {d}")
    if u.shape != (n,):
        raise ValueError("u must be one-dimensional with the same length as eps")
    # MA part is a finite convolution, vectorised over t.
    z = eps.copy()
    for j in range(1, model.q + 1):
        z[j:] += eps[:-j] @ model.M[j - 1].T
    rhs = z + np.outer(u, model.b)
    if model.C is not None:
        if exog is None:
            raise ValueError("model has exogenous loadings C but no exog series given")
        exog = np.asarray(exog, dtype=float)
        if exog.shape != (n, model.C.shape[1]):
            raise ValueError(f"exog must have shape ({n}, {model.C.shape[1]})")
        rhs = rhs + exog @ model.C.T
    y = np.zeros((n, d))
    p = model.p
    for t in range(n):
        acc = rhs[t].copy()
        for j in range(1, min(p, t) + 1):
            acc += model.A[j - 1] @ y[t - j]
        y[t] = acc
    return y + _varma_offset(model)


def noise_autocov(model: ArmaModel | VarmaModel) -> np.ndarray:
    """Autocovariances gamma_Z(0..q) of the MA noise part.

    Univariate: gamma_Z(k) = sigma2 * sum_{j=k..q} theta_j theta_{j-k} with
    theta_0 = 1, returned as shape (q+1,).  Multivariate:
    Gamma_Z(k) = sum_{j=k..q} M_j Sigma M_{j-k}', returned as (q+1, d, d).
    """
    if isinstance(model, ArmaModel):
        th = model.theta_full
        q = model.q
        return np.array(
            [model.sigma2 * float(th[k:] @ th[: q + 1 - k]) for k in range(q + 1)]
        )
    d, q = model.d, model.q
    Mfull = np.concatenate((np.eye(d)[None, :, :], model.M), axis=0)
    out = np.zeros((q + 1, d, d))
    for k in range(q + 1):
        for j in range(k, q + 1):
            out[k] += Mfull[j] @ model.Sigma @ Mfull[j - k].T
    return out


# ---------------------------------------------------------------------------
# JSON serialization


def model_to_dict(model: ArmaModel | VarmaModel) -> dict:
    if isinstance(model, ArmaModel):
        return {
            "kind": "arma",
            "p": model.p,
            "q": model.q,
            "mu": model.mu,
            "a": model.a,
            "b": model.b,
            "theta": model.theta,
            "sigma2": model.sigma2,
        }
    out = {
        "kind": "varma",
        "p": model.p,
        "q": model.q,
        "d": model.d,
        "mu": model.mu,
        "A": model.A,
        "b": model.b,
        "M": model.M,
        "Sigma": model.Sigma,
    }
    if model.C is not None:
        out["C"] = model.C
    return out


def model_from_dict(obj: dict) -> ArmaModel | VarmaModel:
    try:
        kind = obj["kind"]
    except KeyError:
        raise ValueError("model JSON lacks a 'kind' field") from None
    if kind == "arma":
        model = ArmaModel(
            mu=obj.get("mu", 0.0),
            a=np.asarray(obj.get("a", []), dtype=float),
            b=obj["b"],
            theta=np.asarray(obj.get("theta", []), dtype=float),
            sigma2=obj.get("sigma2", 1.0),
        )
    elif kind == "varma":
        d = int(obj["d"])
        model = VarmaModel(
            mu=np.asarray(obj.get("mu", np.zeros(d)), dtype=float),
            A=np.asarray(obj.get("A", np.zeros((0, d, d))), dtype=float),
            b=np.asarray(obj["b"], dtype=float),
            M=np.asarray(obj.get("M", np.zeros((0, d, d))), dtype=float),
            Sigma=np.asarray(obj.get("Sigma", np.eye(d)), dtype=float),
            C=None if obj.get("C") is None else np.asarray(obj["C"], dtype=float),
        )
    else:
        raise ValueError(f"unknown model kind {kind!r}")
    for order in ("p", "q"):
        if order in obj and int(obj[order]) != getattr(model, order):
            raise ValueError(
                f"declared {order}={obj[order]} does not match coefficient "
                f"length {getattr(model, order)}"
            )
    return model


def save_model(model: ArmaModel | VarmaModel, path) -> None:
    dump_json(model_to_dict(model), path)


def load_model(path) -> ArmaModel | VarmaModel:
    return model_from_dict(load_json(path))
