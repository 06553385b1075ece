"""Moment-based estimation of controlled (V)ARMA models.

Ordinary least squares of Y_t on its lags and U_t is inconsistent here: the
MA-part residual Z_t is correlated with the lagged outcomes.  The estimator
instead matches moments against instruments that are uncorrelated with Z_t by
construction -- the constant, the current treatment U_t, and outcomes lagged
beyond the MA window, Y_{t-q-1}, ..., Y_{t-q-p}:

    E[Y_t w_t'] = Theta E[x_t w_t'],   x_t = (1, Y_{t-1..t-p}, U_t, E_t),
                                       w_t = (1, Y_{t-q-1..t-q-p}, U_t, E_t).

Sample moments run over t = p+q+1, ..., T, and the linear system is solved
directly; a condition number above 1e12 is reported as "design not
identifying" along with the (near-)collinear moment rows.  The ATE estimate
is read off the fitted coefficients as 2 b_hat / (1 - sum a_hat) (univariate)
or 2 e1'(I - sum A_hat)^{-1} b_hat (multivariate).

The residual autocovariances gamma_z(0..q) feed everything downstream
(efficiency indicators, asymptotic MSEs, design optimisation).  A separate MA
stage recovers (theta, sigma2) or (M, Sigma) from those autocovariances with
the innovations algorithm when an explicit noise model is needed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import lfilter
import scipy.linalg

from ._jsonio import dump_json, load_json
from .models import EPS_STAB, UnstableModelError, block_companion_matrix, companion_matrix

COND_MAX = 1e12


class NotIdentifiableError(ValueError):
    """Moment system too ill-conditioned to identify the model."""

    def __init__(self, message: str, collinear_rows=()):
        super().__init__(message)
        self.collinear_rows = tuple(collinear_rows)


class NotRealizableError(ValueError):
    """Autocovariances admit no MA(q) representation."""

    def __init__(self, message: str, lag: int | None = None):
        super().__init__(message)
        self.lag = lag


@dataclass(frozen=True, eq=False)
class PanelData:
    """An experiment panel: outcomes Y (T x d), treatments U, optional exogenous E."""

    Y: np.ndarray
    U: np.ndarray
    E: np.ndarray | None = None
    dt_label: str = ""

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.ndim != 2 or Y.shape[0] < 1:
            raise ValueError(f"Y must be a (T, d) array, got shape {Y.shape}")
        U = np.asarray(self.U)
        if U.shape != (Y.shape[0],):
            raise ValueError("U must be one-dimensional with the same length as Y")
        if not np.all(np.isin(U, (-1, 1))):
            raise ValueError("U entries must be -1 or +1")
        if not np.all(np.isfinite(Y)):
            raise ValueError("Y contains non-finite entries")
        E = self.E
        if E is not None:
            E = np.asarray(E, dtype=float)
            if E.ndim == 1:
                E = E[:, None]
            if E.shape[0] != Y.shape[0]:
                raise ValueError("E must have the same length as Y")
            if not np.all(np.isfinite(E)):
                raise ValueError("E contains non-finite entries")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "U", np.asarray(U, dtype=np.int64))
        object.__setattr__(self, "E", E)

    @property
    def T(self) -> int:
        return self.Y.shape[0]

    @property
    def d(self) -> int:
        return self.Y.shape[1]

    @property
    def n_exog(self) -> int:
        return 0 if self.E is None else self.E.shape[1]


@dataclass(frozen=True, eq=False)
class FitResult:
    """Output of the moment fit.

    Shapes depend on `kind`: for "arma", mu_hat and b_hat are floats, ar_hat
    is (p,) and gamma_z is (q+1,); for "varma", mu_hat and b_hat are (d,),
    ar_hat is (p, d, d), gamma_z is (q+1, d, d) and c_hat (d, m) holds the
    exogenous loadings.  The MA-stage fields ma_hat / noise_cov_hat are None
    until attach_ma_stage fills them from the innovations algorithm.
    """

    kind: str
    p: int
    q: int
    d: int
    mu_hat: float | np.ndarray
    ar_hat: np.ndarray
    b_hat: float | np.ndarray
    ate_hat: float
    gamma_z: np.ndarray
    n_used: int
    cond: float
    ar_stable: bool
    c_hat: np.ndarray | None = None
    ma_hat: np.ndarray | None = None
    noise_cov_hat: float | np.ndarray | None = None
    residuals: np.ndarray | None = None   # in-memory only, aligned at resid_start
    resid_start: int = 0

    @property
    def a_sum(self) -> float | np.ndarray:
        if self.kind == "arma":
            return float(np.sum(self.ar_hat))
        return self.ar_hat.sum(axis=0) if self.p else np.zeros((self.d, self.d))


def _check_condition(G: np.ndarray, row_labels) -> float:
    cond = float(np.linalg.cond(G))
    if np.isfinite(cond) and cond <= COND_MAX:
        return cond
    # Identify which moment rows are (near-)collinear via pivoted QR of G'.
    _, R, piv = scipy.linalg.qr(G.T, pivoting=True)
    diag = np.abs(np.diag(R))
    scale = diag[0] if diag.size and diag[0] > 0 else 1.0
    bad = [row_labels[piv[i]] for i in range(len(diag)) if diag[i] <= 1e-12 * scale]
    if not bad and len(diag):
        bad = [row_labels[piv[-1]]]
    raise NotIdentifiableError(
        f"design not identifying: moment matrix condition number {cond:.3g} "
        f"exceeds {COND_MAX:.0e}; near-collinear moment rows: {', '.join(bad)}",
        collinear_rows=bad,
    )


def _qr_solve(G: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """Solve G x = rhs through QR with column pivoting."""
    Q, R, piv = scipy.linalg.qr(G, pivoting=True)
    z = scipy.linalg.solve_triangular(R, Q.T @ rhs)
    x = np.empty_like(z)
    x[piv] = z
    return x


def fit_arma_yw(panel: PanelData, p: int, q: int) -> FitResult:
    """Fit a controlled ARMA(p, q) by instrumented moment matching.

    Returns the AR+control stage: coefficient estimates, the implied ATE and
    the residual autocovariances gamma_z(0..q).  Use attach_ma_stage for
    (theta_hat, sigma2_hat).
    """
    if panel.d != 1:
        raise ValueError(f"fit_arma_yw requires a univariate panel, got d={panel.d}")
    if panel.E is not None:
        raise ValueError("fit_arma_yw does not support exogenous columns; use fit_varma_yw")
    if p < 0 or q < 0:
        raise ValueError("orders p, q must be nonnegative")
    y = panel.Y[:, 0]
    u = panel.U.astype(float)
    T = panel.T
    start = p + q
    n = T - start
    k = p + 2
    if n < k:
        raise NotIdentifiableError(
            f"panel too short: {n} usable observations for {k} moment equations"
        )
    ts = np.arange(start, T)
    X = np.empty((n, k))
    X[:, 0] = 1.0
    for j in range(1, p + 1):
        X[:, j] = y[ts - j]
    X[:, p + 1] = u[ts]
    W = np.empty((n, k))
    W[:, 0] = 1.0
    for i in range(1, p + 1):
        W[:, i] = y[ts - q - i]
    W[:, p + 1] = u[ts]

    G = W.T @ X / n
    g = W.T @ y[ts] / n
    labels = ["1"] + [f"y[t-{q + i}]" for i in range(1, p + 1)] + ["u[t]"]
    cond = _check_condition(G, labels)
    beta = _qr_solve(G, g)
    mu_hat = float(beta[0])
    a_hat = beta[1 : p + 1].copy()
    b_hat = float(beta[p + 1])

    resid = y[ts] - X @ beta
    gamma_z = np.array([resid[j:] @ resid[: n - j] / n for j in range(q + 1)])

    a_sum = float(np.sum(a_hat))
    den = 1.0 - a_sum
    ate_hat = math.nan if abs(den) <= EPS_STAB else 2.0 * b_hat / den
    rho = (
        float(np.max(np.abs(np.linalg.eigvals(companion_matrix(a_hat))))) if p else 0.0
    )
    return FitResult(
        kind="arma",
        p=p,
        q=q,
        d=1,
        mu_hat=mu_hat,
        ar_hat=a_hat,
        b_hat=b_hat,
        ate_hat=ate_hat,
        gamma_z=gamma_z,
        n_used=n,
        cond=cond,
        ar_stable=rho < 1.0 - EPS_STAB,
        residuals=resid,
        resid_start=start,
    )


def fit_varma_yw(panel: PanelData, p: int, q: int) -> FitResult:
    """Fit a controlled VARMA(p, q), optionally with exogenous columns.

    Vectorised version of the same instrumented moment system; instruments
    are (1, Y_{t-q-1..t-q-p}, U_t, E_t).  Reduces to fit_arma_yw when d = 1
    and no exogenous columns are present.
    """
    if p < 0 or q < 0:
        raise ValueError("orders p, q must be nonnegative")
    Y = panel.Y
    u = panel.U.astype(float)
    d = panel.d
    m = panel.n_exog
    T = panel.T
    start = p + q
    n = T - start
    K = 1 + p * d + 1 + m
    if n < K:
        raise NotIdentifiableError(
            f"panel too short: {n} usable observations for {K} moment equations"
        )
    ts = np.arange(start, T)
    X = np.empty((n, K))
    X[:, 0] = 1.0
    for j in range(1, p + 1):
        X[:, 1 + (j - 1) * d : 1 + j * d] = Y[ts - j]
    X[:, 1 + p * d] = u[ts]
    W = np.empty((n, K))
    W[:, 0] = 1.0
    for i in range(1, p + 1):
        W[:, 1 + (i - 1) * d : 1 + i * d] = Y[ts - q - i]
    W[:, 1 + p * d] = u[ts]
    if m:
        X[:, 2 + p * d :] = panel.E[ts]
        W[:, 2 + p * d :] = panel.E[ts]

    G = W.T @ X / n
    g = W.T @ Y[ts] / n
    labels = ["1"]
    for i in range(1, p + 1):
        labels += [f"y{r + 1}[t-{q + i}]" for r in range(d)]
    labels += ["u[t]"]
    labels += [f"e{r + 1}[t]" for r in range(m)]
    cond = _check_condition(G, labels)
    Theta = _qr_solve(G, g).T  # (d, K)

    mu_hat = Theta[:, 0].copy()
    A_hat = np.empty((p, d, d))
    for j in range(1, p + 1):
        A_hat[j - 1] = Theta[:, 1 + (j - 1) * d : 1 + j * d]
    b_hat = Theta[:, 1 + p * d].copy()
    c_hat = Theta[:, 2 + p * d :].copy() if m else None

    resid = Y[ts] - X @ Theta.T
    gamma_z = np.empty((q + 1, d, d))
    for j in range(q + 1):
        gamma_z[j] = resid[j:].T @ resid[: n - j] / n
    gamma_z[0] = 0.5 * (gamma_z[0] + gamma_z[0].T)

    Abar = A_hat.sum(axis=0) if p else np.zeros((d, d))
    IA = np.eye(d) - Abar
    if np.linalg.cond(IA) > COND_MAX:
        ate_hat = math.nan
    else:
        ate_hat = float(2.0 * np.linalg.solve(IA, b_hat)[0])
    rho = (
        float(np.max(np.abs(np.linalg.eigvals(block_companion_matrix(A_hat)))))
        if p
        else 0.0
    )
    return FitResult(
        kind="varma",
        p=p,
        q=q,
        d=d,
        mu_hat=mu_hat,
        ar_hat=A_hat,
        b_hat=b_hat,
        ate_hat=ate_hat,
        gamma_z=gamma_z,
        n_used=n,
        cond=cond,
        ar_stable=rho < 1.0 - EPS_STAB,
        c_hat=c_hat,
        residuals=resid,
        resid_start=start,
    )


def estimate_ate(fit: FitResult, allow_unstable: bool = False) -> float:
    """ATE implied by a fit: 2 b_hat / (1 - sum a_hat), vector analogue for VARMA.

    Raises UnstableModelError at a (near-)unit root, or when the fitted AR
    part is non-stationary and `allow_unstable` is not set.
    """
    if fit.kind == "arma":
        den = 1.0 - float(np.sum(fit.ar_hat))
        if abs(den) <= EPS_STAB:
            raise UnstableModelError(
                "fitted AR coefficients sum to 1 within tolerance; "
                "the implied ATE is unbounded (unit root)"
            )
        value = 2.0 * float(fit.b_hat) / den
    else:
        IA = np.eye(fit.d) - fit.a_sum
        if np.linalg.cond(IA) > COND_MAX:
            raise UnstableModelError(
                "I - sum(A_hat) is numerically singular; the implied ATE is unbounded"
            )
        value = float(2.0 * np.linalg.solve(IA, fit.b_hat)[0])
    if not fit.ar_stable and not allow_unstable:
        raise UnstableModelError(
            "fitted AR part is non-stationary; pass allow_unstable=True to "
            "read off the ATE anyway"
        )
    return value


# ---------------------------------------------------------------------------
# MA stage: innovations algorithm on residual autocovariances


def _innovations_univariate(gamma: np.ndarray, n_steps: int):
    """Innovations recursion on autocovariances (gamma_k = 0 beyond the array).

    Returns (thetas, v) where thetas[n-1] holds (theta_{n,1..n}) and v[n] is
    the one-step prediction error variance after n observations.
    """
    gam = lambda k: gamma[k] if k < len(gamma) else 0.0
    v = np.empty(n_steps + 1)
    v[0] = gamma[0]
    thetas = []
    for nn in range(1, n_steps + 1):
        th = np.zeros(nn)  # th[j-1] = theta_{nn, j}
        for k in range(nn):
            acc = gam(nn - k)
            for j in range(k):
                acc -= thetas[k - 1][k - j - 1] * th[nn - j - 1] * v[j]
            if v[k] <= 0:
                raise NotRealizableError(
                    f"innovations variance v_{k} <= 0; autocovariances are not "
                    "a valid MA covariance sequence",
                    lag=k,
                )
            th[nn - k - 1] = acc / v[k]
        v[nn] = gamma[0] - np.sum(th**2 * v[nn - 1 :: -1][: nn])
        thetas.append(th)
    return thetas, v


def _spectral_check_univariate(gamma: np.ndarray, q: int):
    grid = np.linspace(0.0, np.pi, 4096)
    f = np.full_like(grid, gamma[0])
    for k in range(1, q + 1):
        f += 2.0 * gamma[k] * np.cos(k * grid)
    i_min = int(np.argmin(f))
    f_min = float(f[i_min])
    if f_min < -1e-10 * max(abs(gamma[0]), 1.0):
        w = float(grid[i_min])
        contrib = [abs(2.0 * gamma[k] * np.cos(k * w)) for k in range(1, q + 1)]
        k_star = 1 + int(np.argmax(contrib)) if contrib else 0
        raise NotRealizableError(
            f"autocovariances are not realizable by an MA({q}): spectral "
            f"density reaches {f_min:.4g} at omega={w:.4f}; lag {k_star} is "
            f"the dominant violation (|gamma[{k_star}]|/gamma[0] = "
            f"{abs(gamma[k_star]) / gamma[0]:.4g})",
            lag=k_star,
        )


def fit_ma_innovations(gamma, q: int, n_iter: int | None = None):
    """Recover MA(q) coefficients from autocovariances gamma(0..q).

    Univariate input (q+1,) returns (theta (q,), sigma2).  Multivariate input
    (q+1, d, d) returns (M (q, d, d), Sigma).  Raises NotRealizableError when
    no MA(q) has these autocovariances (e.g. |gamma_1/gamma_0| > 1/2 for
    q = 1).
    """
    gamma = np.asarray(gamma, dtype=float)
    if n_iter is None:
        n_iter = max(200, 40 * (q + 1))
    if gamma.ndim == 1:
        if gamma.shape[0] < q + 1:
            raise ValueError(f"need gamma at lags 0..{q}, got {gamma.shape[0]} values")
        if gamma[0] <= 0:
            raise NotRealizableError("gamma[0] must be positive", lag=0)
        if q == 0:
            return np.zeros(0), float(gamma[0])
        _spectral_check_univariate(gamma, q)
        thetas, v = _innovations_univariate(gamma[: q + 1], n_iter)
        theta = thetas[-1][:q].copy()
        return theta, float(v[-1])

    if gamma.ndim != 3 or gamma.shape[1] != gamma.shape[2]:
        raise ValueError("gamma must have shape (q+1,) or (q+1, d, d)")
    if gamma.shape[0] < q + 1:
        raise ValueError(f"need Gamma at lags 0..{q}, got {gamma.shape[0]} matrices")
    d = gamma.shape[1]
    if d == 1:  # one channel: the scalar recursion is the same model, much faster
        theta, s2 = fit_ma_innovations(gamma[:, 0, 0], q, n_iter)
        return theta.reshape(q, 1, 1), np.array([[s2]])
    if q == 0:
        Sig = 0.5 * (gamma[0] + gamma[0].T)
        if np.min(np.linalg.eigvalsh(Sig)) < -1e-10:
            raise NotRealizableError("Gamma(0) is not positive semidefinite", lag=0)
        return np.zeros((0, d, d)), Sig

    # spectral density matrix must be PSD on a frequency grid
    grid = np.linspace(0.0, np.pi, 1024)
    scale = max(float(np.max(np.abs(gamma[0]))), 1.0)
    for w in grid:
        f = gamma[0].astype(complex).copy()
        for k in range(1, q + 1):
            f += gamma[k] * np.exp(-1j * k * w) + gamma[k].T * np.exp(1j * k * w)
        lam = float(np.min(np.linalg.eigvalsh(0.5 * (f + f.conj().T))))
        if lam < -1e-8 * scale:
            k_star = int(np.argmax([np.max(np.abs(gamma[k])) for k in range(1, q + 1)])) + 1
            raise NotRealizableError(
                f"autocovariance matrices are not realizable by an MA({q}): "
                f"spectral density eigenvalue {lam:.4g} at omega={w:.4f}",
                lag=k_star,
            )

    Gam = lambda k: gamma[k] if k < q + 1 else np.zeros((d, d))
    V = [0.5 * (gamma[0] + gamma[0].T)]
    Thetas = []
    for nn in range(1, n_iter + 1):
        Th = [np.zeros((d, d)) for _ in range(nn)]  # Th[j-1] = Theta_{nn, j}
        for k in range(nn):
            Acc = Gam(nn - k).copy()
            for j in range(k):
                Acc -= Th[nn - j - 1] @ V[j] @ Thetas[k - 1][k - j - 1].T
            try:
                Th[nn - k - 1] = np.linalg.solve(V[k].T, Acc.T).T
            except np.linalg.LinAlgError as exc:
                raise NotRealizableError(
                    f"innovations covariance V_{k} is singular; autocovariances "
                    "are not a valid MA covariance sequence",
                    lag=k,
                ) from exc
        Vn = gamma[0].copy()
        for j in range(nn):
            Vn -= Th[nn - j - 1] @ V[j] @ Th[nn - j - 1].T
        V.append(0.5 * (Vn + Vn.T))
        Thetas.append(Th)
    M = np.stack(Thetas[-1][:q])
    return M, V[-1]


def attach_ma_stage(fit: FitResult, n_iter: int | None = None) -> FitResult:
    """Return a copy of `fit` with ma_hat / noise_cov_hat filled in."""
    ma, cov = fit_ma_innovations(fit.gamma_z, fit.q, n_iter=n_iter)
    return replace(fit, ma_hat=ma, noise_cov_hat=cov)


# ---------------------------------------------------------------------------
# Order selection


@dataclass(frozen=True)
class OrderSelection:
    p: int
    q: int
    criterion: str
    scores: np.ndarray  # (p_max+1, q_max+1); +inf marks failed cells


def _css_log_variance(fit: FitResult, q: int) -> float:
    """Conditional-sum-of-squares quasi-likelihood proxy for one (p, q) cell.

    Inverts the fitted MA(q) on the cell's own in-sample residual series, so
    every cell is scored on the same data realization and the information
    criteria compare systematic fit quality rather than independent sampling
    noise in per-cell variance estimates.  Univariate -> log sigma2_hat;
    multivariate -> log det Sigma_hat.
    """
    z = np.asarray(fit.residuals, dtype=float)
    if z.ndim == 1:
        if q == 0:
            eps = z
        else:
            theta, _ = fit_ma_innovations(fit.gamma_z, q)
            eps = lfilter([1.0], np.concatenate(([1.0], theta)), z)
        v = float(np.mean(eps * eps))
        if v <= 0:
            raise NotRealizableError("nonpositive innovation variance", lag=q)
        return math.log(v)
    n, d = z.shape
    if q == 0:
        eps = z
    else:
        ma, _ = fit_ma_innovations(fit.gamma_z, q)
        eps = np.zeros_like(z)
        for t in range(n):
            acc = z[t].copy()
            for j in range(1, min(q, t) + 1):
                acc -= ma[j - 1] @ eps[t - j]
            eps[t] = acc
    cov = (eps.T @ eps) / eps.shape[0]
    sign, logdet = np.linalg.slogdet(cov)
    if sign <= 0:
        raise NotRealizableError("nonpositive innovation covariance", lag=q)
    return float(logdet)


def select_order(
    panel: PanelData,
    p_max: int = 3,
    q_max: int = 3,
    criterion: str = "aic",
) -> OrderSelection:
    """Pick (p, q) over a grid by quasi-likelihood information criteria.

    For each cell the model is fitted by the moment method; the Gaussian
    quasi-likelihood uses the innovation variance of the MA(q) model implied
    by the residual autocovariances.  The parameter count is p + q + 2 for
    ARMA (plus exogenous terms), scaled by the dimension for VARMA.
    """
    if criterion not in ("aic", "bic"):
        raise ValueError(f"criterion must be 'aic' or 'bic', got {criterion!r}")
    multivariate = panel.d > 1 or panel.E is not None
    scores = np.full((p_max + 1, q_max + 1), np.inf)
    for p in range(p_max + 1):
        for q in range(q_max + 1):
            try:
                if multivariate:
                    fit = fit_varma_yw(panel, p, q)
                else:
                    fit = fit_arma_yw(panel, p, q)
                logv = _css_log_variance(fit, q)
            except (NotIdentifiableError, NotRealizableError, np.linalg.LinAlgError):
                continue
            n = fit.n_used
            d = panel.d
            m = panel.n_exog
            if multivariate:
                k_params = d * d * (p + q) + 2 * d + d * m
            else:
                k_params = p + q + 2 + m
            penalty = 2.0 * k_params if criterion == "aic" else math.log(n) * k_params
            scores[p, q] = n * logv + penalty
    if not np.any(np.isfinite(scores)):
        raise NotIdentifiableError("order selection failed for every (p, q) cell")
    p_best, q_best = np.unravel_index(int(np.argmin(scores)), scores.shape)
    return OrderSelection(p=int(p_best), q=int(q_best), criterion=criterion, scores=scores)


def instrument_orthogonality(fit: FitResult, panel: PanelData) -> np.ndarray:
    """|corr(residual, instrument lag)| for each instrument lag j = 1..p.

    Consistent fits drive these to zero; the multivariate case reports the
    largest absolute correlation across coordinate pairs.
    """
    if fit.residuals is None:
        raise ValueError("fit carries no residuals (was it deserialized?)")
    resid = np.atleast_2d(fit.residuals.T).T  # (n, d)
    ts = np.arange(fit.resid_start, panel.T)
    out = np.zeros(fit.p)
    for j in range(1, fit.p + 1):
        instr = panel.Y[ts - fit.q - j]
        cmax = 0.0
        for rcol in range(resid.shape[1]):
            for icol in range(instr.shape[1]):
                c = np.corrcoef(resid[:, rcol], instr[:, icol])[0, 1]
                cmax = max(cmax, abs(float(c)))
        out[j - 1] = cmax
    return out


# ---------------------------------------------------------------------------
# Panel CSV and FitResult JSON


def save_panel_csv(panel: PanelData, path) -> None:
    """Write the panel as CSV with header y1..yd,u[,e1..em]."""
    d, m = panel.d, panel.n_exog
    header = [f"y{i + 1}" for i in range(d)] + ["u"] + [f"e{i + 1}" for i in range(m)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for t in range(panel.T):
            row = [f"{v:.17g}" for v in panel.Y[t]]
            row.append(str(int(panel.U[t])))
            if m:
                row += [f"{v:.17g}" for v in panel.E[t]]
            writer.writerow(row)


def load_panel_csv(path, dt_label: str = "") -> PanelData:
    """Read a panel CSV; the header must be y1..yd,u[,e1..em] in order."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        rows = [r for r in reader if r]
    n_cols = len(header)
    try:
        u_pos = header.index("u")
    except ValueError:
        raise ValueError(
            f"{path}: malformed header {header!r}; expected y1..yd,u[,e1..em]"
        ) from None
    d = u_pos
    m = n_cols - u_pos - 1
    expected = [f"y{i + 1}" for i in range(d)] + ["u"] + [f"e{i + 1}" for i in range(m)]
    if d < 1 or header != expected:
        raise ValueError(
            f"{path}: malformed header {header!r}; expected y1..yd,u[,e1..em]"
        )
    try:
        data = np.array([[float(v) for v in r] for r in rows])
    except ValueError as exc:
        raise ValueError(f"{path}: non-numeric value in data rows: {exc}") from None
    if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] != n_cols:
        raise ValueError(f"{path}: ragged or empty data rows")
    Y = data[:, :d]
    U = data[:, d]
    if not np.all(np.isin(U, (-1.0, 1.0))):
        raise ValueError(f"{path}: u column must contain only -1 and 1")
    E = data[:, d + 1 :] if m else None
    return PanelData(Y=Y, U=U.astype(np.int64), E=E, dt_label=dt_label)


def _none_if_nan(x: float):
    return None if (isinstance(x, float) and math.isnan(x)) else x


def fit_to_dict(fit: FitResult) -> dict:
    out = {
        "kind": fit.kind,
        "p": fit.p,
        "q": fit.q,
        "d": fit.d,
        "mu_hat": fit.mu_hat,
        "ar_hat": fit.ar_hat,
        "b_hat": fit.b_hat,
        "ate_hat": _none_if_nan(fit.ate_hat),
        "gamma_z": fit.gamma_z,
        "n_used": fit.n_used,
        "cond": fit.cond,
        "ar_stable": fit.ar_stable,
        "c_hat": fit.c_hat,
        "ma_hat": fit.ma_hat,
        "noise_cov_hat": fit.noise_cov_hat,
    }
    return out


def fit_from_dict(obj: dict) -> FitResult:
    kind = obj.get("kind")
    if kind not in ("arma", "varma"):
        raise ValueError(f"fit JSON has unknown kind {obj.get('kind')!r}")
    p, q, d = int(obj["p"]), int(obj["q"]), int(obj["d"])
    arr = lambda x: None if x is None else np.asarray(x, dtype=float)
    if kind == "arma":
        mu, b = float(obj["mu_hat"]), float(obj["b_hat"])
        ar = arr(obj["ar_hat"]).reshape(p)
        gamma = arr(obj["gamma_z"]).reshape(q + 1)
        ma = None if obj.get("ma_hat") is None else arr(obj["ma_hat"]).reshape(q)
        ncov = obj.get("noise_cov_hat")
        ncov = None if ncov is None else float(ncov)
    else:
        mu, b = arr(obj["mu_hat"]).reshape(d), arr(obj["b_hat"]).reshape(d)
        ar = arr(obj["ar_hat"]).reshape(p, d, d)
        gamma = arr(obj["gamma_z"]).reshape(q + 1, d, d)
        ma = None if obj.get("ma_hat") is None else arr(obj["ma_hat"]).reshape(q, d, d)
        ncov = obj.get("noise_cov_hat")
        ncov = None if ncov is None else arr(ncov).reshape(d, d)
    ate = obj.get("ate_hat")
    return FitResult(
        kind=kind,
        p=p,
        q=q,
        d=d,
        mu_hat=mu,
        ar_hat=ar,
        b_hat=b,
        ate_hat=math.nan if ate is None else float(ate),
        gamma_z=gamma,
        n_used=int(obj["n_used"]),
        cond=float(obj.get("cond", 1.0)),
        ar_stable=bool(obj.get("ar_stable", True)),
        c_hat=arr(obj.get("c_hat")),
        ma_hat=ma,
        noise_cov_hat=ncov,
    )


def save_fit(fit: FitResult, path) -> None:
    dump_json(fit_to_dict(fit), path)


def load_fit(path) -> FitResult:
    return fit_from_dict(load_json(path))
