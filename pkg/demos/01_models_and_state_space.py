"""Models: containers, stability, treatment effects, and the state-space form.

The outcome of an A/B test with carryover is modeled as a controlled ARMA
process: today's metric depends on its own recent past (AR part), on serially
correlated shocks (MA part), and on the treatment switch U_t in {-1, +1}.
This demo builds univariate and multivariate models, checks stationarity,
reads off the long-run treatment effect, and shows that the stacked
state-space form reproduces the scalar recursion exactly.
"""

import numpy as np

from armadesign import (
    ArmaModel,
    VarmaModel,
    arma_filter,
    check_no_unit_root,
    noise_autocov,
    to_state_space,
    true_ate,
)

# ---------------------------------------------------------------- univariate
model = ArmaModel(mu=2.0, a=(0.5,), b=0.05, theta=(0.8,), sigma2=1.0)
print("ARMA(1,1) model:", model)

report = check_no_unit_root(model)
print(f"stable: {report.stable} (AR companion spectral radius "
      f"{report.spectral_radius:.3f})")

# The average treatment effect is the difference of the two long-run means
# (all-treated minus all-control): ATE = 2 b / (1 - sum a).
print(f"long-run treatment effect: {true_ate(model):.4f} "
      f"(= 2*{model.b}/(1-{model.a[0]}))")

gamma = noise_autocov(model)
print(f"noise autocovariance gamma_Z(0..q): {np.round(gamma, 4)} "
      "(the MA part makes shocks persist one interval)")

# ------------------------------------------------- state-space equivalence
T = 200
rng = np.random.default_rng(0)
eps = rng.standard_normal(T) * np.sqrt(model.sigma2)
u = np.where(rng.uniform(size=T) < 0.5, 1.0, -1.0)

y_scalar = arma_filter(model, eps, u)
y_stacked = to_state_space(model).simulate(eps, u)
print(f"state-space vs scalar recursion, max |diff| over {T} steps: "
      f"{np.max(np.abs(y_scalar - y_stacked)):.2e}")

# ------------------------------------------------------------- multivariate
# Two business metrics move together: channel 1 is the target metric,
# channel 2 feeds back into it with one interval of delay.
varma = VarmaModel(
    mu=(0.0, 1.0),
    A=(((0.4, 0.1), (0.0, 0.3)),),
    b=(0.05, 0.0),
    M=(((0.3, 0.0), (0.1, 0.2)),),
    Sigma=((1.0, 0.2), (0.2, 0.8)),
)
print("\nVARMA(1,1), d=2:")
print(f"stable: {check_no_unit_root(varma).stable}")
print(f"long-run effect on channel 1: {true_ate(varma):.4f} "
      "(= 2 e1'(I - A)^-1 b)")

# An unstable model is rejected wherever stationarity is required.
explosive = ArmaModel(mu=0.0, a=(1.05,), b=0.1, theta=(), sigma2=1.0)
print(f"\na = 1.05 gives spectral radius "
      f"{check_no_unit_root(explosive).spectral_radius:.2f}: "
      "simulation and asymptotics will refuse this model")
