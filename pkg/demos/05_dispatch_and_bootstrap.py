"""Validation: a ride-dispatch micro-simulator and the parametric bootstrap.

The asymptotic theory assumes the world is a linear ARMA system.  Real
marketplaces are not: this demo runs a small city simulator (drivers, order
arrivals, matching, cancellations) whose switchback experiments produce
genuinely nonlinear interference, then checks that the model-based machinery
still gives useful answers.  The parametric bootstrap closes the loop: fit an
ARMA surrogate to one dispatch panel, replay the surrogate with an injected
effect, and compare design rankings under the surrogate with rankings under
the true (nonlinear) simulator.
"""

import numpy as np

from armadesign import (
    BootstrapSpec,
    DispatchConfig,
    PanelData,
    ad_design,
    at_design,
    attach_ma_stage,
    dispatch_oracle_ate,
    dispatch_simulate,
    efficiency_indicators,
    estimate_ate,
    fit_arma_yw,
    monte_carlo_mse,
    ur_design,
)

# A deliberately contended city: 15 drivers vs 60 orders/day.
config = DispatchConfig(n_drivers=15, n_orders_per_day=60, treatment_effect=0.5)
print(f"city: {config.grid}x{config.grid} grid, {config.n_drivers} drivers, "
      f"{config.n_orders_per_day} orders/day, "
      f"treatment speeds matching by {config.treatment_effect:.0%}")

# ------------------------------------------------------------ one experiment
panel = dispatch_simulate(config, ur_design(), days=60, seed=11)
Y = panel.Y
print(f"\n60-day switchback, {Y.shape[0]} half-hour intervals, "
      "channels = (income, waiting orders, idle drivers):")
print(f"  mean income/interval   {Y[:, 0].mean():8.3f}")
print(f"  mean unassigned orders {Y[:, 1].mean():8.3f}")
print(f"  mean idle drivers      {Y[:, 2].mean():8.3f}")

oracle = dispatch_oracle_ate(config, days=400, seed=101)
print(f"\nground truth by counterfactual coupling ({oracle['days']} days): "
      f"ATE on income = {oracle['ate']:.4f} (se {oracle['se']:.4f})")

# ------------------------------------------- model-based advice on real data
income = PanelData(Y=Y[:, 0], U=panel.U, dt_label="30min")
fit = attach_ma_stage(fit_arma_yw(income, p=1, q=1))
rep = efficiency_indicators(fit)
print("\nARMA(1,1) surrogate fitted to the income channel:")
print(f"  a = {fit.ar_hat[0]:+.3f}, b = {fit.b_hat:+.4f}, "
      f"theta = {fit.ma_hat[0]:+.3f}")
print(f"  indicator recommendation: {rep.recommendation}")

# --------------------------------------------------- design ranking, two ways
# Both worlds score designs with the same estimator: an AR(1)+effect fit on
# the income channel.  The replay world keeps the fitted MA stage, so the
# serially correlated noise that separates the designs survives the round
# trip from data to surrogate.
designs = {"UR": ur_design(), "AT": at_design(), "AD(16)": ad_design(16)}
R, DAYS = 48, 30

print(f"\ntrue-simulator ranking ({R} replications x {DAYS} days):")
dispatch_mse = {}
for name, design in designs.items():
    errs = []
    for r in range(R):
        p = dispatch_simulate(config, design, DAYS, seed=(555, r))
        f = fit_arma_yw(PanelData(Y=p.Y[:, 0], U=p.U), p=1, q=0)
        errs.append(estimate_ate(f) - oracle["ate"])
    err2 = np.square(errs)
    dispatch_mse[name] = float(err2.mean())
    print(f"  {name:6s} MSE {err2.mean():.4f} "
          f"(se {err2.std(ddof=1) / np.sqrt(R):.4f})")

spec = BootstrapSpec(fit=fit, b_inject=fit.b_hat, dt_label="30min")
print(f"\nsurrogate (bootstrap) ranking ({R} replications x {DAYS * 48} "
      "intervals, replayed from the fit):")
boot_mse = {}
for name, design in designs.items():
    report = monte_carlo_mse(
        spec, design, R, DAYS * 48, base_seed=777, orders=(1, 0)
    )
    boot_mse[name] = report.mse
    print(f"  {name:6s} MSE {report.mse:.4f} (se {report.se_of_mse:.4f})")

rank_true = sorted(dispatch_mse, key=dispatch_mse.get)
rank_boot = sorted(boot_mse, key=boot_mse.get)
print(f"\nranking under the true simulator: {' < '.join(rank_true)}")
print(f"ranking under the ARMA surrogate: {' < '.join(rank_boot)}")
if rank_true == rank_boot:
    print("the linear surrogate is misspecified, yet it orders the designs "
          "exactly as the true simulator does.")
else:
    print(f"both worlds agree on the winning design ({rank_true[0]}); "
          "the lower-stakes tail order differs at this replication budget."
          if rank_true[0] == rank_boot[0] else
          "the worlds disagree at this replication budget — "
          "increase reps to resolve.")
