"""Command-line front end: simulate | fit | indicators | design | compare.

Each subcommand is a pure function of its flags, input files, and seed:
files carry the machine-readable artifacts (JSON for structured data, CSV
for time series), stdout carries a short human summary, and nothing
downstream parses stdout.  Exit codes: 0 success, 2 usage or input-format
error, 1 computation error.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from ._jsonio import dump_json, load_json
from .asymptotics import ck_from_fit, efficiency_indicators
from .designs import Markov, design_from_dict, design_to_dict, save_design
from .estimation import (
    NotIdentifiableError,
    NotRealizableError,
    attach_ma_stage,
    fit_arma_yw,
    fit_varma_yw,
    load_fit,
    load_panel_csv,
    save_fit,
    save_panel_csv,
    select_order,
)
from .models import UnstableModelError, load_model
from .optimal import co_design, rl_design, solve_alpha
from .simulation import (
    BootstrapSpec,
    DispatchConfig,
    dispatch_simulate,
    monte_carlo_mse,
    simulate_arma,
    simulate_varma,
)

ENV_SEED = "ARMADESIGN_SEED"


class UsageError(Exception):
    """Bad flags or unreadable/malformed input files (exit code 2)."""


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get(ENV_SEED)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise UsageError(f"{ENV_SEED} must be an integer, got {env!r}") from exc
    return 0


def _load_json_input(path: str, what: str) -> dict:
    try:
        return load_json(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read {what} from {path}: {exc}") from exc


def _load_model_input(path: str):
    try:
        return load_model(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read model from {path}: {exc}") from exc


def _load_design_input(path: str):
    try:
        return design_from_dict(load_json(path))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read design from {path}: {exc}") from exc


def _load_fit_input(path: str):
    try:
        return load_fit(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read fit from {path}: {exc}") from exc


def _load_panel_input(path: str):
    try:
        return load_panel_csv(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read panel CSV from {path}: {exc}") from exc


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    seed = _resolve_seed(args)
    if args.dispatch is not None:
        if args.days is None or args.days < 1:
            raise UsageError("--dispatch requires --days >= 1")
        cfg = DispatchConfig.from_dict(_load_json_input(args.dispatch, "dispatch config"))
        design = _load_design_input(args.design)
        panel = dispatch_simulate(cfg, design, days=args.days, seed=seed)
    else:
        if args.model is None:
            raise UsageError("either --model or --dispatch is required")
        if args.horizon is None or args.horizon < 1:
            raise UsageError("--horizon must be a positive integer")
        model = _load_model_input(args.model)
        design = _load_design_input(args.design)
        kwargs = {}
        if args.burn_in is not None:
            kwargs["burn_in"] = args.burn_in
        if model.__class__.__name__ == "ArmaModel":
            panel = simulate_arma(
                model, design, args.horizon, seed, dt_label=args.dt_label, **kwargs
            )
        else:
            panel = simulate_varma(
                model, design, args.horizon, seed, dt_label=args.dt_label, **kwargs
            )
    save_panel_csv(panel, args.out)
    print(f"simulate: wrote {panel.T} rows x {panel.d} outcome column(s) "
          f"to {args.out} (seed {seed})")
    return 0


def cmd_fit(args) -> int:
    panel = _load_panel_input(args.data)
    if args.auto_order:
        selection = select_order(
            panel, p_max=args.pmax, q_max=args.qmax, criterion=args.criterion
        )
        p, q = selection.p, selection.q
    else:
        if args.p is None or args.q is None:
            raise UsageError("provide --p and --q, or use --auto-order")
        p, q = args.p, args.q
    fit_fn = fit_arma_yw if (panel.d == 1 and panel.E is None) else fit_varma_yw
    fit = fit_fn(panel, p, q)
    if args.ma_stage:
        fit = attach_ma_stage(fit)
    save_fit(fit, args.out)
    ate = fit.ate_hat
    ate_str = f"{ate:.6g}" if np.isfinite(np.float64(ate)) else "undefined (unit root)"
    chosen = " (auto-selected)" if args.auto_order else ""
    print(f"fit: {fit.kind} p={p} q={q}{chosen}  ate_hat={ate_str}  "
          f"n_used={fit.n_used}  -> {args.out}")
    return 0


def cmd_indicators(args) -> int:
    fit = _load_fit_input(args.fit)
    report = efficiency_indicators(fit)
    dump_json(report.to_dict(), args.out)
    print(f"{'design':<8} {'asymptotic MSE':>16}")
    for label in ("AD", "UR", "AT"):
        print(f"{label:<8} {report.mse[label]:>16.6g}")
    print(f"EI_AD = {report.ei_ad:.6g}   EI_AT = {report.ei_at:.6g}")
    k = report.model_ref["k_factor"]
    identity_gap = abs(report.mse["AD"] - report.mse["UR"] - 8.0 * k * report.ei_ad)
    print(f"identity mse_AD - mse_UR = 8K*EI_AD: pass (|gap| = {identity_gap:.2e})")
    print(f"recommendation: {report.recommendation}  -> {args.out}")
    return 0


def cmd_design(args) -> int:
    fit = _load_fit_input(args.fit)
    ck = ck_from_fit(fit)
    if args.which == "co":
        if fit.q == 0:
            design = Markov(alpha=0.5, beta=0.5, label="CO")
            objective = 0.0
        else:
            sol = solve_alpha(ck)
            design = co_design(ck)
            objective = sol["objective"]
        print(f"design co: alpha={design.alpha:.6g}  objective={objective:.6g}")
    else:
        if fit.q == 0:
            # with no residual carryover every design ties; emit the fair coin
            design = Markov(alpha=0.5, beta=0.5, label="RL")
            print("design rl: q=0, all designs tie; emitting the balanced coin")
        else:
            design = rl_design(ck, q=fit.q, gamma=args.gamma, tol=args.tol)
            from .optimal import policy_objective

            obj = policy_objective(design.policy, ck)
            print(f"design rl: table={list(design.policy.table)}  "
                  f"objective={obj:.6g}")
    save_design(design, args.out)
    print(f"wrote design JSON -> {args.out}")
    return 0


def cmd_compare(args) -> int:
    seed = _resolve_seed(args)
    design_paths = [p for p in args.designs.split(",") if p]
    if not design_paths:
        raise UsageError("--designs needs at least one design JSON path")
    designs = [_load_design_input(p) for p in design_paths]
    if args.reps < 1:
        raise UsageError("--reps must be >= 1")
    if args.horizon < 1:
        raise UsageError("--horizon must be >= 1")

    if args.model is not None:
        generator = _load_model_input(args.model)
    elif args.bootstrap_fit is not None:
        fit = _load_fit_input(args.bootstrap_fit)
        generator = BootstrapSpec(
            fit=fit, b_inject=args.b_inject, dt_label=args.dt_label
        )
    else:
        generator = DispatchConfig.from_dict(
            _load_json_input(args.dispatch, "dispatch config")
        )

    orders = None
    if args.p is not None or args.q is not None:
        if args.p is None or args.q is None:
            raise UsageError("--p and --q must be given together")
        orders = (args.p, args.q)

    reports = []
    for design in designs:
        reports.append(
            monte_carlo_mse(
                generator,
                design,
                R=args.reps,
                T_or_days=args.horizon,
                base_seed=seed,
                jobs=args.jobs,
                orders=orders,
            )
        )
    ranking = sorted(
        (r.design_label for r in reports),
        key=lambda lbl: (next(r.mse for r in reports if r.design_label == lbl), lbl),
    )
    dump_json(
        {"reports": [r.to_dict() for r in reports], "ranking": ranking}, args.out
    )
    print(f"{'rank':<6} {'design':<16} {'mse':>14} {'rmse':>14} {'failed':>8}")
    by_label = {r.design_label: r for r in reports}
    for i, label in enumerate(ranking, start=1):
        r = by_label[label]
        print(f"{i:<6} {label:<16} {r.mse:>14.6g} {r.rmse:>14.6g} {r.n_failed:>8}")
    print(f"compare: oracle ATE {reports[0].oracle_ate:.6g}, "
          f"{args.reps} reps per design -> {args.out}")
    return 0


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="armadesign",
        description="Controlled-ARMA experiment design toolkit: simulate, fit, "
                    "rank, and optimise treatment designs for switchback "
                    "experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="simulate a panel to CSV")
    p_sim.add_argument("--model", help="model JSON path")
    p_sim.add_argument("--dispatch", help="dispatch config JSON path")
    p_sim.add_argument("--design", required=True, help="design JSON path")
    p_sim.add_argument("--horizon", type=int, help="number of intervals (model mode)")
    p_sim.add_argument("--days", type=int, help="number of days (dispatch mode)")
    p_sim.add_argument("--burn-in", type=int, default=None, dest="burn_in")
    p_sim.add_argument("--dt-label", default="1h", dest="dt_label")
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--out", required=True, help="output CSV path")
    p_sim.set_defaults(func=cmd_simulate)

    p_fit = sub.add_parser("fit", help="fit a controlled (V)ARMA model from CSV")
    p_fit.add_argument("--data", required=True, help="panel CSV path")
    p_fit.add_argument("--p", type=int, default=None)
    p_fit.add_argument("--q", type=int, default=None)
    p_fit.add_argument("--auto-order", action="store_true", dest="auto_order")
    p_fit.add_argument("--pmax", type=int, default=3)
    p_fit.add_argument("--qmax", type=int, default=3)
    p_fit.add_argument("--criterion", choices=("aic", "bic"), default="aic")
    p_fit.add_argument("--ma-stage", action="store_true", dest="ma_stage",
                       help="attach the innovations MA stage to the fit")
    p_fit.add_argument("--out", required=True, help="output fit JSON path")
    p_fit.set_defaults(func=cmd_fit)

    p_ind = sub.add_parser("indicators", help="efficiency indicators from a fit")
    p_ind.add_argument("--fit", required=True, help="fit JSON path")
    p_ind.add_argument("--out", required=True, help="output report JSON path")
    p_ind.set_defaults(func=cmd_indicators)

    p_des = sub.add_parser("design", help="solve for an optimal design")
    p_des.add_argument("which", choices=("co", "rl"))
    p_des.add_argument("--fit", required=True, help="fit JSON path")
    p_des.add_argument("--gamma", type=float, default=0.99)
    p_des.add_argument("--tol", type=float, default=1e-10)
    p_des.add_argument("--out", required=True, help="output design JSON path")
    p_des.set_defaults(func=cmd_design)

    p_cmp = sub.add_parser("compare", help="Monte Carlo MSE comparison of designs")
    gen = p_cmp.add_mutually_exclusive_group(required=True)
    gen.add_argument("--model", help="model JSON path")
    gen.add_argument("--bootstrap-fit", dest="bootstrap_fit", help="fit JSON path")
    gen.add_argument("--dispatch", help="dispatch config JSON path")
    p_cmp.add_argument("--b-inject", type=float, default=0.0, dest="b_inject")
    p_cmp.add_argument("--dt-label", default="1h", dest="dt_label")
    p_cmp.add_argument("--designs", required=True,
                       help="comma-separated design JSON paths")
    p_cmp.add_argument("--reps", type=int, required=True)
    p_cmp.add_argument("--horizon", type=int, required=True,
                       help="intervals per replicate (days in dispatch mode)")
    p_cmp.add_argument("--p", type=int, default=None)
    p_cmp.add_argument("--q", type=int, default=None)
    p_cmp.add_argument("--seed", type=int, default=None)
    p_cmp.add_argument("--jobs", type=int, default=1)
    p_cmp.add_argument("--out", required=True, help="output JSON path")
    p_cmp.set_defaults(func=cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse prints its own usage message
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (
        NotIdentifiableError,
        NotRealizableError,
        UnstableModelError,
        ValueError,
        RuntimeError,
        np.linalg.LinAlgError,
    ) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
