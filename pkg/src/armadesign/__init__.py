"""armadesign: design and analysis of switchback experiments under
controlled (V)ARMA outcome dynamics.

The package covers the full workflow for A/B tests on temporally dependent
time series: exact simulation of controlled ARMA/VARMA models, moment-based
(Yule-Walker) estimation of the average treatment effect, closed-form
asymptotic MSEs and efficiency indicators for standard designs (alternating,
uniform random, all-day switchbacks, Markov chains), optimal-design solvers
(constrained polynomial optimisation over balanced Markov chains, and value
iteration over q-dependent deterministic policies), and Monte Carlo
validation harnesses including a ride-dispatch micro-simulator for
misspecification testing.
"""

from .models import (
    EPS_STAB,
    ArmaModel,
    StabilityReport,
    StateSpaceForm,
    UnstableModelError,
    VarmaModel,
    arma_filter,
    check_no_unit_root,
    load_model,
    model_from_dict,
    model_to_dict,
    noise_autocov,
    save_model,
    to_state_space,
    true_ate,
    varma_filter,
)
from .designs import (
    Markov,
    PolicyTable,
    QDependent,
    Switchback,
    UniformRandom,
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
from .estimation import (
    FitResult,
    NotIdentifiableError,
    NotRealizableError,
    OrderSelection,
    PanelData,
    attach_ma_stage,
    estimate_ate,
    fit_arma_yw,
    fit_ma_innovations,
    fit_to_dict,
    fit_from_dict,
    fit_varma_yw,
    instrument_orthogonality,
    load_fit,
    load_panel_csv,
    save_fit,
    save_panel_csv,
    select_order,
)
from .asymptotics import (
    CkCoefficients,
    EfficiencyReport,
    asymptotic_mse,
    ck_from_fit,
    ck_from_model,
    efficiency_indicators,
    mse_ad,
    mse_at,
    mse_named,
    mse_ur,
)
from .optimal import (
    MdpSpec,
    co_design,
    exhaustive_search,
    policy_objective,
    rl_design,
    solve_alpha,
    value_iteration,
)
from .simulation import (
    BootstrapSpec,
    DispatchConfig,
    McReport,
    bootstrap_simulate,
    dispatch_oracle_ate,
    dispatch_simulate,
    monte_carlo_mse,
    peak_dummy,
    save_report,
    simulate_arma,
    simulate_varma,
)

__version__ = "0.1.0"

__all__ = [
    "EPS_STAB",
    "ArmaModel",
    "VarmaModel",
    "StabilityReport",
    "StateSpaceForm",
    "UnstableModelError",
    "arma_filter",
    "varma_filter",
    "check_no_unit_root",
    "noise_autocov",
    "to_state_space",
    "true_ate",
    "model_to_dict",
    "model_from_dict",
    "save_model",
    "load_model",
    "Switchback",
    "UniformRandom",
    "Markov",
    "QDependent",
    "PolicyTable",
    "ad_design",
    "at_design",
    "ur_design",
    "generate",
    "xi",
    "autocov",
    "design_to_dict",
    "design_from_dict",
    "save_design",
    "load_design",
    "PanelData",
    "FitResult",
    "OrderSelection",
    "NotIdentifiableError",
    "NotRealizableError",
    "fit_arma_yw",
    "fit_varma_yw",
    "fit_ma_innovations",
    "attach_ma_stage",
    "estimate_ate",
    "select_order",
    "instrument_orthogonality",
    "save_panel_csv",
    "load_panel_csv",
    "fit_to_dict",
    "fit_from_dict",
    "save_fit",
    "load_fit",
    "CkCoefficients",
    "EfficiencyReport",
    "ck_from_fit",
    "ck_from_model",
    "efficiency_indicators",
    "asymptotic_mse",
    "mse_named",
    "mse_ad",
    "mse_ur",
    "mse_at",
    "MdpSpec",
    "solve_alpha",
    "value_iteration",
    "policy_objective",
    "exhaustive_search",
    "co_design",
    "rl_design",
    "BootstrapSpec",
    "DispatchConfig",
    "McReport",
    "simulate_arma",
    "simulate_varma",
    "peak_dummy",
    "bootstrap_simulate",
    "dispatch_simulate",
    "dispatch_oracle_ate",
    "monte_carlo_mse",
    "save_report",
    "__version__",
]
