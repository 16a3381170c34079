"""Logit learning in feedback-evolving games: equilibria, Hopf bifurcation,
limit cycles and the tragedy of the commons."""

__version__ = "0.1.0"

from .errors import BracketError, DomainError, EcodynError, IntegrationError, RootFindingError
from .model import (
    AssumptionReport,
    EnvParams,
    LinearCoeffs,
    ModelConfig,
    PayoffDeltas,
    Rule,
    State,
    check_assumptions,
    derive_coeffs,
    fig3_config,
    jacobian,
    logit_prob,
    payoff_diff,
    vector_field,
)
from .fixed_points import (
    Family,
    FixedPoint,
    Stability,
    Thresholds,
    all_fixed_points,
    beta_hat,
    beta_hopf,
    beta_int,
    classify_stability,
    interior_fixed_point,
    prosperity_fixed_point,
    t_beta,
    thresholds,
    toc_fixed_points,
)
from .integrators import Trajectory, integrate
from .dynamics import (
    AttractorKind,
    AttractorReport,
    BasinMap,
    CycleInfo,
    basin_sample,
    detect_attractor,
    estimate_beta_u,
    limit_cycle,
)
from .sweep import Regime, SweepRecord, SweepResult, regime_classify, sweep
from .abm import AbmConfig, AbmTrajectory, compare_abm_ode, run_abm
