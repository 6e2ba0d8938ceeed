"""Slow-fast stochastic PDE averaging on a 1d Dirichlet grid.

The package splits into grid primitives (grid), operator catalogs
(operators), time stepping with noise capture (integrators), block-frozen
auxiliary machinery (blocks), invariant-measure averaging (averaging),
structural condition checks (conditions), and experiment drivers behind the
spavg command line (experiments, cli).
"""

from .averaging import (
    DecayFit,
    FbarEstimate,
    FrozenRunSpec,
    MemoizedFbar,
    OracleFbar,
    ergodicity_decay,
    estimate_fbar,
    oracle_fbar_ou,
    simulate_frozen,
)
from .blocks import BlockSchedule, build_auxiliary, deviation_statistic, increment_statistic
from .conditions import CONDITION_IDS, ConditionReport, check_condition, sample_field
from .config import ConfigError, ExperimentConfig, load_config, parse_config_text
from .grid import (
    H1_0,
    H_MINUS1,
    L2,
    Field,
    Grid1D,
    NormKind,
    lp_norm_kind,
    norm,
    norm_values,
    poisson_solve,
    sine_basis,
    sine_mode,
    smallest_eigenvalue,
    solve_neg_laplacian,
    zeros,
)
from .integrators import (
    ModelSpec,
    NewtonDivergence,
    NoisePath,
    SchemeParams,
    SlowTrajectory,
    Trajectory,
    TrajectoryStats,
    simulate_averaged,
    simulate_coupled,
    step_fast_block,
    step_slow,
    strong_error,
)
from .operators import (
    CouplingSpec,
    FastOperatorSpec,
    SlowOperatorSpec,
    burgers_convection,
    coupling_f,
    dissipativity_margin,
    fast_drift,
    noise_increment,
    slow_drift,
)
from .randomness import RngStream, gaussian_increments

__version__ = "0.1.0"

__all__ = [
    "BlockSchedule",
    "CONDITION_IDS",
    "ConditionReport",
    "ConfigError",
    "CouplingSpec",
    "DecayFit",
    "ExperimentConfig",
    "FastOperatorSpec",
    "FbarEstimate",
    "Field",
    "FrozenRunSpec",
    "Grid1D",
    "H1_0",
    "H_MINUS1",
    "L2",
    "MemoizedFbar",
    "ModelSpec",
    "NewtonDivergence",
    "NoisePath",
    "NormKind",
    "OracleFbar",
    "RngStream",
    "SchemeParams",
    "SlowOperatorSpec",
    "SlowTrajectory",
    "Trajectory",
    "TrajectoryStats",
    "build_auxiliary",
    "burgers_convection",
    "check_condition",
    "coupling_f",
    "deviation_statistic",
    "dissipativity_margin",
    "ergodicity_decay",
    "estimate_fbar",
    "fast_drift",
    "gaussian_increments",
    "increment_statistic",
    "load_config",
    "lp_norm_kind",
    "noise_increment",
    "norm",
    "norm_values",
    "oracle_fbar_ou",
    "parse_config_text",
    "poisson_solve",
    "sample_field",
    "simulate_averaged",
    "simulate_coupled",
    "simulate_frozen",
    "sine_basis",
    "sine_mode",
    "slow_drift",
    "smallest_eigenvalue",
    "solve_neg_laplacian",
    "step_fast_block",
    "step_slow",
    "strong_error",
    "zeros",
    "__version__",
]
