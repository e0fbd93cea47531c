"""Bandit simulation with partially observed mediators and outcomes."""

from .core import ObservedRound, OutcomeAlphabet, RngStream, make_round
from .envs import (
    BootstrapEnv,
    IngestError,
    MarEnv,
    McarEnv,
    MissingMedEnv,
    MnarEnv,
    build_ignoremed_instance,
    build_minimax_family,
    ingest_pbc,
    sample_mar_config,
    sample_mcar_config,
    sample_mnar_config,
)
from .estimators import (
    EstimatorFit,
    IllConditionedError,
    PositivityError,
    SufficientStats,
    aipw_estimate,
    ht_estimate,
    mar_plugin,
    mcar_mean,
    missing_med_mar_estimate,
    missing_med_mnar_estimate,
    mnar_estimate,
    pinv_solve_infnorm,
)
from .policies import (
    POLICY_KINDS,
    MarUcbKnownP,
    MarUcbUnknownP,
    McarUcb,
    MissingMedMarUcb,
    MissingMedMnarUcb,
    MnarUcb,
    NaiveUcb,
    make_policy,
)
from .runner import (
    RegretCurve,
    build_env,
    build_policy,
    checkpoints,
    kappa_inf,
    run_experiment,
    theoretical_curves,
    write_results,
)
from .config import ConfigError, ExperimentConfig, build_config, load_config

__version__ = "0.1.0"

__all__ = [
    "BootstrapEnv",
    "ConfigError",
    "EstimatorFit",
    "ExperimentConfig",
    "IllConditionedError",
    "IngestError",
    "MarEnv",
    "MarUcbKnownP",
    "MarUcbUnknownP",
    "McarEnv",
    "McarUcb",
    "MissingMedEnv",
    "MissingMedMarUcb",
    "MissingMedMnarUcb",
    "MnarEnv",
    "MnarUcb",
    "NaiveUcb",
    "ObservedRound",
    "OutcomeAlphabet",
    "POLICY_KINDS",
    "PositivityError",
    "RegretCurve",
    "RngStream",
    "SufficientStats",
    "aipw_estimate",
    "build_config",
    "build_env",
    "build_ignoremed_instance",
    "build_minimax_family",
    "build_policy",
    "checkpoints",
    "ht_estimate",
    "ingest_pbc",
    "kappa_inf",
    "load_config",
    "make_policy",
    "make_round",
    "mar_plugin",
    "mcar_mean",
    "missing_med_mar_estimate",
    "missing_med_mnar_estimate",
    "mnar_estimate",
    "pinv_solve_infnorm",
    "run_experiment",
    "sample_mar_config",
    "sample_mcar_config",
    "sample_mnar_config",
    "theoretical_curves",
    "write_results",
]
