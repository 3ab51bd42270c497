"""Competing estimators of time-varying correlation and their interval machinery."""
from dspcorr.baselines._path import WARMUP, BaselinePath, path_from_corr
from dspcorr.baselines.bootstrap import BootstrapError, block_bootstrap_intervals, block_indices
from dspcorr.baselines.dcc import FLAVORS, DccFitError, DccParams, dcc_fit, dcc_loglik, dcc_path
from dspcorr.baselines.garch import GarchFit, GarchFitError, garch11_fit, simulate_garch
from dspcorr.baselines.mfsv_baseline import MfsvBaselineConfig, mfsv_baseline, mfsv_score_path
from dspcorr.baselines.rolling import (ProjectionError, ewma_corr, ewma_weights, ledoit_wolf_corr,
                                       ledoit_wolf_shrink, nearest_pd_correlation, threshold_corr)

__all__ = [
    "FLAVORS", "WARMUP", "BaselinePath", "BootstrapError", "DccFitError", "DccParams", "GarchFit",
    "GarchFitError", "MfsvBaselineConfig", "ProjectionError", "block_bootstrap_intervals", "block_indices",
    "dcc_fit", "dcc_loglik", "dcc_path", "ewma_corr", "ewma_weights", "garch11_fit", "ledoit_wolf_corr",
    "ledoit_wolf_shrink", "mfsv_baseline", "mfsv_score_path", "nearest_pd_correlation", "path_from_corr",
    "simulate_garch", "threshold_corr",
]
