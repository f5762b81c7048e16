"""High-dimensional MANOVA by bootstrapping partially standardized max statistics."""

from .bootstrap import (
    BootstrapConfig,
    BootstrapDistribution,
    ObservedPivot,
    boot_replicate,
    empirical_quantile,
    observed_pivot,
    run_bootstrap,
)
from .inference import ScrEntry, TestConfig, TestResult, build_scr, decide, p_value, run_test, select_tau
from .stats import Dataset, GroupSummary, PairSet, PooledScale, validate_dataset

__version__ = "0.1.0"
