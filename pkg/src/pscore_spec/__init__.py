"""Projection-based specification tests for parametric propensity-score models."""

from .bootstrap import MAMMEN, TestResult, run_bootstrap
from .errors import (
    DegenerateDraw,
    DegenerateVariance,
    InvalidInput,
    NoConvergence,
    PerfectSeparation,
    SingularDesign,
)
from .kernel_test import KernelTestResult, t_test, t_tests
from .model import Dataset, FittedModel, fit, fit_mle, fit_nlls, model_at
from .projection import ProjectedProcess, projected_process
from .stats import StatPair, cvm_stat, ks_stat
from .workflow import SpecTestReport, specification_test

__version__ = "0.1.0"
