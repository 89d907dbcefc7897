"""One-call specification test on a dataset."""

from __future__ import annotations

from dataclasses import dataclass, field

from .bootstrap import DEFAULT_ALPHAS, TestResult, run_bootstrap
from .kernel_test import t_tests
from .model import Dataset, FittedModel, fit
from .projection import ProjectedProcess, projected_process


@dataclass(frozen=True)
class SpecTestReport:
    fitted: FittedModel
    process: ProjectedProcess
    bootstrap: TestResult
    kernel: list = field(default_factory=list)


def specification_test(
    data: Dataset,
    link: str = "probit",
    B: int = 999,
    seed: int = 0,
    alphas=DEFAULT_ALPHAS,
    shaikh_c=(),
    estimator: str = "mle",
) -> SpecTestReport:
    """Fit the model, then run the CvM/KS bootstrap test and any kernel tests."""
    fitted = fit(data, link, estimator)
    proc = projected_process(fitted)
    boot = run_bootstrap(fitted, proc, B, seed, alphas)
    kernel = t_tests(fitted, shaikh_c) if shaikh_c else []
    return SpecTestReport(fitted=fitted, process=proc, bootstrap=boot, kernel=kernel)
