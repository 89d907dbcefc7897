"""Simulation designs and the Monte Carlo rejection-rate runner.

DGP1-5 use two correlated normal covariates, DGP6-10 use ten; in every case
the null model is a probit on the main effects only.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bootstrap import run_bootstrap
from .errors import DegenerateDraw, DegenerateVariance, NoConvergence, SingularDesign
from .kernel_test import BANDWIDTH_CONSTANTS, t_tests
from .model import Dataset, fit
from .projection import projected_process

log = logging.getLogger(__name__)

DGP_IDS = tuple(range(1, 11))
_RETRYABLE = (DegenerateDraw, NoConvergence, SingularDesign, DegenerateVariance)


@dataclass(frozen=True)
class DgpSpec:
    id: int
    n: int

    def __post_init__(self):
        if self.id not in DGP_IDS:
            raise ValueError(f"unknown DGP {self.id}; expected 1..10")
        if self.n < 30:
            raise ValueError(f"n must be at least 30, got {self.n}")


def draw_covariates(spec: DgpSpec, rng: np.random.Generator) -> np.ndarray:
    """Raw covariates X1..Xp (no intercept), p = 2 for DGP1-5 and 10 otherwise."""
    n = spec.n
    z1 = rng.standard_normal(n)
    z2 = rng.standard_normal(n)
    cols = [z1, (z1 + z2) / math.sqrt(2.0)]
    if spec.id >= 6:
        cols.extend(rng.standard_normal((8, n)))
    return np.column_stack(cols)


def latent_index(dgp: int, x: np.ndarray, eps: np.ndarray) -> np.ndarray:
    x1, x2 = x[:, 0], x[:, 1]
    if dgp <= 5:
        lin = 1.0 + x1 + x2
        if dgp == 2:
            lin = lin + x1 * x2
        elif dgp == 3:
            lin = lin * lin
        return lin - eps
    lin = 1.0 + x.sum(axis=1)
    inter = x1 * x[:, 1:5].sum(axis=1)
    squares = np.square(x[:, :5]).sum(axis=1)
    if dgp == 7:
        lin = lin - x1 * x2
    elif dgp == 8:
        lin = lin - inter
    elif dgp == 9:
        lin = lin - squares
    elif dgp == 10:
        lin = lin - inter - squares
    return lin - eps


def draw_errors(dgp: int, n: int, rng: np.random.Generator) -> np.ndarray:
    if dgp in (1, 2, 3):
        return rng.standard_normal(n)
    if dgp == 4:
        return np.square(rng.standard_normal(n))  # chi-square, 1 df
    if dgp == 5:
        return rng.uniform(-1.0, 1.0, n)
    return math.sqrt(10.0) * rng.standard_normal(n)  # variance 10


def draw(spec: DgpSpec, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """(d, raw covariates) for one sample."""
    x = draw_covariates(spec, rng)
    eps = draw_errors(spec.id, spec.n, rng)
    d = (latent_index(spec.id, x, eps) > 0).astype(float)
    return d, x


def null_design(x: np.ndarray) -> tuple[np.ndarray, tuple]:
    names = ("const",) + tuple(f"X{j + 1}" for j in range(x.shape[1]))
    return np.column_stack([np.ones(x.shape[0]), x]), names


def generate(spec: DgpSpec, rng: np.random.Generator) -> Dataset:
    d, x = draw(spec, rng)
    if np.all(d == d[0]):
        raise DegenerateDraw(f"DGP{spec.id}, n={spec.n}: treatment constant in sample")
    design, names = null_design(x)
    return Dataset(d, design, names)


# ---------------------------------------------------------------------------
# experiment runner
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class McConfig:
    dgps: tuple = (1,)
    sizes: tuple = (200,)
    reps: int = 1000
    B: int = 499
    shaikh_c: tuple = BANDWIDTH_CONSTANTS
    alphas: tuple = (0.05,)
    seed: int = 12345
    link: str = "probit"
    estimator: str = "mle"
    retries: int = 100
    jobs: int = 1

    def __post_init__(self):
        if self.reps < 1 or self.B < 1:
            raise ValueError("reps and B must be positive")
        if not all(0.0 < a < 1.0 for a in self.alphas):
            raise ValueError("alphas must lie in (0, 1)")
        for dgp in self.dgps:
            for n in self.sizes:
                DgpSpec(dgp, n)


def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def _seed64(seed: int, *key: int) -> int:
    return int(np.random.SeedSequence(seed, spawn_key=tuple(key)).generate_state(1, np.uint64)[0])


def replicate(cfg: McConfig, dgp: int, n: int, r: int) -> dict:
    """One Monte Carlo replication, resampled on retryable failures."""
    failures: dict[str, int] = {}
    spec = DgpSpec(dgp, n)
    for attempt in range(cfg.retries + 1):
        try:
            data = generate(spec, _rng(cfg.seed, dgp, n, r, attempt, 0))
            fitted = fit(data, cfg.link, cfg.estimator)
            proc = projected_process(fitted)
            res = run_bootstrap(fitted, proc, cfg.B, _seed64(cfg.seed, dgp, n, r, attempt, 1), cfg.alphas)
            tn = t_tests(fitted, cfg.shaikh_c) if cfg.shaikh_c else []
        except _RETRYABLE as exc:
            name = type(exc).__name__
            failures[name] = failures.get(name, 0) + 1
            continue
        return {
            "cvm": res.stats.cvm,
            "ks": res.stats.ks,
            "pval_cvm": res.pval_cvm,
            "pval_ks": res.pval_ks,
            "t": [k.t for k in tn],
            "failures": failures,
        }
    raise RuntimeError(
        f"DGP{dgp}, n={n}, replication {r}: {cfg.retries} retries exhausted ({failures})"
    )


def _run_cell_chunk(args):
    cfg, dgp, n, lo, hi = args
    return [replicate(cfg, dgp, n, r) for r in range(lo, hi)]


@dataclass(frozen=True)
class RejectionRow:
    dgp: int
    n: int
    test: str
    alpha: float
    rate: float
    mcse: float


@dataclass
class CellResult:
    """Per-replication outcomes for one (dgp, n) cell, in replication order."""

    dgp: int
    n: int
    cvm: np.ndarray
    ks: np.ndarray
    pval_cvm: np.ndarray
    pval_ks: np.ndarray
    t: np.ndarray  # (reps, len(shaikh_c))
    failures: dict = field(default_factory=dict)


@dataclass
class RejectionTable:
    rows: list
    reps: int
    B: int
    seed: int
    cells: dict = field(default_factory=dict)  # (dgp, n) -> CellResult

    def rate(self, dgp: int, n: int, test: str, alpha: float = 0.05) -> float:
        for row in self.rows:
            if (row.dgp, row.n, row.test) == (dgp, n, test) and math.isclose(row.alpha, alpha):
                return row.rate
        raise KeyError((dgp, n, test, alpha))

    def mcse(self, dgp: int, n: int, test: str, alpha: float = 0.05) -> float:
        r = self.rate(dgp, n, test, alpha)
        return math.sqrt(r * (1.0 - r) / self.reps)


def _test_labels(cs) -> list[str]:
    return ["CvM", "KS"] + [f"T({c:.2f})" for c in cs]


def tabulate(cfg: McConfig, cells: dict) -> RejectionTable:
    from scipy.stats import norm

    rows = []
    for (dgp, n), cell in cells.items():
        for a in cfg.alphas:
            z = norm.ppf(1.0 - a)
            decisions = [cell.pval_cvm <= a, cell.pval_ks <= a]
            decisions += [cell.t[:, j] > z for j in range(len(cfg.shaikh_c))]
            for label, rej in zip(_test_labels(cfg.shaikh_c), decisions):
                rate = float(np.mean(rej))
                rows.append(
                    RejectionRow(dgp, n, label, float(a), rate, math.sqrt(rate * (1 - rate) / cfg.reps))
                )
    return RejectionTable(rows=rows, reps=cfg.reps, B=cfg.B, seed=cfg.seed, cells=cells)


def run_experiment(cfg: McConfig, progress=None) -> RejectionTable:
    """Run every (dgp, n) cell of ``cfg``; output is independent of ``cfg.jobs``."""
    cells = {}
    for dgp in cfg.dgps:
        for n in cfg.sizes:
            log.info("DGP%d n=%d: %d replications, B=%d", dgp, n, cfg.reps, cfg.B)
            if cfg.jobs > 1:
                step = max(1, math.ceil(cfg.reps / (4 * cfg.jobs)))
                chunks = [(cfg, dgp, n, lo, min(cfg.reps, lo + step)) for lo in range(0, cfg.reps, step)]
                with ProcessPoolExecutor(cfg.jobs) as pool:
                    out = [rep for part in pool.map(_run_cell_chunk, chunks) for rep in part]
            else:
                out = []
                for r in range(cfg.reps):
                    out.append(replicate(cfg, dgp, n, r))
                    if progress is not None:
                        progress(dgp, n, r)
            failures: dict[str, int] = {}
            for rep in out:
                for k, v in rep["failures"].items():
                    failures[k] = failures.get(k, 0) + v
            cells[(dgp, n)] = CellResult(
                dgp=dgp,
                n=n,
                cvm=np.array([rep["cvm"] for rep in out]),
                ks=np.array([rep["ks"] for rep in out]),
                pval_cvm=np.array([rep["pval_cvm"] for rep in out]),
                pval_ks=np.array([rep["pval_ks"] for rep in out]),
                t=np.array([rep["t"] for rep in out], dtype=float).reshape(len(out), len(cfg.shaikh_c)),
                failures=failures,
            )
    return tabulate(cfg, cells)


# ---------------------------------------------------------------------------
# ECDF of fitted propensities under a misspecified and a correct model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EcdfComparison:
    u: np.ndarray
    ecdf_misspecified: np.ndarray
    ecdf_correct: np.ndarray
    theta_misspecified: np.ndarray
    theta_correct: np.ndarray

    @property
    def sup_distance(self) -> float:
        return float(np.max(np.abs(self.ecdf_misspecified - self.ecdf_correct)))


def _ecdf(sample: np.ndarray, grid: np.ndarray) -> np.ndarray:
    return np.searchsorted(np.sort(sample), grid, side="right") / sample.size


def ecdf_comparison(n: int = 1000, seed: int = 0, link: str = "probit") -> EcdfComparison:
    """Fit DGP7 data with and without the X1*X2 term and compare fitted-score ECDFs."""
    if n < 100:
        raise ValueError("n must be at least 100")
    spec = DgpSpec(7, n)
    d, x = draw(spec, _rng(seed, 7, n))
    design, names = null_design(x)
    mis = fit(Dataset(d, design, names), link)
    design_c = np.column_stack([design, x[:, 0] * x[:, 1]])
    cor = fit(Dataset(d, design_c, names + ("X1*X2",)), link)
    grid = np.unique(np.concatenate([mis.qhat, cor.qhat]))
    return EcdfComparison(
        u=grid,
        ecdf_misspecified=_ecdf(mis.qhat, grid),
        ecdf_correct=_ecdf(cor.qhat, grid),
        theta_misspecified=mis.theta,
        theta_correct=cor.theta,
    )
