"""Multiplier bootstrap for the projected-process statistics.

Each draw perturbs the residual-marked summands with i.i.d. Mammen
two-point multipliers while holding the projected weights and residuals
fixed, so no model is refitted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import FittedModel
from .projection import ProjectedProcess
from .stats import StatPair, stat_pair

KAPPA = (math.sqrt(5.0) + 1.0) / 2.0
DEFAULT_ALPHAS = (0.01, 0.05, 0.10)
_CHUNK = 128


@dataclass(frozen=True)
class MultiplierSpec:
    kind: str = "mammen_two_point"
    values: tuple = (1.0 - KAPPA, KAPPA)
    probabilities: tuple = (KAPPA / math.sqrt(5.0), 1.0 - KAPPA / math.sqrt(5.0))

    @property
    def mean(self) -> float:
        return sum(v * p for v, p in zip(self.values, self.probabilities))

    @property
    def variance(self) -> float:
        return sum(v * v * p for v, p in zip(self.values, self.probabilities)) - self.mean**2


MAMMEN = MultiplierSpec()


@dataclass(frozen=True)
class TestResult:
    stats: StatPair
    boot_cvm: np.ndarray
    boot_ks: np.ndarray
    pval_cvm: float
    pval_ks: float
    crit: dict = field(default_factory=dict)  # alpha -> (cvm critical value, ks critical value)
    B: int = 0
    seed: int = 0

    __test__ = False  # not a pytest class

    def reject(self, alpha: float, rule: str = "pvalue") -> tuple[bool, bool]:
        """(CvM rejects, KS rejects) at level ``alpha``.

        ``rule="pvalue"`` compares p-values with alpha; ``rule="critical"``
        compares statistics with the order-statistic critical values.
        """
        if rule == "pvalue":
            return self.pval_cvm <= alpha, self.pval_ks <= alpha
        c_cvm, c_ks = self.crit[alpha] if alpha in self.crit else critical_values(
            self.boot_cvm, self.boot_ks, [alpha]
        )[alpha]
        return self.stats.cvm > c_cvm, self.stats.ks > c_ks


def _philox_key(seed: int) -> np.ndarray:
    return np.random.SeedSequence(int(seed)).generate_state(2, np.uint64)


def multiplier_stream(seed: int, b: int, key=None) -> np.random.Generator:
    """Generator for bootstrap draw ``b``; the Philox counter starts at b in its top word."""
    if key is None:
        key = _philox_key(seed)
    counter = np.array([0, 0, 0, b], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def draw_multipliers(n: int, rng: np.random.Generator, spec: MultiplierSpec = MAMMEN) -> np.ndarray:
    u = rng.random(n)
    low, high = spec.values
    return np.where(u < spec.probabilities[0], low, high)


def bootstrap_process(proc: ProjectedProcess, resid, v) -> np.ndarray:
    resid = np.asarray(resid, dtype=float)
    return (resid * np.asarray(v, dtype=float)) @ proc.pw / np.sqrt(proc.n)


def pvalue(observed: float, replicates: np.ndarray) -> float:
    return (1.0 + np.count_nonzero(replicates >= observed)) / (replicates.size + 1.0)


def critical_values(boot_cvm, boot_ks, alphas) -> dict:
    """The ceil(B(1 - alpha))-th smallest replicate for each alpha."""
    B = len(boot_cvm)
    s_cvm, s_ks = np.sort(boot_cvm), np.sort(boot_ks)
    out = {}
    for a in alphas:
        rank = max(1, min(B, math.ceil(B * (1.0 - a) - 1e-9)))
        out[float(a)] = (float(s_cvm[rank - 1]), float(s_ks[rank - 1]))
    return out


def run_bootstrap(
    fitted: FittedModel,
    proc: ProjectedProcess,
    B: int = 999,
    seed: int = 0,
    alphas=DEFAULT_ALPHAS,
) -> TestResult:
    if B < 1:
        raise ValueError("B must be at least 1")
    n = proc.n
    resid = np.asarray(fitted.resid, dtype=float)
    marked = resid[:, None] * proc.pw  # shared by every draw
    scale = 1.0 / np.sqrt(n)
    boot_cvm = np.empty(B)
    boot_ks = np.empty(B)
    key = _philox_key(seed)
    for start in range(0, B, _CHUNK):
        stop = min(B, start + _CHUNK)
        v = np.stack([draw_multipliers(n, multiplier_stream(seed, b, key)) for b in range(start, stop)])
        rstar = (v @ marked) * scale
        boot_cvm[start:stop] = np.mean(np.square(rstar[:, proc.knot_index]), axis=1)
        boot_ks[start:stop] = np.max(np.abs(rstar), axis=1)
    observed = stat_pair(proc)
    return TestResult(
        stats=observed,
        boot_cvm=boot_cvm,
        boot_ks=boot_ks,
        pval_cvm=float(pvalue(observed.cvm, boot_cvm)),
        pval_ks=float(pvalue(observed.ks, boot_ks)),
        crit=critical_values(boot_cvm, boot_ks, alphas),
        B=int(B),
        seed=int(seed),
    )
