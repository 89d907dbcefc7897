"""Cramer-von Mises and Kolmogorov-Smirnov functionals of the projected process."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .projection import ProjectedProcess


@dataclass(frozen=True)
class StatPair:
    cvm: float
    ks: float


def cvm_stat(proc: ProjectedProcess) -> float:
    # integral against the EDF of fitted values == mean over observations
    return float(np.mean(np.square(proc.rp_at_obs)))


def ks_stat(proc: ProjectedProcess) -> float:
    # the step function attains its sup at a knot
    return float(np.max(np.abs(proc.rp)))


def stat_pair(proc: ProjectedProcess) -> StatPair:
    return StatPair(cvm=cvm_stat(proc), ks=ks_stat(proc))
