"""Projected residual-marked empirical process on the indicator-weight grid.

With w(q, u) = 1{q <= u} the process is a right-continuous step function of u
that only jumps at fitted propensities, so everything is evaluated on the
sorted unique fitted values (the knots).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import SingularDesign
from .model import RCOND_TOL, FittedModel


@dataclass(frozen=True)
class WeightMatrix:
    u_grid: np.ndarray  # (m,) sorted unique fitted propensities
    w: np.ndarray  # (n, m), w[i, j] = 1{qhat_i <= u_j}
    knot_index: np.ndarray  # (n,), u_grid[knot_index[i]] == qhat_i


@dataclass(frozen=True)
class ProjectionParts:
    gram: np.ndarray  # (k, k) Delta_n
    gram_solve: tuple  # Cholesky factor of gram, for cho_solve
    gbar: np.ndarray  # (k, m) columns G_n(u_j)


@dataclass(frozen=True)
class ProjectedProcess:
    u_grid: np.ndarray
    pw: np.ndarray  # (n, m) projected weights
    rp: np.ndarray  # (m,) process at the knots
    rp_at_obs: np.ndarray  # (n,) process at each observation's own fitted value
    knot_index: np.ndarray

    @property
    def n(self) -> int:
        return self.pw.shape[0]


def build_weights(fitted: FittedModel) -> WeightMatrix:
    q = np.asarray(fitted.qhat)
    u_grid, knot_index = np.unique(q, return_inverse=True)
    # row i is zero before its own knot and one from it onwards
    w = (knot_index[:, None] <= np.arange(u_grid.size)[None, :]).astype(float)
    return WeightMatrix(u_grid=u_grid, w=w, knot_index=knot_index.ravel())


def build_projection(fitted: FittedModel, wmat: WeightMatrix) -> ProjectionParts:
    g = np.asarray(fitted.grad)
    n = g.shape[0]
    gram = g.T @ g / n
    eig = np.linalg.eigvalsh(gram)
    if eig[-1] <= 0 or eig[0] / eig[-1] < RCOND_TOL:
        raise SingularDesign(
            f"gradient Gram matrix is singular (eigenvalues {eig[0]:.3g}..{eig[-1]:.3g}); "
            "the projection is undefined"
        )
    factor = linalg.cho_factor(gram, lower=True)
    gbar = g.T @ wmat.w / n
    return ProjectionParts(gram=gram, gram_solve=factor, gbar=gbar)


def project_weights(
    fitted: FittedModel, wmat: WeightMatrix, parts: ProjectionParts
) -> ProjectedProcess:
    g = np.asarray(fitted.grad)
    n = g.shape[0]
    coef = linalg.cho_solve(parts.gram_solve, parts.gbar)  # (k, m)
    pw = wmat.w - g @ coef
    rp = fitted.resid @ pw / np.sqrt(n)
    return ProjectedProcess(
        u_grid=wmat.u_grid,
        pw=pw,
        rp=rp,
        rp_at_obs=rp[wmat.knot_index],
        knot_index=wmat.knot_index,
    )


def projected_process(fitted: FittedModel) -> ProjectedProcess:
    """Weights, projection and process in one call."""
    wmat = build_weights(fitted)
    parts = build_projection(fitted, wmat)
    return project_weights(fitted, wmat, parts)


def unprojected_process(fitted: FittedModel, wmat: WeightMatrix) -> np.ndarray:
    """The raw residual-marked process at the knots, no projection applied."""
    n = fitted.qhat.shape[0]
    return fitted.resid @ wmat.w / np.sqrt(n)


def process_at(proc: ProjectedProcess, u) -> np.ndarray:
    """Evaluate the step function at arbitrary points ``u`` (0 left of the first knot)."""
    u = np.asarray(u, dtype=float)
    j = np.searchsorted(proc.u_grid, u, side="right") - 1
    out = np.where(j >= 0, proc.rp[np.clip(j, 0, None)], 0.0)
    return out
