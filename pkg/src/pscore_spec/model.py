"""Parametric propensity-score models: probit and logit links, fitted by
maximum likelihood (Newton-Raphson) or non-linear least squares.

The caller always supplies the full design matrix, intercept included.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np
from scipy import special
from scipy.optimize import linprog

from .errors import InvalidInput, NoConvergence, PerfectSeparation, SingularDesign

PROB_FLOOR = 1e-12
MAX_ITER = 100
MAX_HALVINGS = 30
GRAD_TOL = 1e-8  # multiplied by n
STEP_TOL = 1e-10
RCOND_TOL = 1e-12
_POLISH_STEPS = 3

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class LinkFamily:
    """A symmetric link F with F(-z) = 1 - F(z)."""

    tag: str = ""

    def cdf(self, z):
        raise NotImplementedError

    def log_cdf(self, z):
        raise NotImplementedError

    def pdf(self, z):
        raise NotImplementedError

    def pdf_prime(self, z):
        raise NotImplementedError

    def __repr__(self) -> str:
        return f"LinkFamily({self.tag!r})"

    def __eq__(self, other) -> bool:
        return isinstance(other, LinkFamily) and other.tag == self.tag

    def __hash__(self) -> int:
        return hash(self.tag)


class _Probit(LinkFamily):
    tag = "probit"

    def cdf(self, z):
        return special.ndtr(z)

    def log_cdf(self, z):
        return special.log_ndtr(z)

    def pdf(self, z):
        z = np.asarray(z, dtype=float)
        return np.exp(-0.5 * z * z - _LOG_SQRT_2PI)

    def pdf_prime(self, z):
        return -np.asarray(z, dtype=float) * self.pdf(z)

    def mills(self, z):
        # phi(z) / Phi(z), stable in both tails
        z = np.asarray(z, dtype=float)
        return np.exp(-0.5 * z * z - _LOG_SQRT_2PI - special.log_ndtr(z))


class _Logit(LinkFamily):
    tag = "logit"

    def cdf(self, z):
        return special.expit(z)

    def log_cdf(self, z):
        return special.log_expit(z)

    def pdf(self, z):
        return special.expit(z) * special.expit(-np.asarray(z, dtype=float))

    def pdf_prime(self, z):
        p = special.expit(z)
        return p * (1.0 - p) * (1.0 - 2.0 * p)


PROBIT = _Probit()
LOGIT = _Logit()
LINKS = {"probit": PROBIT, "logit": LOGIT}

LinkLike = Union[str, LinkFamily]


def get_link(link: LinkLike) -> LinkFamily:
    if isinstance(link, LinkFamily):
        return link
    try:
        return LINKS[str(link).lower()]
    except KeyError:
        raise InvalidInput(f"unknown link {link!r}; expected one of {sorted(LINKS)}") from None


def link_eval(link: LinkLike, z):
    """F(z) clamped to [PROB_FLOOR, 1 - PROB_FLOOR]."""
    p = get_link(link).cdf(z)
    return np.clip(p, PROB_FLOOR, 1.0 - PROB_FLOOR)


def link_density(link: LinkLike, z):
    return get_link(link).pdf(z)


def gradient_row(link: LinkLike, x, theta) -> np.ndarray:
    """d q(x, theta) / d theta = F'(x'theta) x."""
    x = np.asarray(x, dtype=float)
    return link_density(link, x @ np.asarray(theta, dtype=float)) * x


@dataclass(frozen=True)
class Dataset:
    """Binary treatment ``d`` and design matrix ``x`` (intercept column included)."""

    d: np.ndarray
    x: np.ndarray
    names: tuple = ()

    def __post_init__(self):
        d = np.asarray(self.d)
        x = np.asarray(self.x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        if d.ndim != 1 or x.ndim != 2:
            raise InvalidInput("d must be a vector and x a matrix")
        n, k = x.shape
        if d.shape[0] != n:
            raise InvalidInput(f"d has {d.shape[0]} entries but x has {n} rows")
        if n < k + 1:
            raise InvalidInput(f"need n >= k + 1 observations, got n={n}, k={k}")
        if not np.all(np.isfinite(x)):
            bad = np.argwhere(~np.isfinite(x))[0]
            raise InvalidInput(f"non-finite covariate at row {bad[0]}, column {bad[1]}")
        try:
            d_float = d.astype(float)
        except (TypeError, ValueError):
            raise InvalidInput("treatment vector is not numeric") from None
        not_binary = ~np.isin(d_float, (0.0, 1.0))
        if np.any(not_binary):
            i = int(np.flatnonzero(not_binary)[0])
            raise InvalidInput(f"treatment must be 0/1; row {i} has value {d[i]!r}")
        if np.all(d_float == d_float[0]):
            raise PerfectSeparation(
                f"treatment is constant (all {int(d_float[0])}); the likelihood has no maximiser"
            )
        names = tuple(self.names) if self.names else tuple(f"x{j}" for j in range(k))
        if len(names) != k:
            raise InvalidInput(f"{len(names)} names given for {k} columns")
        d_float.flags.writeable = False
        x = x.copy()
        x.flags.writeable = False
        object.__setattr__(self, "d", d_float)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "names", names)

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def k(self) -> int:
        return self.x.shape[1]

    def take(self, idx) -> "Dataset":
        return Dataset(self.d[idx], self.x[idx], self.names)


@dataclass(frozen=True)
class FittedModel:
    link: LinkFamily
    theta: np.ndarray
    qhat: np.ndarray
    grad: np.ndarray
    resid: np.ndarray
    converged: bool
    iterations: int
    gradient_norm: float
    method: str = "fixed"
    objective: float = float("nan")
    names: tuple = field(default=())

    @property
    def n(self) -> int:
        return self.qhat.shape[0]

    @property
    def k(self) -> int:
        return self.theta.shape[0]


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


def model_at(
    data: Dataset,
    link: LinkLike,
    theta,
    *,
    converged: bool = True,
    iterations: int = 0,
    gradient_norm: float = float("nan"),
    method: str = "fixed",
    objective: float = float("nan"),
) -> FittedModel:
    """Evaluate fitted propensities, gradient rows and residuals at ``theta``."""
    link = get_link(link)
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (data.k,):
        raise InvalidInput(f"theta has shape {theta.shape}, expected ({data.k},)")
    z = data.x @ theta
    qhat = link_eval(link, z)
    grad = link.pdf(z)[:, None] * data.x
    return FittedModel(
        link=link,
        theta=_frozen(theta),
        qhat=_frozen(qhat),
        grad=_frozen(grad),
        resid=_frozen(data.d - qhat),
        converged=converged,
        iterations=iterations,
        gradient_norm=gradient_norm,
        method=method,
        objective=objective,
        names=data.names,
    )


def check_separation(data: Dataset) -> bool:
    """True when some nonzero b has (2d-1) x'b >= 0 for every row.

    That is the (quasi-)complete separation condition under which neither
    the likelihood nor the least-squares criterion has a finite optimum.
    """
    y = 2.0 * data.d - 1.0
    a = y[:, None] * data.x
    res = linprog(
        np.zeros(data.k),
        A_ub=-a,
        b_ub=np.zeros(data.n),
        A_eq=a.sum(axis=0)[None, :],
        b_eq=[1.0],
        bounds=[(None, None)] * data.k,
        method="highs",
    )
    return res.status == 0


def _solve_spd(h: np.ndarray, rhs: np.ndarray, what: str) -> np.ndarray:
    eig = np.linalg.eigvalsh(h)
    if eig[-1] <= 0 or eig[0] / eig[-1] < RCOND_TOL:
        raise SingularDesign(
            f"{what} is singular or ill-conditioned (eigenvalue range {eig[0]:.3g}..{eig[-1]:.3g}); "
            "check for collinear or constant covariates"
        )
    return np.linalg.solve(h, rhs)


def _loglik(link: LinkFamily, d, z) -> float:
    return float(np.sum(d * link.log_cdf(z) + (1.0 - d) * link.log_cdf(-z)))


def _score_terms(link: LinkFamily, d, z):
    """Per-observation first and second derivatives of the log-likelihood in z."""
    if link.tag == "probit":
        lam1 = link.mills(z)
        lam0 = link.mills(-z)
        s = np.where(d > 0.5, lam1, -lam0)
        ds = np.where(d > 0.5, -lam1 * (z + lam1), -lam0 * (lam0 - z))
    else:
        p = link.cdf(z)
        s = d - p
        ds = -p * (1.0 - p)
    return s, ds


def _newton(data, link, objective, derivs, method, theta0=None) -> FittedModel:
    """Maximise ``objective`` by Newton steps with step halving."""
    n, k = data.n, data.k
    theta = np.zeros(k) if theta0 is None else np.asarray(theta0, dtype=float).copy()
    obj = objective(theta)
    tol = GRAD_TOL * n
    gnorm = float("inf")
    converged = False
    it = 0
    while True:
        gradient, neg_hess = derivs(theta)
        gnorm = float(np.max(np.abs(gradient)))
        if gnorm <= tol:
            converged = True
            break
        if it >= MAX_ITER:
            break
        step = _solve_spd(neg_hess, gradient, "negative Hessian")
        it += 1
        t = 1.0
        for _ in range(MAX_HALVINGS + 1):
            cand = theta + t * step
            cand_obj = objective(cand)
            if cand_obj > obj:
                break
            t *= 0.5
        else:
            raise NoConvergence(
                f"{method}: line search failed at iteration {it} (|gradient|={gnorm:.3g})"
            )
        theta, obj = cand, cand_obj
        if np.linalg.norm(t * step) <= STEP_TOL:
            gradient, _ = derivs(theta)
            gnorm = float(np.max(np.abs(gradient)))
            converged = True
            break
    if not converged:
        raise NoConvergence(
            f"{method}: no convergence after {MAX_ITER} iterations (|gradient|={gnorm:.3g})"
        )
    # the stopping rule scales with n; polish so the first-order conditions
    # hold to near machine precision
    for _ in range(_POLISH_STEPS):
        gradient, neg_hess = derivs(theta)
        try:
            cand = theta + _solve_spd(neg_hess, gradient, "negative Hessian")
        except SingularDesign:
            break
        cand_gnorm = float(np.max(np.abs(derivs(cand)[0])))
        cand_obj = objective(cand)
        if not (cand_gnorm < gnorm and cand_obj >= obj - 1e-12 * max(1.0, abs(obj))):
            break
        theta, obj, gnorm = cand, cand_obj, cand_gnorm
    return model_at(
        data,
        link,
        theta,
        converged=True,
        iterations=it,
        gradient_norm=gnorm,
        method=method,
        objective=obj,
    )


def _check_fit_input(data: Dataset):
    if not isinstance(data, Dataset):
        raise InvalidInput("expected a Dataset")
    if check_separation(data):
        raise PerfectSeparation(
            "covariates separate the treated from the untreated; the estimate diverges"
        )


def fit_mle(data: Dataset, link: LinkLike = "probit") -> FittedModel:
    """Bernoulli maximum likelihood by Newton-Raphson from theta = 0."""
    link = get_link(link)
    _check_fit_input(data)
    x, d = data.x, data.d

    def objective(theta):
        return _loglik(link, d, x @ theta)

    def derivs(theta):
        s, ds = _score_terms(link, d, x @ theta)
        return x.T @ s, (x * -ds[:, None]).T @ x

    return _newton(data, link, objective, derivs, "mle")


def fit_nlls(data: Dataset, link: LinkLike = "probit") -> FittedModel:
    """Minimise sum (d - F(x'theta))^2.

    Newton steps on the full Hessian, falling back to the Gauss-Newton
    matrix where the Hessian is not positive definite.
    """
    link = get_link(link)
    _check_fit_input(data)
    x, d = data.x, data.d

    def objective(theta):
        r = d - link.cdf(x @ theta)
        return -float(r @ r)

    def derivs(theta):
        z = x @ theta
        r = d - link.cdf(z)
        f = link.pdf(z)
        jac = f[:, None] * x
        gn = jac.T @ jac
        full = gn - (x * (r * link.pdf_prime(z))[:, None]).T @ x
        try:
            np.linalg.cholesky(full)
            h = full
        except np.linalg.LinAlgError:
            h = gn
        return jac.T @ r, h

    return _newton(data, link, objective, derivs, "nlls")


FITTERS = {"mle": fit_mle, "nlls": fit_nlls}


def fit(data: Dataset, link: LinkLike = "probit", method: str = "mle") -> FittedModel:
    try:
        fitter = FITTERS[method]
    except KeyError:
        raise InvalidInput(f"unknown estimator {method!r}; expected 'mle' or 'nlls'") from None
    return fitter(data, link)


def standard_errors(fitted: FittedModel) -> np.ndarray:
    """Inverse-information standard errors (Fisher scoring form) at theta-hat."""
    q = fitted.qhat
    w = 1.0 / (q * (1.0 - q))
    info = (fitted.grad * w[:, None]).T @ fitted.grad
    cov = np.linalg.inv(info)
    return np.sqrt(np.diag(cov))

