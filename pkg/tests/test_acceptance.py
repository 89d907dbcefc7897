"""Acceptance criteria, each at its stated tolerance.

Every test prints one ``[PASS]``/``[FAIL]`` line to the terminal (even under
output capture) before asserting.  The simulation cells use the default master
seed and are cached per module, so criteria that share a cell share its run.
Expect roughly ten minutes on a single core.
"""

import functools
import math

import numpy as np
import pytest
import sympy
from scipy.stats import kstest

import oracles
from conftest import make_fitted
from pscore_spec.bootstrap import MAMMEN, bootstrap_process
from pscore_spec.kernel_test import BANDWIDTH_CONSTANTS, sigma_hat_stat, vhat_stat
from pscore_spec.mc import DgpSpec, McConfig, generate, run_experiment
from pscore_spec.model import fit_mle
from pscore_spec.projection import projected_process
from pscore_spec.stats import cvm_stat, ks_stat

pytestmark = [pytest.mark.acceptance]

SEED = 12345
B = 499


@pytest.fixture
def verdict(capsys):
    def emit(name, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        assert ok, f"{name}: {detail}"

    return emit


@functools.lru_cache(maxsize=None)
def cell(dgp, n, reps, shaikh_c=(), estimator="mle"):
    cfg = McConfig(dgps=(dgp,), sizes=(n,), reps=reps, B=B, shaikh_c=shaikh_c, seed=SEED, estimator=estimator)
    return run_experiment(cfg)


def rate(table, dgp, n, test):
    return table.rate(dgp, n, test, 0.05), table.mcse(dgp, n, test, 0.05)


# ---------------------------------------------------------------------------
# simulation criteria
# ---------------------------------------------------------------------------


@pytest.mark.slow
def test_size_low_dimension(verdict):
    parts, ok = [], True
    for n in (200, 400):
        table = cell(1, n, 1000, (0.5,))
        for test in ("CvM", "KS"):
            r, _ = rate(table, 1, n, test)
            ok &= 0.030 <= r <= 0.075
            parts.append(f"n={n} {test}={r:.3f}")
    verdict("size, DGP1, band [0.030, 0.075]", ok, ", ".join(parts))


@pytest.mark.slow
def test_power_low_dimension(verdict):
    r2, _ = rate(cell(2, 200, 500), 2, 200, "CvM")
    r3, _ = rate(cell(3, 200, 500), 3, 200, "CvM")
    r5, _ = rate(cell(5, 1000, 500), 5, 1000, "KS")
    ok = r2 >= 0.85 and r3 >= 0.93 and 0.13 <= r5 <= 0.27
    verdict(
        "power, DGP2/3 CvM and DGP5 KS",
        ok,
        f"DGP2 n=200 CvM={r2:.3f} (>=0.85), DGP3 n=200 CvM={r3:.3f} (>=0.93), "
        f"DGP5 n=1000 KS={r5:.3f} (in [0.13, 0.27])",
    )


@pytest.mark.slow
def test_size_high_dimension(verdict):
    r, _ = rate(cell(6, 1000, 1000), 6, 1000, "CvM")
    verdict("size, DGP6 n=1000 CvM", 0.030 <= r <= 0.075, f"{r:.3f} (band [0.030, 0.075])")


@pytest.mark.slow
def test_power_ordering_high_dimension(verdict):
    r7, s7 = rate(cell(7, 1000, 500), 7, 1000, "CvM")
    r8, s8 = rate(cell(8, 1000, 500), 8, 1000, "CvM")
    r9, s9 = rate(cell(9, 1000, 500, BANDWIDTH_CONSTANTS), 9, 1000, "CvM")
    gap9, se9 = r9 - r7, math.hypot(s9, s7)
    gap8, se8 = r8 - r7, math.hypot(s8, s7)
    ok = gap9 > 3 * se9 and gap8 > 3 * se8
    verdict(
        "power ordering, n=1000 CvM",
        ok,
        f"DGP7={r7:.3f}, DGP8={r8:.3f}, DGP9={r9:.3f}; "
        f"DGP9-DGP7={gap9:.3f} vs 3se={3 * se9:.3f}, DGP8-DGP7={gap8:.3f} vs 3se={3 * se8:.3f}",
    )


@pytest.mark.slow
def test_dgp9_cvm_band(verdict):
    r9, _ = rate(cell(9, 1000, 500, BANDWIDTH_CONSTANTS), 9, 1000, "CvM")
    verdict("DGP9 n=1000 CvM example band", 0.40 <= r9 <= 0.62, f"{r9:.3f} (band [0.40, 0.62])")


@pytest.mark.slow
def test_kernel_test_contrast(verdict):
    t1, _ = rate(cell(1, 200, 1000, (0.5,)), 1, 200, "T(0.50)")
    t2, _ = rate(cell(2, 400, 500, (0.1,)), 2, 400, "T(0.10)")
    table9 = cell(9, 1000, 500, BANDWIDTH_CONSTANTS)
    t9 = {c: table9.rate(9, 1000, f"T({c:.2f})", 0.05) for c in BANDWIDTH_CONSTANTS}
    ok = t1 <= 0.01 and t2 >= 0.90 and all(v <= 0.12 for v in t9.values())
    verdict(
        "kernel test contrast",
        ok,
        f"DGP1 n=200 T(0.50)={t1:.3f} (<=0.01), DGP2 n=400 T(0.10)={t2:.3f} (>=0.90), DGP9 n=1000 "
        + " ".join(f"T({c:.2f})={v:.3f}" for c, v in t9.items())
        + " (each <=0.12)",
    )


@pytest.mark.slow
def test_estimator_invariance(verdict):
    r_mle, s_mle = rate(cell(1, 2000, 300), 1, 2000, "CvM")
    r_nlls, s_nlls = rate(cell(1, 2000, 300, (), "nlls"), 1, 2000, "CvM")
    gap, bound = abs(r_mle - r_nlls), 3 * math.hypot(s_mle, s_nlls)
    verdict(
        "MLE vs NLLS, DGP1 n=2000 CvM",
        gap < bound,
        f"mle={r_mle:.3f}, nlls={r_nlls:.3f}, |diff|={gap:.3f} < 3se={bound:.3f}",
    )


@pytest.mark.slow
def test_pvalue_uniformity(verdict):
    p = cell(1, 400, 1000, (0.5,)).cells[(1, 400)].pval_cvm
    dist = kstest(p, "uniform").statistic
    verdict("p-value uniformity, DGP1 n=400 CvM", dist <= 0.06, f"Kolmogorov distance {dist:.4f} (<=0.06)")


# ---------------------------------------------------------------------------
# exact identities (no simulation)
# ---------------------------------------------------------------------------


def test_exact_identities(verdict):
    checks = {}

    worst = 0.0
    for dgp, n in ((1, 200), (3, 500), (8, 400)):
        f = fit_mle(generate(DgpSpec(dgp, n), np.random.default_rng(dgp)))
        proc = projected_process(f)
        worst = max(worst, float(np.max(np.abs(f.grad.T @ proc.pw / f.n))))
        v1 = bootstrap_process(proc, f.resid, np.ones(f.n))
        same = float(np.mean(v1[proc.knot_index] ** 2)) == cvm_stat(proc) and float(
            np.max(np.abs(v1))
        ) == ks_stat(proc)
        checks.setdefault("multiplier identity", True)
        checks["multiplier identity"] &= same
    checks["orthogonality <= 1e-10"] = worst <= 1e-10

    # knot-mass oracle on a 60-point fit with forced ties
    f = fit_mle(generate(DgpSpec(1, 60), np.random.default_rng(11)))
    q = np.round(f.qhat, 1)
    tied = make_fitted(q, f.resid, f.grad)
    cvm = cvm_stat(projected_process(tied))
    checks["CvM knot-mass oracle 1e-12"] = abs(cvm - oracles.cvm_knot_mass(f.grad, list(q), list(f.resid))) <= 1e-12

    rng = np.random.default_rng(0)
    q = np.sort(rng.uniform(0.02, 0.98, 25))
    while np.min(np.diff(q)) <= 1e-4:
        q = np.sort(rng.uniform(0.02, 0.98, 25))
    g = np.column_stack([np.ones(25), rng.standard_normal(25)]) * 0.3
    r = rng.standard_normal(25) * 0.4
    ks = ks_stat(projected_process(make_fitted(q, r, g)))
    checks["KS dense-grid oracle"] = abs(ks - oracles.ks_dense(g, q, r)) <= 1e-12

    q5, r5 = [0.12, 0.35, 0.41, 0.77, 0.9], [-0.12, 0.65, -0.41, 0.23, -0.9]
    f5 = make_fitted(q5, r5)
    ok = True
    for h in (0.1, 0.3):
        ok &= abs(vhat_stat(f5, h) - oracles.vhat_naive(q5, r5, h)) <= 1e-12
        ok &= abs(sigma_hat_stat(f5, h) - oracles.sigma_naive(q5, r5, h)) <= 1e-12
    checks["V/Sigma naive oracles 1e-12"] = ok

    k = (sympy.sqrt(5) + 1) / 2
    p = k / sympy.sqrt(5)
    mean = sympy.simplify((1 - k) * p + k * (1 - p))
    var = sympy.simplify((1 - k) ** 2 * p + k**2 * (1 - p) - mean**2)
    checks["Mammen mean 0 / variance 1 (exact)"] = mean == 0 and var == 1 and abs(MAMMEN.variance - 1) < 1e-12

    detail = ", ".join(f"{name}={'ok' if v else 'FAILED'}" for name, v in checks.items())
    verdict("exact-identity suite", all(checks.values()), f"{detail}; max |G'Pw|/n={worst:.2e}")
