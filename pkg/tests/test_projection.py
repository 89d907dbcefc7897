import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import make_fitted
from pscore_spec.errors import SingularDesign
from pscore_spec.mc import DgpSpec, generate
from pscore_spec.model import Dataset, fit_mle, model_at
from pscore_spec.projection import (
    build_projection,
    build_weights,
    process_at,
    project_weights,
    projected_process,
    unprojected_process,
)

# oracles.gram_and_gbar / projected_process_direct on the hand dataset
HAND_GRAM = [[0.10851504969799744, -0.015711356597426455], [-0.015711356597426455, 0.06068416941854903]]
HAND_GBAR = [
    [0.08801633169107487, 0.1877469151375954, 0.2734828788924414, 0.31914515023969686],
    [-0.08801633169107487, -0.11793550672503103, -0.07506752484760804, -0.0065741178267248075],
]
HAND_RP = [0.06329530392926562, -0.06950286083143742, 0.046104611425004244, -0.002922736493284568]
HAND_UNPROJ = [-0.15426876936299347, -0.4022740912056777, -0.2566942478115045, -0.2038693609780768]


class TestWeights:
    def test_three_points(self):
        w = build_weights(make_fitted([0.2, 0.5, 0.8], [0, 0, 0]))
        np.testing.assert_array_equal(w.w, [[1, 1, 1], [0, 1, 1], [0, 0, 1]])
        np.testing.assert_array_equal(w.u_grid, [0.2, 0.5, 0.8])

    def test_duplicates_collapse(self):
        w = build_weights(make_fitted([0.4, 0.4], [0, 0]))
        np.testing.assert_array_equal(w.u_grid, [0.4])
        np.testing.assert_array_equal(w.w, [[1], [1]])

    def test_trailing_ones_match_rank(self):
        q = np.random.default_rng(3).uniform(size=5).round(1)
        w = build_weights(make_fitted(q, np.zeros(5)))
        uniq = sorted(set(q.tolist()))
        for i in range(5):
            rank = uniq.index(q[i])  # zero-based position among unique values
            expected = [0] * rank + [1] * (len(uniq) - rank)
            assert w.w[i].tolist() == expected

    @settings(max_examples=40, deadline=None)
    @given(st.lists(st.sampled_from([0.1, 0.2, 0.35, 0.6, 0.61, 0.9]), min_size=1, max_size=12))
    def test_structure(self, q):
        w = build_weights(make_fitted(q, np.zeros(len(q))))
        assert np.all(np.diff(w.w, axis=1) >= 0)
        assert np.all(w.w[:, -1] == 1)
        assert set(np.unique(w.w)) <= {0.0, 1.0}
        assert w.w.shape[1] <= len(q)


class TestProjectionParts:
    def test_unit_gradient(self):
        f = make_fitted([0.1, 0.3, 0.5, 0.9], np.zeros(4))
        parts = build_projection(f, build_weights(f))
        np.testing.assert_allclose(parts.gram, [[1.0]])

    def test_hand_dataset(self, hand_model):
        parts = build_projection(hand_model, build_weights(hand_model))
        np.testing.assert_allclose(parts.gram, HAND_GRAM, atol=1e-12)
        np.testing.assert_allclose(parts.gbar, HAND_GBAR, atol=1e-12)

    def test_last_column_is_mean_gradient(self, dgp1_small):
        f = fit_mle(dgp1_small)
        parts = build_projection(f, build_weights(f))
        np.testing.assert_allclose(parts.gbar[:, -1], f.grad.mean(axis=0), rtol=1e-12)
        np.testing.assert_array_equal(parts.gram, parts.gram.T)
        assert np.linalg.eigvalsh(parts.gram).min() >= 0

    def test_singular_gram(self):
        f = make_fitted([0.1, 0.3, 0.5], np.zeros(3), grad=np.array([[1.0, 2.0], [2.0, 4.0], [0.5, 1.0]]))
        with pytest.raises(SingularDesign):
            build_projection(f, build_weights(f))


class TestProjectedProcess:
    def test_hand_dataset(self, hand_model):
        proc = projected_process(hand_model)
        np.testing.assert_allclose(proc.rp, HAND_RP, atol=1e-12)
        for j, u in enumerate(proc.u_grid):
            ref = oracles.projected_process_direct(hand_model.grad, hand_model.qhat, hand_model.resid, u)
            assert proc.rp[j] == pytest.approx(ref, abs=1e-12)

    def test_zero_residuals(self):
        f = make_fitted([0.2, 0.4, 0.7], np.zeros(3), grad=np.array([[1, 0.1], [1, -0.5], [1, 0.3]]))
        assert np.all(projected_process(f).rp == 0.0)

    def test_rp_at_obs(self, hand_model):
        proc = projected_process(hand_model)
        for i, q in enumerate(hand_model.qhat):
            assert proc.rp_at_obs[i] == proc.rp[list(proc.u_grid).index(q)]

    @pytest.mark.parametrize("dgp,n", [(1, 200), (3, 400), (7, 500)])
    def test_orthogonality(self, dgp, n):
        f = fit_mle(generate(DgpSpec(dgp, n), np.random.default_rng(dgp)))
        proc = projected_process(f)
        scale = np.max(np.abs(f.grad))
        assert np.max(np.abs(f.grad.T @ proc.pw / f.n)) <= 1e-10 * scale

    def test_idempotent(self):
        f = fit_mle(generate(DgpSpec(2, 300), np.random.default_rng(4)))
        proc = projected_process(f)
        g = f.grad
        again = proc.pw - g @ np.linalg.solve(g.T @ g, g.T @ proc.pw)
        assert np.max(np.abs(again - proc.pw)) <= 1e-10

    def test_step_function(self):
        f = fit_mle(generate(DgpSpec(4, 120), np.random.default_rng(8)))
        proc = projected_process(f)
        u = proc.u_grid
        mids = (u[:-1] + u[1:]) / 2
        below = u[0] / 2
        for point, expected in [(below, 0.0)] + list(zip(mids, proc.rp[:-1])):
            direct = oracles.projected_process_direct(f.grad, f.qhat, f.resid, point)
            assert direct == pytest.approx(expected, abs=1e-10)
            assert process_at(proc, point) == pytest.approx(direct, abs=1e-10)


class TestUnprojected:
    def test_hand_dataset(self, hand_model):
        w = build_weights(hand_model)
        np.testing.assert_allclose(unprojected_process(hand_model, w), HAND_UNPROJ, atol=1e-12)

    def test_zero_residuals(self, hand_model):
        f = make_fitted(hand_model.qhat, np.zeros(4), hand_model.grad)
        assert np.all(unprojected_process(f, build_weights(f)) == 0)

    def test_equals_projected_when_orthogonal(self):
        # intercept-only gradient column; residual weights already orthogonal
        # to it only if every indicator column has zero mean gradient, which
        # cannot happen for positive gradients, so use a sign-alternating column
        q = np.array([0.1, 0.1, 0.5, 0.5, 0.9, 0.9])
        g = np.array([[1.0], [-1.0], [1.0], [-1.0], [1.0], [-1.0]])
        f = make_fitted(q, np.array([0.3, -0.2, 0.1, 0.4, -0.5, 0.2]), g)
        w = build_weights(f)
        np.testing.assert_allclose(projected_process(f).rp, unprojected_process(f, w), atol=1e-15)


def _eval_unprojected(q, resid, u):
    order = np.argsort(q)
    cums = np.concatenate([[0.0], np.cumsum(resid[order])])
    return cums[np.searchsorted(q[order], u, side="right")] / np.sqrt(q.size)


def _gn(grad, q, u):
    order = np.argsort(q)
    cums = np.vstack([np.zeros(grad.shape[1]), np.cumsum(grad[order], axis=0)])
    return cums[np.searchsorted(q[order], u, side="right")] / q.size


@pytest.mark.slow
def test_linear_expansion_remainder_shrinks():
    """R(theta_hat) - [R(theta0) - sqrt(n)(theta_hat - theta0)'G_n(., theta0)] -> 0."""
    theta0 = np.ones(3)
    u = np.linspace(0.005, 0.995, 199)
    medians = []
    for n in (250, 1000, 4000):
        errs = []
        for r in range(40):
            data = generate(DgpSpec(1, n), np.random.default_rng([n, r]))
            fh = fit_mle(data)
            f0 = model_at(data, "probit", theta0)
            lhs = _eval_unprojected(fh.qhat, fh.resid, u)
            rhs = _eval_unprojected(f0.qhat, f0.resid, u) - np.sqrt(n) * _gn(f0.grad, f0.qhat, u) @ (fh.theta - theta0)
            errs.append(np.max(np.abs(lhs - rhs)))
        medians.append(np.median(errs))
    assert medians[0] > medians[1] > medians[2], medians


def test_projection_with_logit_and_ties():
    x = np.column_stack([np.ones(40), np.repeat([-1.0, 0.0, 1.0, 2.0], 10)])
    d = np.concatenate([np.r_[np.ones(k), np.zeros(10 - k)] for k in (2, 4, 7, 6)])
    f = fit_mle(Dataset(d, x), "logit")
    proc = projected_process(f)
    assert proc.u_grid.size == 4
    assert np.max(np.abs(f.grad.T @ proc.pw)) / f.n <= 1e-10
