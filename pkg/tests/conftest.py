import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from pscore_spec.mc import DgpSpec, generate  # noqa: E402
from pscore_spec.model import Dataset, FittedModel, PROBIT, model_at  # noqa: E402

# four observations, two columns, theta held fixed (not estimated)
HAND_X = np.array([[1, -1.0], [1, 0.5], [1, 1.5], [1, -0.3]])
HAND_D = np.array([0, 1, 1, 0.0])
HAND_THETA = np.array([0.2, 0.7])


@pytest.fixture
def hand_model():
    return model_at(Dataset(HAND_D, HAND_X), "probit", HAND_THETA)


@pytest.fixture
def dgp1_small():
    return generate(DgpSpec(1, 50), np.random.default_rng(2024))


def make_fitted(qhat, resid, grad=None):
    """A FittedModel assembled directly from propensities and residuals."""
    qhat = np.asarray(qhat, float)
    resid = np.asarray(resid, float)
    if grad is None:
        grad = np.ones((qhat.size, 1))
    return FittedModel(
        link=PROBIT,
        theta=np.zeros(grad.shape[1]),
        qhat=qhat,
        grad=np.asarray(grad, float),
        resid=resid,
        converged=True,
        iterations=0,
        gradient_norm=0.0,
    )
