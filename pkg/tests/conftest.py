import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import swsgp  # noqa: F401  (enables float64 in JAX)
from swsgp import kernels
from swsgp.models import LikelihoodParams, SparseGPState

settings.register_profile(
    "default", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("default")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running checks")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_state(rng, M=6, D=2, diagonal=False, likelihood="gaussian", n_train=20,
                 kernel="matern52") -> SparseGPState:
    """Random well-conditioned sparse GP state for small-instance tests."""
    Z = rng.uniform(-2, 2, size=(M, D))
    ls = rng.uniform(0.5, 1.5, size=D)
    var = rng.uniform(0.5, 2.0)
    if kernel == "matern52":
        kern = kernels.matern52(var, ls)
    elif kernel == "matern32":
        kern = kernels.matern32(var, ls)
    else:
        kern = kernels.sum_kernel(kernels.matern32(var, ls), kernels.linear(0.3))
    m = rng.standard_normal(M)
    if diagonal:
        cf = rng.uniform(0.3, 1.0, size=M)
    else:
        cf = np.tril(0.3 * rng.standard_normal((M, M)), -1) + np.diag(rng.uniform(0.3, 1.0, M))
    lik = LikelihoodParams.gaussian(rng.uniform(0.05, 0.5)) if likelihood == "gaussian" else LikelihoodParams.probit()
    return SparseGPState(Z, m, cf, kern, lik, n_train)
