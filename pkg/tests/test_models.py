import jax.numpy as jnp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import norm

from conftest import random_state
from oracles import S_of, exact_lml, gaussian_ell, kern, kl_dense, qf_dense, svgp_nelbo_dense, swsgp_nelbo_dense
from swsgp import kernels, models, neighbors
from swsgp.errors import ConfigError, DataError, NumericError, ShapeError
from swsgp.models import LikelihoodParams, PredictiveGaussian, SparseGPState
from swsgp.neighbors import NeighborMask


def prior_state(rng, M=4, D=1):
    state = random_state(rng, M=M, D=D)
    K = kern(state.Z, state.Z, state.kernel)
    return state.replace(m=np.zeros(M), cov_factor=np.linalg.cholesky(K))


# -- svgp_qf ------------------------------------------------------------------


def test_svgp_prior_collapse(rng):
    state = prior_state(rng)
    X = rng.standard_normal((5, 1))
    q = models.svgp_qf(X, state, full_cov=True, jitter=0.0)
    np.testing.assert_allclose(q.mean, 0.0, atol=1e-10)
    np.testing.assert_allclose(q.covariance, kern(X, X, state.kernel), atol=1e-9)


def test_svgp_identity_at_inducing_inputs(rng):
    state = prior_state(rng).replace(m=rng.standard_normal(4))
    q = models.svgp_qf(np.asarray(state.Z), state, jitter=0.0)
    np.testing.assert_allclose(q.mean, state.m, atol=1e-9)


@pytest.mark.parametrize("diagonal", [False, True])
@pytest.mark.parametrize("kernel", ["matern52", "matern32", "sum"])
def test_svgp_qf_against_dense(rng, diagonal, kernel):
    state = random_state(rng, M=5, D=2, diagonal=diagonal, kernel=kernel)
    X = rng.standard_normal((3, 2))
    mu, cov = qf_dense(X, state.Z, state.m, S_of(state), state.kernel)
    q = models.svgp_qf(X, state, full_cov=True, jitter=0.0)
    np.testing.assert_allclose(q.mean, mu, atol=1e-8)
    np.testing.assert_allclose(q.covariance, cov, atol=1e-8)
    qm = models.svgp_qf(X, state, jitter=0.0)
    np.testing.assert_allclose(qm.variance, np.diag(cov), atol=1e-8)


def test_svgp_qf_dimension_error(rng):
    with pytest.raises(ShapeError):
        models.svgp_qf(np.zeros((2, 3)), random_state(rng, D=2))


# -- svgp_nelbo ---------------------------------------------------------------


def exact_posterior_state(rng, N=8, D=1):
    X = rng.uniform(-2, 2, size=(N, D))
    y = np.sin(2 * X[:, 0]) + 0.1 * rng.standard_normal(N)
    k = kernels.matern52(1.2, np.full(D, 0.8))
    nv = 0.05
    K = kern(X, X, k)
    G = np.linalg.inv(K + nv * np.eye(N))
    m = K @ G @ y
    S = K - K @ G @ K
    state = SparseGPState(X, m, np.linalg.cholesky(S), k, LikelihoodParams.gaussian(nv), N)
    return X, y, state


def test_nelbo_equals_lml_at_exact_posterior(rng):
    X, y, state = exact_posterior_state(rng)
    nelbo = models.svgp_nelbo((X, y), state, jitter=0.0)
    assert nelbo == pytest.approx(-exact_lml(X, y, state.kernel, 0.05), abs=1e-6)


@pytest.mark.parametrize("likelihood", ["gaussian", "probit"])
def test_nelbo_against_dense(rng, likelihood):
    state = random_state(rng, M=5, D=2, likelihood=likelihood, n_train=37)
    X = rng.standard_normal((6, 2))
    y = rng.standard_normal(6) if likelihood == "gaussian" else rng.choice([-1.0, 1.0], 6)
    got = models.svgp_nelbo((X, y), state, jitter=0.0, gh_order=60)
    assert got == pytest.approx(svgp_nelbo_dense(X, y, state), rel=1e-9, abs=1e-9)


def test_nelbo_kl_vanishes_at_prior(rng):
    state = prior_state(rng)
    X, y = rng.standard_normal((4, 1)), rng.standard_normal(4)
    ell, kl = models.svgp_nelbo_terms((X, y), state, jitter=0.0)
    assert kl == pytest.approx(0.0, abs=1e-9)
    assert models.svgp_nelbo((X, y), state, jitter=0.0) == pytest.approx(-state.n_train / 4 * ell, rel=1e-12)


def test_nelbo_scales_linearly_in_n_train(rng):
    state = random_state(rng, M=4, D=1, n_train=10)
    X, y = rng.standard_normal((3, 1)), rng.standard_normal(3)
    ell, kl = models.svgp_nelbo_terms((X, y), state)
    a = models.svgp_nelbo((X, y), state)
    b = models.svgp_nelbo((X, y), state.replace(n_train=20))
    assert a == pytest.approx(-(10 / 3 * ell - kl), rel=1e-12)
    assert b - a == pytest.approx(-10 / 3 * ell, rel=1e-10)


def test_nelbo_probit_label_check(rng):
    state = random_state(rng, likelihood="probit", D=1)
    with pytest.raises(DataError):
        models.svgp_nelbo((np.zeros((2, 1)), np.array([0.0, 1.0])), state)


def test_nelbo_non_finite(rng):
    state = random_state(rng, D=1)
    with pytest.raises(NumericError):
        models.svgp_nelbo((np.zeros((1, 1)), np.array([np.inf])), state)


@given(st.integers(0, 2**31 - 1), st.integers(2, 8))
def test_elbo_is_lower_bound(seed, N):
    r = np.random.default_rng(seed)
    X = r.uniform(-2, 2, size=(N, 1))
    y = r.standard_normal(N)
    M = int(r.integers(1, N + 1))
    state = random_state(r, M=M, D=1, n_train=N).replace(Z=r.uniform(-2, 2, (M, 1)))
    lml = exact_lml(X, y, state.kernel, state.likelihood.noise_variance)
    assert -models.svgp_nelbo((X, y), state, jitter=0.0) <= lml + 1e-8


# -- extract_subparams --------------------------------------------------------


def test_extract_full_mask(rng):
    state = random_state(rng, M=5)
    m_w, S_w = models.extract_subparams(NeighborMask(np.arange(5)), state)
    np.testing.assert_array_equal(m_w, state.m)
    np.testing.assert_allclose(S_w, S_of(state), atol=1e-15)


def test_extract_identity_factor(rng):
    state = random_state(rng, M=4).replace(cov_factor=np.eye(4))
    _, S_w = models.extract_subparams(NeighborMask(np.array([0, 2])), state)
    np.testing.assert_array_equal(S_w, np.eye(2))


@pytest.mark.parametrize("diagonal", [False, True])
def test_extract_against_dense_masking(rng, diagonal):
    state = random_state(rng, M=6, diagonal=diagonal)
    mask = np.array([1, 3, 4])
    D = np.eye(6)[mask]
    m_w, S_w = models.extract_subparams(mask, state)
    np.testing.assert_allclose(m_w, D @ state.m, atol=1e-12)
    np.testing.assert_allclose(S_w, D @ S_of(state) @ D.T, atol=1e-12)


def test_extract_out_of_range(rng):
    with pytest.raises(ShapeError):
        models.extract_subparams(np.array([0, 6]), random_state(rng, M=6))


# -- swsgp_qf_point -----------------------------------------------------------


@pytest.mark.parametrize("diagonal", [False, True])
def test_point_full_mask_equals_svgp(rng, diagonal):
    state = random_state(rng, M=6, diagonal=diagonal)
    x = rng.standard_normal((1, 2))
    a = models.swsgp_qf_point(x, np.arange(6), state)
    b = models.svgp_qf(x, state)
    np.testing.assert_allclose(a.mean, b.mean, atol=1e-10)
    np.testing.assert_allclose(a.variance, b.variance, atol=1e-10)


def test_point_prior_collapse(rng):
    state = random_state(rng, M=5, D=1)
    mask = np.array([1, 4])
    Zh = np.asarray(state.Z)[mask]
    L = np.zeros((5, 5))
    L[np.ix_(mask, mask)] = np.linalg.cholesky(kern(Zh, Zh, state.kernel))
    state = state.replace(m=np.zeros(5), cov_factor=L + np.diag(np.where(np.isin(np.arange(5), mask), 0, 1.0)))
    q = models.swsgp_qf_point(np.array([[0.37]]), mask, state, jitter=0.0)
    assert float(q.mean[0]) == pytest.approx(0.0, abs=1e-10)
    assert float(q.variance[0]) == pytest.approx(state.kernel.variance, abs=1e-9)


@pytest.mark.parametrize("diagonal", [False, True])
def test_point_against_dense(rng, diagonal):
    state = random_state(rng, M=4, D=1, diagonal=diagonal)
    mask = np.array([0, 2])
    x = np.array([[0.3]])
    S = S_of(state)
    mu, cov = qf_dense(x, np.asarray(state.Z)[mask], state.m[mask], S[np.ix_(mask, mask)], state.kernel)
    q = models.swsgp_qf_point(x, NeighborMask(mask), state, jitter=0.0)
    assert float(q.mean[0]) == pytest.approx(mu[0], abs=1e-8)
    assert float(q.variance[0]) == pytest.approx(cov[0, 0], abs=1e-8)


@given(st.integers(0, 2**31 - 1), st.integers(1, 6), st.booleans())
def test_point_variance_bounds(seed, H, diagonal):
    r = np.random.default_rng(seed)
    state = random_state(r, M=6, D=2, diagonal=diagonal)
    x = r.standard_normal((1, 2)) * 2
    mask = neighbors.find_h_nearest(x[0], state.Z, H, state.kernel)
    q = models.swsgp_qf_point(x, mask, state)
    idx = mask.active_indices
    Zh = np.asarray(state.Z)[idx]
    A = kern(x, Zh, state.kernel) @ np.linalg.inv(kern(Zh, Zh, state.kernel))
    bound = state.kernel.variance + (A @ S_of(state)[np.ix_(idx, idx)] @ A.T).item()
    assert 0.0 <= float(q.variance[0]) <= bound + 1e-8


# -- swsgp_nelbo_minibatch ----------------------------------------------------


@given(st.integers(0, 2**31 - 1), st.booleans())
def test_full_mask_reduction(seed, diagonal):
    r = np.random.default_rng(seed)
    state = random_state(r, M=5, D=2, diagonal=diagonal, n_train=30)
    X, y = r.standard_normal((7, 2)), r.standard_normal(7)
    masks = [NeighborMask(np.arange(5))] * 7
    a = models.swsgp_nelbo_minibatch((X, y), masks, state, jitter=0.0)
    b = models.svgp_nelbo((X, y), state, jitter=0.0)
    assert a == pytest.approx(b, rel=1e-10, abs=1e-10)


def test_minibatch_against_dense(rng):
    state = random_state(rng, M=8, D=2, n_train=50)
    X, y = rng.standard_normal((5, 2)), rng.standard_normal(5)
    masks = neighbors.mask_minibatch(X, state.Z, 3, state.kernel)
    got = models.swsgp_nelbo_minibatch((X, y), masks, state, jitter=0.0)
    ref = swsgp_nelbo_dense(X, y, [m.active_indices for m in masks], state)
    assert got == pytest.approx(ref, rel=1e-9)


def test_h1_scalar_case():
    x, z, yv = 0.4, -0.2, 0.7
    var, ls, nv, m, s, N = 1.3, 0.9, 0.2, 0.5, 0.6, 11
    r = abs(x - z) / ls
    kxz = var * (1 + np.sqrt(5) * r + 5 * r**2 / 3) * np.exp(-np.sqrt(5) * r)
    a = kxz / var
    mu, v = a * m, var + a * a * (s * s - var)
    ell = -0.5 * np.log(2 * np.pi * nv) - ((yv - mu) ** 2 + v) / (2 * nv)
    kl = 0.5 * (s * s / var + m * m / var - 1 + np.log(var) - np.log(s * s))
    expected = -(N * ell - kl)
    state = SparseGPState(np.array([[z]]), np.array([m]), np.array([[s]]),
                          kernels.matern52(var, [ls]), LikelihoodParams.gaussian(nv), N)
    got = models.swsgp_nelbo_minibatch((np.array([[x]]), np.array([yv])), [NeighborMask(np.array([0]))], state, jitter=0.0)
    assert got == pytest.approx(expected, rel=1e-12)


def test_duplicated_batch_invariance(rng):
    state = random_state(rng, M=8, D=2, n_train=40)
    X, y = rng.standard_normal((4, 2)), rng.standard_normal(4)
    masks = neighbors.mask_minibatch(X, state.Z, 3, state.kernel)
    a = models.swsgp_nelbo_minibatch((X, y), masks, state)
    b = models.swsgp_nelbo_minibatch((np.vstack([X, X]), np.concatenate([y, y])), masks + masks, state)
    assert a == pytest.approx(b, rel=1e-12)


def test_minibatch_errors(rng):
    state = random_state(rng, M=5, D=1)
    X, y = rng.standard_normal((2, 1)), rng.standard_normal(2)
    with pytest.raises(ShapeError):
        models.swsgp_nelbo_minibatch((X, y), [NeighborMask(np.arange(2))], state)
    with pytest.raises(ShapeError):
        models.swsgp_nelbo_minibatch((X, y), [NeighborMask(np.arange(2)), NeighborMask(np.arange(3))], state)
    with pytest.raises(NumericError) as exc:
        models.swsgp_nelbo_minibatch((X, np.array([0.0, np.nan])), [NeighborMask(np.arange(2))] * 2, state)
    assert exc.value.blocks == ["batch[1]"]


# -- swsgp_predict ------------------------------------------------------------


def test_joint_single_point_matches_marginal(rng):
    state = random_state(rng, M=8, D=2)
    x = rng.standard_normal((1, 2))
    a = models.swsgp_predict(x, state, 3, joint=True)
    b = models.swsgp_predict(x, state, 3)
    np.testing.assert_allclose(a.mean, b.mean, atol=1e-12)
    np.testing.assert_allclose(a.variance, b.variance, atol=1e-12)


def test_joint_full_mask_marginals(rng):
    state = random_state(rng, M=8, D=2)
    X = rng.standard_normal((5, 2))
    a = models.swsgp_predict(X, state, 8, joint=True)
    b = models.swsgp_predict(X, state, 8)
    np.testing.assert_allclose(a.variance, b.variance, atol=1e-10)
    np.testing.assert_allclose(a.mean, b.mean, atol=1e-10)
    np.testing.assert_allclose(a.covariance, a.covariance.T)


def test_joint_union_matches_dense(rng):
    state = random_state(rng, M=10, D=2)
    X = rng.standard_normal((4, 2))
    q = models.swsgp_predict(X, state, 2, joint=True, jitter=0.0)
    union = np.unique(neighbors.nearest_indices(X, state.Z, 2, state.kernel))
    S = S_of(state)
    mu, cov = qf_dense(X, np.asarray(state.Z)[union], state.m[union], S[np.ix_(union, union)], state.kernel)
    np.testing.assert_allclose(q.mean, mu, atol=1e-8)
    np.testing.assert_allclose(q.covariance, cov, atol=1e-8)


def test_marginal_predict_uses_own_masks(rng):
    state = random_state(rng, M=10, D=2)
    X = rng.standard_normal((6, 2))
    q = models.swsgp_predict(X, state, 3, chunk=4)
    for i, x in enumerate(X):
        p = models.swsgp_qf_point(x[None], neighbors.find_h_nearest(x, state.Z, 3, state.kernel), state)
        assert q.mean[i] == pytest.approx(float(p.mean[0]), abs=1e-12)


def test_negative_variance_clamped(caplog):
    q = PredictiveGaussian.build(np.zeros(2), np.array([-1e-12, -1e-3]))
    np.testing.assert_array_equal(q.variance, [0.0, 0.0])
    assert "clamping" in caplog.text


# -- likelihoods and metrics -------------------------------------------------


def test_gaussian_ell_perfect_fit():
    lik = LikelihoodParams.gaussian(1.0)
    assert float(models.expected_log_lik(0.3, 0.0, 0.3, lik)) == pytest.approx(-0.5 * np.log(2 * np.pi))


def test_gaussian_ell_matches_quadrature(rng):
    for _ in range(20):
        mu, var, y, nv = rng.standard_normal(), rng.uniform(0.01, 2), rng.standard_normal(), rng.uniform(0.1, 1)
        closed = float(models.expected_log_lik(mu, var, y, LikelihoodParams.gaussian(nv)))
        from swsgp.quadrature import gaussian_expectation
        quad = float(gaussian_expectation(lambda f: -0.5 * jnp.log(2 * jnp.pi * nv) - (y - f) ** 2 / (2 * nv), mu, var, order=30))
        assert closed == pytest.approx(quad, abs=1e-8)
        assert closed == pytest.approx(gaussian_ell(mu, var, y, nv), abs=1e-12)


def test_probit_ell_at_zero_variance():
    for y in (-1.0, 1.0):
        assert float(models.expected_log_lik(0.0, 0.0, y, LikelihoodParams.probit())) == pytest.approx(np.log(0.5), abs=1e-12)


@pytest.mark.parametrize("var", [0.0, 0.3, 4.0])
def test_probit_symmetric_link(var):
    lik = LikelihoodParams.probit()
    up = float(models.expected_log_lik(0.0, var, 1.0, lik))
    down = float(models.expected_log_lik(0.0, var, -1.0, lik))
    assert up == pytest.approx(down, abs=1e-12)
    assert up <= np.log(0.5) + 1e-12
    assert float(models.predictive_log_density(0.0, var, 1.0, lik)) == pytest.approx(np.log(0.5), abs=1e-12)


def test_probit_ell_against_dense_quadrature(rng):
    t, w = np.polynomial.hermite.hermgauss(80)
    for _ in range(10):
        mu, var, y = rng.standard_normal(), rng.uniform(0.01, 3), rng.choice([-1.0, 1.0])
        ref = norm.logcdf(y * (mu + np.sqrt(2 * var) * t)) @ w / np.sqrt(np.pi)
        got = float(models.expected_log_lik(mu, var, y, LikelihoodParams.probit(), gh_order=80))
        assert got == pytest.approx(ref, abs=1e-10)


def test_probit_invalid_label():
    with pytest.raises(DataError):
        models.expected_log_lik(0.0, 1.0, 0.0, LikelihoodParams.probit())


def test_predictive_density_examples():
    assert float(models.predictive_log_density(0.2, 0.4, 0.2, LikelihoodParams.gaussian(0.6))) == pytest.approx(-0.5 * np.log(2 * np.pi))
    assert float(models.predictive_log_density(1e3, 1.0, 1.0, LikelihoodParams.probit())) == pytest.approx(0.0, abs=1e-12)


def test_probit_density_monte_carlo(rng):
    for _ in range(5):
        mu, var, y = rng.standard_normal(), rng.uniform(0.1, 3), rng.choice([-1.0, 1.0])
        f = mu + np.sqrt(var) * rng.standard_normal(10**6)
        p = norm.cdf(y * f)
        est, se = p.mean(), p.std() / np.sqrt(p.size)
        got = float(models.predictive_log_density(mu, var, y, LikelihoodParams.probit()))
        assert abs(np.exp(got) - est) <= 3 * se


def test_metric_helpers():
    assert models.rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(np.sqrt(12.5))
    assert models.err_rate(np.array([1.0, -1.0, 2.0]), np.zeros(3), np.array([1.0, 1.0, -1.0])) == pytest.approx(2 / 3)


def test_likelihood_validation():
    with pytest.raises(ConfigError):
        LikelihoodParams.gaussian(0.0)


# -- prior sampling -----------------------------------------------------------


def test_prior_identity_random_masks():
    r = np.random.default_rng(5)
    for _ in range(100):
        M = int(r.integers(2, 7))
        state = random_state(r, M=M, D=2, kernel=str(r.choice(["matern52", "matern32", "sum"])))
        X = r.standard_normal((int(r.integers(1, 5)), 2))
        mask = np.sort(r.choice(M, size=int(r.integers(1, M + 1)), replace=False))
        np.testing.assert_allclose(models.marginal_prior_cov(X, state, mask), kern(X, X, state.kernel), atol=1e-8)


@pytest.mark.parametrize("mask", [np.array([1, 3]), np.arange(4)])
def test_prior_samples_monte_carlo(rng, mask):
    state = random_state(rng, M=4, D=1)
    X = rng.uniform(-2, 2, size=(3, 1))
    n = 10**5
    f = models.sample_prior_f(X, state, mask, n, np.random.default_rng(0))
    assert f.shape == (n, 3)
    K = kern(X, X, state.kernel)
    emp = f.T @ f / n
    se = np.sqrt((np.outer(np.diag(K), np.diag(K)) + K**2) / n)
    assert np.all(np.abs(emp - K) <= 5 * se)
    assert np.all(np.abs(f.mean(axis=0)) <= 5 * np.sqrt(np.diag(K) / n))


# -- state ----------------------------------------------------------------------


def test_state_validation(rng):
    state = random_state(rng, M=4, D=2)
    with pytest.raises(ShapeError):
        state.replace(m=np.zeros(3)).validate()
    flat = state.unconstrained()
    back = state.from_unconstrained(flat)
    np.testing.assert_allclose(np.asarray(back.cov_factor), np.asarray(state.cov_factor), atol=1e-12)
    assert float(back.likelihood.noise_variance) == pytest.approx(state.likelihood.noise_variance, rel=1e-12)


@pytest.mark.slow
def test_mean_deviation_shrinks_with_h():
    from swsgp import data, trainer
    ds = data.normalize(data.synthetic_1d(500, seed=0))
    # the raw input range, so no point lies far outside the data
    grid = ((np.linspace(-3, 3, 200) - ds.feature_means[0]) / ds.feature_stds[0])[:, None]
    M = 32
    ref_cfg = trainer.TrainConfig(model="svgp", M=M, H=M, batch_size=64, learning_rate=0.01, max_iters=3000, eval_every=10**6)
    ref = trainer.train(ds, ref_cfg)[0]
    ref_mean = models.svgp_qf(grid, ref).mean
    devs = []
    for H in (2, 4, 8, 16, 32):
        cfg = trainer.TrainConfig(model="swsgp", M=M, H=H, batch_size=64, learning_rate=0.01, max_iters=3000,
                                  eval_every=10**6, train_kernel=False, train_noise=False)
        init = trainer.init_state(ds, cfg).replace(kernel=ref.kernel, likelihood=ref.likelihood)
        st_ = trainer.train(ds, cfg, state=init)[0]
        devs.append(float(np.mean(np.abs(models.swsgp_predict(grid, st_, H).mean - ref_mean))))
    for a, b in zip(devs, devs[1:]):
        assert b <= 1.1 * a, devs
