"""
SVGP and sparse-within-sparse GP (SWSGP) objectives and predictions.

Both models share ``q(u) = N(m, S)`` with ``S = L Lᵀ`` (or ``diag(s²)``) over
``M`` inducing inputs. SVGP uses every inducing variable for every point;
SWSGP restricts each point to the block of its ``H`` nearest inducing inputs,
so each point costs one ``H×H`` factorization.

Functions prefixed with an underscore are traceable by JAX and used inside the
jitted training step; the public wrappers add validation, jitter escalation
and error reporting.
"""

from __future__ import annotations

import dataclasses
import logging
from functools import partial
from typing import Any, Sequence

import jax
import jax.numpy as jnp
import jax.scipy.linalg as jsl
import numpy as np
from jax.scipy.special import log_ndtr, ndtr

from . import kernels, linalg, neighbors, quadrature
from .errors import ConfigError, DataError, FactorizationError, NumericError, ShapeError
from .kernels import KernelParams, kernel_diag, kernel_matrix, softplus, softplus_inverse
from .neighbors import NeighborMask

log = logging.getLogger(__name__)

DEFAULT_JITTER = linalg.DEFAULT_RELATIVE_JITTER
VARIANCE_WARN_THRESHOLD = 1e-10

GAUSSIAN = "gaussian"
PROBIT = "probit"


@dataclasses.dataclass(frozen=True)
class LikelihoodParams:
    kind: str
    noise_variance: Any = None

    @classmethod
    def gaussian(cls, noise_variance: float) -> "LikelihoodParams":
        if not noise_variance > 0:
            raise ConfigError(f"noise variance must be positive, got {noise_variance}")
        return cls(GAUSSIAN, float(noise_variance))

    @classmethod
    def probit(cls) -> "LikelihoodParams":
        return cls(PROBIT)


jax.tree_util.register_pytree_node(
    LikelihoodParams,
    lambda p: ((p.noise_variance,), p.kind),
    lambda kind, ch: LikelihoodParams(kind, ch[0]),
)


@dataclasses.dataclass(frozen=True)
class SparseGPState:
    """Trainable parameters of a sparse GP in constrained form.

    ``cov_factor`` is a lower-triangular ``L`` (``S = L Lᵀ``, positive
    diagonal) or a positive vector ``s`` (``S = diag(s²)``).
    """

    Z: Any
    m: Any
    cov_factor: Any
    kernel: KernelParams
    likelihood: LikelihoodParams
    n_train: int
    z_trainable: bool = True

    @property
    def M(self) -> int:
        return int(self.Z.shape[0])

    @property
    def D(self) -> int:
        return int(self.Z.shape[1])

    @property
    def diagonal(self) -> bool:
        return self.cov_factor.ndim == 1

    @property
    def S(self):
        f = jnp.asarray(self.cov_factor)
        return jnp.diag(f * f) if self.diagonal else f @ f.T

    def validate(self) -> "SparseGPState":
        M, D = np.shape(self.Z)
        if np.shape(self.m) != (M,):
            raise ShapeError(f"m has shape {np.shape(self.m)}, expected ({M},)")
        cf = np.asarray(self.cov_factor)
        if cf.shape not in ((M,), (M, M)):
            raise ShapeError(f"cov_factor has shape {cf.shape}, expected ({M},) or ({M}, {M})")
        if cf.ndim == 2 and not np.allclose(cf, np.tril(cf)):
            raise ShapeError("full covariance factor must be lower triangular")
        diag = cf if cf.ndim == 1 else np.diag(cf)
        if not np.all(diag > 0):
            raise ConfigError("covariance factor needs a strictly positive diagonal")
        if self.kernel.input_dim not in (None, D):
            raise ShapeError(f"kernel expects D={self.kernel.input_dim}, Z has D={D}")
        return self

    def unconstrained(self) -> dict[str, Any]:
        """Named raw parameter blocks; positive quantities pass through softplus."""
        flat = {"Z": jnp.asarray(self.Z, dtype=float), "m": jnp.asarray(self.m, dtype=float)}
        cf = jnp.asarray(self.cov_factor, dtype=float)
        if cf.ndim == 1:
            flat["s"] = softplus_inverse(cf)
        else:
            raw = jnp.tril(cf, -1) + jnp.diag(softplus_inverse(jnp.diagonal(cf)))
            flat["L"] = raw
        flat.update(kernels.kernel_to_unconstrained(self.kernel))
        if self.likelihood.kind == GAUSSIAN:
            flat["likelihood.noise_variance"] = softplus_inverse(
                jnp.asarray(self.likelihood.noise_variance, dtype=float)
            )
        return flat

    def from_unconstrained(self, flat: dict[str, Any]) -> "SparseGPState":
        """Rebuild a state with this state's structure from raw blocks."""
        if "s" in flat:
            cf = softplus(flat["s"])
        else:
            raw = flat["L"]
            cf = jnp.tril(raw, -1) + jnp.diag(softplus(jnp.diagonal(raw)))
        lik = self.likelihood
        if lik.kind == GAUSSIAN:
            lik = LikelihoodParams(GAUSSIAN, softplus(flat["likelihood.noise_variance"]))
        return SparseGPState(
            flat["Z"],
            flat["m"],
            cf,
            kernels.kernel_from_unconstrained(flat, self.kernel),
            lik,
            self.n_train,
            self.z_trainable,
        )

    def to_numpy(self) -> "SparseGPState":
        lik = self.likelihood
        if lik.kind == GAUSSIAN:
            lik = LikelihoodParams(GAUSSIAN, float(lik.noise_variance))
        return SparseGPState(
            np.asarray(self.Z, float),
            np.asarray(self.m, float),
            np.asarray(self.cov_factor, float),
            kernels.to_numpy(self.kernel),
            lik,
            self.n_train,
            self.z_trainable,
        )

    def replace(self, **changes) -> "SparseGPState":
        return dataclasses.replace(self, **changes)


jax.tree_util.register_pytree_node(
    SparseGPState,
    lambda s: ((s.Z, s.m, s.cov_factor, s.kernel, s.likelihood), (s.n_train, s.z_trainable)),
    lambda aux, ch: SparseGPState(*ch, *aux),
)


@dataclasses.dataclass(frozen=True)
class PredictiveGaussian:
    """Latent (or observed) Gaussian predictions.

    Marginal mode fills ``variance``; joint mode fills ``covariance`` and
    ``variance`` holds its diagonal. ``noise`` optionally carries a per-point
    observation noise for models whose noise varies by point (local experts).
    """

    mean: np.ndarray
    variance: np.ndarray
    covariance: np.ndarray | None = None
    latent: bool = True
    noise: np.ndarray | None = None

    @classmethod
    def build(cls, mean, variance=None, covariance=None, latent=True, noise=None) -> "PredictiveGaussian":
        mean = np.asarray(mean, dtype=float)
        if covariance is not None:
            covariance = np.asarray(covariance, dtype=float)
            covariance = 0.5 * (covariance + covariance.T)
            variance = np.diag(covariance).copy()
        variance = np.asarray(variance, dtype=float)
        lowest = float(variance.min()) if variance.size else 0.0
        if lowest < 0:
            if lowest < -VARIANCE_WARN_THRESHOLD:
                log.warning("clamping negative predictive variance %.3g to 0", lowest)
            variance = np.maximum(variance, 0.0)
            if covariance is not None:
                np.fill_diagonal(covariance, variance)
        if noise is not None:
            noise = np.broadcast_to(np.asarray(noise, dtype=float), mean.shape).copy()
        return cls(mean, variance, covariance, latent, noise)


# -- likelihood terms ---------------------------------------------------------


def _check_labels(y, lik: LikelihoodParams):
    if lik.kind == PROBIT and not isinstance(y, jax.core.Tracer):
        vals = np.unique(np.asarray(y))
        if not np.all(np.isin(vals, (-1.0, 1.0))):
            raise DataError(f"probit labels must be -1 or +1, got {vals[:5]}")


def _ell(mean, var, y, lik: LikelihoodParams, gh_order: int):
    if lik.kind == GAUSSIAN:
        nv = lik.noise_variance
        return -0.5 * jnp.log(2 * jnp.pi * nv) - ((y - mean) ** 2 + var) / (2 * nv)
    y = jnp.asarray(y)
    return quadrature.gaussian_expectation(
        lambda f: log_ndtr(y[..., None] * f), mean, var, gh_order
    )


def expected_log_lik(mean, var, y, lik: LikelihoodParams, gh_order: int = quadrature.DEFAULT_ORDER):
    """``E_{N(f; mean, var)}[log p(y | f)]``; closed form for Gaussian, quadrature for probit."""
    _check_labels(y, lik)
    return _ell(jnp.asarray(mean, float), jnp.asarray(var, float), jnp.asarray(y, float), lik, gh_order)


def predictive_log_density(mean, var, y, lik: LikelihoodParams):
    """``log p(y*)`` under the latent predictive ``N(mean, var)``."""
    _check_labels(y, lik)
    mean, var, y = (jnp.asarray(a, float) for a in (mean, var, y))
    if lik.kind == GAUSSIAN:
        tot = var + lik.noise_variance
        return -0.5 * jnp.log(2 * jnp.pi * tot) - (y - mean) ** 2 / (2 * tot)
    return log_ndtr(y * mean / jnp.sqrt(1.0 + var))


def rmse(mean, y) -> float:
    return float(np.sqrt(np.mean((np.asarray(mean) - np.asarray(y)) ** 2)))


def class_probability(mean, var):
    """``p(y = +1)`` under the probit link."""
    return np.asarray(ndtr(jnp.asarray(mean) / jnp.sqrt(1.0 + jnp.asarray(var))))


def err_rate(mean, var, y) -> float:
    pred = np.where(class_probability(mean, var) > 0.5, 1.0, -1.0)
    return float(np.mean(pred != np.asarray(y)))


# -- shared Gaussian conditioning --------------------------------------------


def _project(Lk, Kzx):
    """``V = Lk⁻¹ Kzx`` and ``Aᵀ = Kz⁻¹ Kzx``."""
    V = jsl.solve_triangular(Lk, Kzx, lower=True)
    At = jsl.solve_triangular(Lk.T, V, lower=False)
    return V, At


def _marginal(kxx, Kxz, Lk, m, cov_factor):
    """Mean ``A m`` and diagonal of ``K_X + A (S - K_Z) Aᵀ``."""
    V, At = _project(Lk, Kxz.T)
    mean = At.T @ m
    if cov_factor.ndim == 1:
        s_term = jnp.sum((cov_factor[:, None] * At) ** 2, axis=0)
    else:
        s_term = jnp.sum((cov_factor.T @ At) ** 2, axis=0)
    return mean, kxx - jnp.sum(V * V, axis=0) + s_term


def _joint(Kxx, Kxz, Lk, m, cov_factor):
    V, At = _project(Lk, Kxz.T)
    mean = At.T @ m
    if cov_factor.ndim == 1:
        B = cov_factor[:, None] * At
    else:
        B = cov_factor.T @ At
    return mean, Kxx - V.T @ V + B.T @ B


def _block_factor(state: SparseGPState, idx):
    """``(m_w, factor of S_w)``: rows of ``m`` and a factor of ``D_w S D_w``."""
    m_w = state.m[idx]
    if state.diagonal:
        return m_w, state.cov_factor[idx]
    L_w = state.cov_factor[idx]
    return m_w, jnp.linalg.cholesky(L_w @ L_w.T)


def extract_subparams(mask, state: SparseGPState):
    """``(m_w, S_w)`` for the active indices of ``mask``.

    Full mode forms ``S_w = L_w L_wᵀ`` from the active rows of ``L``;
    diagonal mode restricts ``s²``.
    """
    idx = _as_index(mask)
    if idx.size and (idx.min() < 0 or idx.max() >= state.M):
        raise ShapeError(f"mask index out of range for M={state.M}")
    idx = jnp.asarray(idx)
    m_w = jnp.asarray(state.m)[idx]
    cf = jnp.asarray(state.cov_factor)
    if cf.ndim == 1:
        return m_w, jnp.diag(cf[idx] ** 2)
    L_w = cf[idx]
    return m_w, L_w @ L_w.T


def _as_index(mask) -> np.ndarray:
    if isinstance(mask, NeighborMask):
        return mask.active_indices
    return np.asarray(mask, dtype=np.int64)


def _as_index_matrix(masks) -> np.ndarray:
    if isinstance(masks, np.ndarray) or isinstance(masks, jax.Array):
        return np.asarray(masks, dtype=np.int64)
    rows = [_as_index(m) for m in masks]
    if len({r.size for r in rows}) > 1:
        raise ShapeError("all masks in a batch must have the same size")
    return np.stack(rows)


# -- SVGP ---------------------------------------------------------------------


def _svgp_marginal(X, state: SparseGPState, jitter):
    Kzz = kernel_matrix(state.Z, state.Z, state.kernel)
    Lk = linalg.jittered_cholesky(Kzz, jitter)
    Kxz = kernel_matrix(X, state.Z, state.kernel)
    mean, var = _marginal(kernel_diag(X, state.kernel), Kxz, Lk, state.m, state.cov_factor)
    return mean, var, Lk


def _svgp_terms(X, y, state: SparseGPState, jitter, gh_order):
    mean, var, Lk = _svgp_marginal(X, state, jitter)
    ell = _ell(mean, var, y, state.likelihood, gh_order)
    kl = linalg.gauss_kl(state.m, state.cov_factor, Lk)
    return ell, kl


def _svgp_objective(X, y, state, jitter, gh_order):
    ell, kl = _svgp_terms(X, y, state, jitter, gh_order)
    return -(state.n_train / X.shape[0] * jnp.sum(ell) - kl)


@partial(jax.jit, static_argnames=("full_cov",))
def _svgp_qf_jit(X, state, jitter, full_cov):
    Kzz = kernel_matrix(state.Z, state.Z, state.kernel)
    Lk = linalg.jittered_cholesky(Kzz, jitter)
    Kxz = kernel_matrix(X, state.Z, state.kernel)
    if full_cov:
        return _joint(kernel_matrix(X, X, state.kernel), Kxz, Lk, state.m, state.cov_factor)
    return _marginal(kernel_diag(X, state.kernel), Kxz, Lk, state.m, state.cov_factor)


def _retry_jitter(fn, jitter: float):
    """Call ``fn(jitter)``, escalating the jitter tenfold while results are non-finite."""
    base = jitter * linalg.JITTER_GROWTH if jitter > 0 else DEFAULT_JITTER
    schedule = [jitter] + [base * linalg.JITTER_GROWTH**k for k in range(linalg.MAX_JITTER_RETRIES)]
    for eps in schedule:
        out = fn(eps)
        if all(bool(jnp.all(jnp.isfinite(o))) for o in jax.tree_util.tree_leaves(out)):
            return out
    raise FactorizationError(f"non-finite result after jitter escalation up to {schedule[-1]:.3g}")


def _check_inputs(X, state: SparseGPState) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != state.D:
        raise ShapeError(f"inputs have D={X.shape[1]}, model expects D={state.D}")
    return X


def svgp_qf(X, state: SparseGPState, full_cov: bool = False, jitter: float = DEFAULT_JITTER):
    """``q(f) = N(A m, K_X + A (S - K_Z) Aᵀ)`` with ``A = K_XZ K_Z⁻¹``."""
    X = _check_inputs(X, state)
    mean, cov = _retry_jitter(lambda eps: _svgp_qf_jit(X, state, eps, full_cov), jitter)
    if full_cov:
        return PredictiveGaussian.build(mean, covariance=cov)
    return PredictiveGaussian.build(mean, cov)


def svgp_nelbo(batch, state: SparseGPState, jitter: float = DEFAULT_JITTER,
               gh_order: int = quadrature.DEFAULT_ORDER) -> float:
    """``-[(N/n_B) Σ_B E_q log p(y|f) - KL(q(u) ‖ p(u))]``."""
    X, y = batch
    X = _check_inputs(X, state)
    _check_labels(y, state.likelihood)
    value = float(_svgp_objective(jnp.asarray(X), jnp.asarray(y, float), state, jitter, gh_order))
    if not np.isfinite(value):
        raise NumericError("SVGP NELBO is not finite")
    return value


def svgp_nelbo_terms(batch, state, jitter=DEFAULT_JITTER, gh_order=quadrature.DEFAULT_ORDER):
    """Unscaled ``(Σ_B ELL, KL)``."""
    X, y = batch
    ell, kl = _svgp_terms(jnp.asarray(X, float), jnp.asarray(y, float), state, jitter, gh_order)
    return float(jnp.sum(ell)), float(kl)


# -- SWSGP --------------------------------------------------------------------


def _swsgp_point(x, idx, state: SparseGPState, jitter):
    """Marginal ``q(f | w(x))`` plus the pieces needed for the KL of the block."""
    Zh = state.Z[idx]
    Lk = linalg.jittered_cholesky(kernel_matrix(Zh, Zh, state.kernel), jitter)
    kxz = kernel_matrix(x[None, :], Zh, state.kernel)
    m_w, Sf = _block_factor(state, idx)
    mean, var = _marginal(kernel_diag(x[None, :], state.kernel), kxz, Lk, m_w, Sf)
    return mean[0], var[0], m_w, Sf, Lk


def _swsgp_point_terms(x, y, idx, state, jitter, gh_order):
    mean, var, m_w, Sf, Lk = _swsgp_point(x, idx, state, jitter)
    ell = _ell(mean, var, y, state.likelihood, gh_order)
    return ell, linalg.gauss_kl(m_w, Sf, Lk)


def _swsgp_terms(X, y, idx, state, jitter, gh_order):
    fn = lambda x_, y_, i_: _swsgp_point_terms(x_, y_, i_, state, jitter, gh_order)
    return jax.vmap(fn)(X, y, idx)


def _swsgp_objective(X, y, idx, state, jitter, gh_order):
    ell, kl = _swsgp_terms(X, y, idx, state, jitter, gh_order)
    n_b = X.shape[0]
    return -(state.n_train / n_b * jnp.sum(ell) - jnp.sum(kl) / n_b)


def _union_objective(X, y, active, state, jitter, gh_order):
    """Objective with one shared active block for the whole batch."""
    Zu = state.Z[active]
    Lk = linalg.jittered_cholesky(kernel_matrix(Zu, Zu, state.kernel), jitter)
    m_u, Sf = _block_factor(state, active)
    Kxz = kernel_matrix(X, Zu, state.kernel)
    mean, var = _marginal(kernel_diag(X, state.kernel), Kxz, Lk, m_u, Sf)
    ell = _ell(mean, var, y, state.likelihood, gh_order)
    return -(state.n_train / X.shape[0] * jnp.sum(ell) - linalg.gauss_kl(m_u, Sf, Lk))


_swsgp_terms_jit = jax.jit(_swsgp_terms, static_argnames=("gh_order",))


def swsgp_nelbo_terms(batch, masks, state, jitter=DEFAULT_JITTER, gh_order=quadrature.DEFAULT_ORDER):
    """Per-point ``(ELL_i, KL_i)`` arrays for a batch and its masks."""
    X, y = batch
    X = _check_inputs(X, state)
    idx = _as_index_matrix(masks)
    if idx.shape[0] != X.shape[0]:
        raise ShapeError(f"{idx.shape[0]} masks for {X.shape[0]} batch points")
    _check_labels(y, state.likelihood)
    ell, kl = _swsgp_terms_jit(jnp.asarray(X), jnp.asarray(y, float), jnp.asarray(idx), state, jitter, gh_order)
    return np.asarray(ell), np.asarray(kl)


def swsgp_nelbo_minibatch(batch, masks, state: SparseGPState, jitter: float = DEFAULT_JITTER,
                          gh_order: int = quadrature.DEFAULT_ORDER) -> float:
    """``-[(N/n_B) Σ_i ELL_i - (1/n_B) Σ_i KL_i]`` with one mask per batch point.

    ``KL_i`` compares ``N(m_w, S_w)`` with ``N(0, K_{Z_H})`` on the active
    block of point ``i``.
    """
    ell, kl = swsgp_nelbo_terms(batch, masks, state, jitter, gh_order)
    bad = np.flatnonzero(~(np.isfinite(ell) & np.isfinite(kl)))
    if bad.size:
        raise NumericError(
            f"non-finite SWSGP terms for batch elements {bad.tolist()}",
            [f"batch[{i}]" for i in bad],
        )
    n_b = ell.shape[0]
    return float(-(state.n_train / n_b * ell.sum() - kl.sum() / n_b))


@jax.jit
def _swsgp_marginal_jit(X, idx, state, jitter):
    fn = lambda x_, i_: _swsgp_point(x_, i_, state, jitter)[:2]
    return jax.vmap(fn)(X, idx)


def swsgp_qf_point(x, mask, state: SparseGPState, jitter: float = DEFAULT_JITTER) -> PredictiveGaussian:
    """``q(f | w(x))``: mean ``A_x m_w``, variance ``k(x,x) + A_x (S_w - K_{Z_H}) A_xᵀ``."""
    x = _check_inputs(x, state)
    idx = _as_index(mask)[None, :]
    if idx.size < 1:
        raise ConfigError("mask must activate at least one inducing input")
    mean, var = _retry_jitter(lambda eps: _swsgp_marginal_jit(x[:1], jnp.asarray(idx), state, eps), jitter)
    return PredictiveGaussian.build(mean, var)


@jax.jit
def _joint_block_jit(X, active, state, jitter):
    Zu = state.Z[active]
    Lk = linalg.jittered_cholesky(kernel_matrix(Zu, Zu, state.kernel), jitter)
    m_u, Sf = _block_factor(state, active)
    Kxz = kernel_matrix(X, Zu, state.kernel)
    return _joint(kernel_matrix(X, X, state.kernel), Kxz, Lk, m_u, Sf)


def swsgp_predict(Xs, state: SparseGPState, H: int, joint: bool = False,
                  jitter: float = DEFAULT_JITTER, chunk: int = 2048) -> PredictiveGaussian:
    """SWSGP predictions using the ``H`` nearest inducing inputs of each test point.

    Marginal mode evaluates every point with its own mask. Joint mode takes the
    union of the test points' masks and returns the dense joint covariance of
    ``q(f*)`` restricted to that union.
    """
    Xs = _check_inputs(Xs, state)
    kernel_np = kernels.to_numpy(state.kernel)
    Z_np = np.asarray(state.Z)
    idx = neighbors.nearest_indices(Xs, Z_np, H, kernel_np)
    if joint:
        active = jnp.asarray(np.unique(idx))
        mean, cov = _retry_jitter(lambda eps: _joint_block_jit(Xs, active, state, eps), jitter)
        return PredictiveGaussian.build(mean, covariance=cov)
    means, variances = [], []
    for start in range(0, Xs.shape[0], chunk):
        xb, ib = jnp.asarray(Xs[start : start + chunk]), jnp.asarray(idx[start : start + chunk])
        mean, var = _retry_jitter(lambda eps: _swsgp_marginal_jit(xb, ib, state, eps), jitter)
        means.append(np.asarray(mean))
        variances.append(np.asarray(var))
    return PredictiveGaussian.build(np.concatenate(means), np.concatenate(variances))


# -- prior samples ------------------------------------------------------------


def prior_conditional(X, state: SparseGPState, mask):
    """``(P, C)`` with ``E[f | u_I] = P u_I`` and ``Cov[f | u_I] = C``, plus ``K_{Z_I}``."""
    kern = kernels.to_numpy(state.kernel)
    Zi = np.asarray(state.Z)[_as_index(mask)]
    X = np.asarray(X, float)
    Kzz = kernel_matrix(Zi, Zi, kern, xp=np)
    Kxz = kernel_matrix(X, Zi, kern, xp=np)
    Kxx = kernel_matrix(X, X, kern, xp=np)
    Lk, _ = linalg.cholesky_with_jitter(Kzz)
    P = np.linalg.solve(Lk.T, np.linalg.solve(Lk, Kxz.T)).T
    C = Kxx - P @ Kxz.T
    return P, 0.5 * (C + C.T), Kzz


def marginal_prior_cov(X, state: SparseGPState, mask) -> np.ndarray:
    """Covariance of ``f`` after integrating out ``u_I``: ``P K_{Z_I} Pᵀ + C``."""
    P, C, Kzz = prior_conditional(X, state, mask)
    return P @ Kzz @ P.T + C


def sample_prior_f(X, state: SparseGPState, mask, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``u_I ~ N(0, K_{Z_I})`` then ``f ~ p(f | u_I)``; returns (n_samples, n)."""
    P, C, Kzz = prior_conditional(X, state, mask)
    Lu, _ = linalg.cholesky_with_jitter(Kzz)
    u = rng.standard_normal((n_samples, Kzz.shape[0])) @ Lu.T
    Lc, _ = linalg.cholesky_with_jitter(C, jitter0=1e-10 * max(np.mean(np.diag(Kzz)), 1.0))
    return u @ P.T + rng.standard_normal((n_samples, C.shape[0])) @ Lc.T
