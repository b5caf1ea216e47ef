"""
Local GP baselines: K-means placed experts, each an exact GP on its nearest
training points.

* inductive prediction uses the expert whose center is nearest to ``x*``;
* transductive prediction conditions on the ``n_neighbors`` training points
  nearest to ``x*`` under the nearest expert's hyperparameters.

Distances are Euclidean in (standardized) input space; ties go to the lower
index.
"""

from __future__ import annotations

import dataclasses
import logging

import jax
import jax.numpy as jnp
import numpy as np

from . import kernels, linalg, optim
from .errors import ConfigError
from .kernels import KernelParams, kernel_matrix, softplus, softplus_inverse
from .models import PredictiveGaussian
from .neighbors import _select_top

log = logging.getLogger(__name__)


def _sqdist(A, B):
    """Pairwise squared Euclidean distances, computed per dimension."""
    return kernels.scaled_sqdist(A, B, np.ones(A.shape[1]), xp=np)


def kmeans_centers(X, K: int, seed: int = 0, max_iter: int = 100, tol: float = 1e-6) -> np.ndarray:
    """Lloyd's algorithm with k-means++ seeding.

    Stops after ``max_iter`` sweeps or when the inertia changes by less than
    ``tol`` relative to its previous value.
    """
    X = np.asarray(X, dtype=float)
    N = X.shape[0]
    if not 1 <= K <= N:
        raise ConfigError(f"need 1 <= K <= N, got K={K}, N={N}")
    rng = np.random.default_rng(seed)
    chosen = [int(rng.integers(N))]
    d2 = _sqdist(X, X[chosen[0]][None])[:, 0]
    for _ in range(1, K):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(N, p=d2 / total))
        else:
            free = np.setdiff1d(np.arange(N), chosen)
            nxt = int(rng.choice(free))
        chosen.append(nxt)
        d2 = np.minimum(d2, _sqdist(X, X[nxt][None])[:, 0])
    centers = X[chosen].copy()

    prev = np.inf
    step = max(1, 4_000_000 // K)
    for _ in range(max_iter):
        assign = np.empty(N, dtype=np.int64)
        inertia = 0.0
        for s in range(0, N, step):
            d = _sqdist(X[s : s + step], centers)
            assign[s : s + step] = d.argmin(axis=1)
            inertia += float(d.min(axis=1).sum())
        counts = np.bincount(assign, minlength=K)
        sums = np.zeros_like(centers)
        np.add.at(sums, assign, X)
        nonempty = counts > 0
        centers[nonempty] = sums[nonempty] / counts[nonempty, None]
        if inertia == 0.0 or abs(prev - inertia) <= tol * prev:
            break
        prev = inertia
    return centers


def _nearest_rows(queries, points, k: int) -> np.ndarray:
    """Indices of the ``k`` nearest ``points`` for every query, ordered by index."""
    out = np.empty((len(queries), k), dtype=np.int64)
    step = max(1, 4_000_000 // max(len(points), 1))
    for s in range(0, len(queries), step):
        out[s : s + step] = _select_top(-_sqdist(queries[s : s + step], points), k)
    return out


# -- exact GP -------------------------------------------------------------------


def exact_log_marginal(X, y, kernel: KernelParams, noise):
    """``log N(y; 0, K + σ² I)``; traceable."""
    n = X.shape[0]
    K = kernel_matrix(X, X, kernel) + noise * jnp.eye(n)
    L = jnp.linalg.cholesky(K)
    alpha = jax.scipy.linalg.solve_triangular(L, y, lower=True)
    return -0.5 * jnp.sum(alpha**2) - jnp.sum(jnp.log(jnp.diagonal(L))) - 0.5 * n * jnp.log(2 * jnp.pi)


def exact_posterior(X, y, Xs, kernel: KernelParams, noise: float, full_cov: bool = False):
    """Latent posterior mean and (co)variance of an exact GP regression."""
    kern = kernels.to_numpy(kernel)
    X, Xs = np.asarray(X, float), np.asarray(Xs, float)
    K = kernel_matrix(X, X, kern, xp=np) + noise * np.eye(len(X))
    L, _ = linalg.cholesky_with_jitter(K)
    Ksx = kernel_matrix(Xs, X, kern, xp=np)
    alpha = np.linalg.solve(L.T, np.linalg.solve(L, np.asarray(y, float)))
    V = np.linalg.solve(L, Ksx.T)
    mean = Ksx @ alpha
    if full_cov:
        return mean, kernel_matrix(Xs, Xs, kern, xp=np) - V.T @ V
    return mean, kernels.kernel_diag(Xs, kern, xp=np) - np.sum(V * V, axis=0)


# -- experts --------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class LocalExpert:
    center: np.ndarray
    member_X: np.ndarray
    member_y: np.ndarray
    kernel: KernelParams
    noise: float
    chol: np.ndarray
    alpha: np.ndarray
    member_rows: np.ndarray | None = None

    @classmethod
    def build(cls, center, member_X, member_y, kernel, noise, member_rows=None) -> "LocalExpert":
        kern = kernels.to_numpy(kernel)
        K = kernel_matrix(member_X, member_X, kern, xp=np) + noise * np.eye(len(member_X))
        L, _ = linalg.cholesky_with_jitter(K)
        alpha = np.linalg.solve(L.T, np.linalg.solve(L, member_y))
        return cls(np.asarray(center), member_X, member_y, kern, float(noise), L, alpha, member_rows)

    def predict(self, Xs) -> tuple[np.ndarray, np.ndarray]:
        Ksx = kernel_matrix(Xs, self.member_X, self.kernel, xp=np)
        V = np.linalg.solve(self.chol, Ksx.T)
        mean = Ksx @ self.alpha
        return mean, kernels.kernel_diag(Xs, self.kernel, xp=np) - np.sum(V * V, axis=0)


def _train_hyperparameters(Xe, ye, kernel_name, iters, lr):
    """Maximize every expert's exact marginal likelihood jointly with Adam.

    All experts share the member count, so their objectives are stacked with
    ``vmap`` and optimized in one loop; they remain independent problems.
    """
    E, n, D = Xe.shape
    template = kernels.make_kernel(kernel_name, D)
    ls0 = np.maximum(Xe.std(axis=1), 1e-3)
    noise0 = np.maximum(0.1 * ye.var(axis=1), 1e-4)
    raw = {}
    for name, val in kernels.kernel_to_unconstrained(template).items():
        raw[name] = jnp.broadcast_to(val, (E,) + np.shape(val))
        if name.endswith("lengthscales"):
            raw[name] = softplus_inverse(jnp.asarray(ls0))
    raw["noise"] = softplus_inverse(jnp.asarray(noise0))

    def nlml(p, X, y):
        kern = kernels.kernel_from_unconstrained(p, template)
        return -exact_log_marginal(X, y, kern, softplus(p["noise"]) + 1e-6)

    def total(p):
        return jnp.sum(jax.vmap(nlml)(p, jnp.asarray(Xe), jnp.asarray(ye)))

    @jax.jit
    def step(p, moments, t):
        g = jax.grad(total)(p)
        finite = jnp.all(jnp.stack([jnp.all(jnp.isfinite(v)) for v in jax.tree_util.tree_leaves(g)]))
        new_p, new_m = optim.adam_update(p, g, moments, t, lr)
        keep = lambda a, b: jnp.where(finite, a, b)
        return jax.tree_util.tree_map(keep, new_p, p), jax.tree_util.tree_map(keep, new_m, moments)

    moments = optim.init_moments(raw)
    for t in range(1, iters + 1):
        raw, moments = step(raw, moments, t)
    out = []
    for e in range(E):
        pe = {k: np.asarray(v[e]) for k, v in raw.items()}
        kern = kernels.kernel_from_unconstrained({k: jnp.asarray(v) for k, v in pe.items()}, template)
        out.append((kernels.to_numpy(kern), float(softplus(pe["noise"])) + 1e-6))
    return out


def fit_experts(X, y, centers, expert_size: int, kernel: str = "matern52",
                iters: int = 300, lr: float = 0.01) -> list[LocalExpert]:
    """One exact-GP expert per center, owning its ``expert_size`` nearest points."""
    X, y, centers = np.asarray(X, float), np.asarray(y, float), np.asarray(centers, float)
    if not 1 <= expert_size <= len(X):
        raise ConfigError(f"expert_size must be in [1, N={len(X)}], got {expert_size}")
    _, first = np.unique(centers, axis=0, return_index=True)
    if len(first) < len(centers):
        log.info("%d duplicate expert centers", len(centers) - len(first))
    members = _nearest_rows(centers, X, expert_size)
    hyper = _train_hyperparameters(X[members], y[members], kernel, iters, lr)
    return [
        LocalExpert.build(c, X[rows], y[rows], kern, noise, rows)
        for c, rows, (kern, noise) in zip(centers, members, hyper)
    ]


def nearest_expert(Xs, experts) -> np.ndarray:
    centers = np.stack([e.center for e in experts])
    return _nearest_rows(np.atleast_2d(Xs), centers, 1)[:, 0]


def predict_inductive(Xs, experts: list[LocalExpert]) -> PredictiveGaussian:
    Xs = np.atleast_2d(np.asarray(Xs, float))
    owner = nearest_expert(Xs, experts)
    mean = np.empty(len(Xs))
    var = np.empty(len(Xs))
    noise = np.empty(len(Xs))
    for e in np.unique(owner):
        rows = owner == e
        mean[rows], var[rows] = experts[e].predict(Xs[rows])
        noise[rows] = experts[e].noise
    return PredictiveGaussian.build(mean, var, noise=noise)


def predict_transductive(Xs, X, y, experts: list[LocalExpert], n_neighbors: int,
                         chunk: int = 256) -> PredictiveGaussian:
    Xs = np.atleast_2d(np.asarray(Xs, float))
    X, y = np.asarray(X, float), np.asarray(y, float)
    if n_neighbors > len(X):
        log.warning("n_neighbors=%d exceeds N=%d; clamping", n_neighbors, len(X))
        n_neighbors = len(X)
    owner = nearest_expert(Xs, experts)
    mean = np.empty(len(Xs))
    var = np.empty(len(Xs))
    noise = np.empty(len(Xs))
    for e in np.unique(owner):
        expert = experts[e]
        rows = np.flatnonzero(owner == e)
        for s in range(0, rows.size, chunk):
            r = rows[s : s + chunk]
            nb = _nearest_rows(Xs[r], X, n_neighbors)
            Xn, yn = X[nb], y[nb]
            K = kernel_matrix(Xn, Xn, expert.kernel, xp=np) + expert.noise * np.eye(n_neighbors)
            L = np.linalg.cholesky(K)
            ks = kernel_matrix(Xs[r][:, None, :], Xn, expert.kernel, xp=np)[:, 0, :]
            v = np.linalg.solve(L, ks[..., None])[..., 0]
            a = np.linalg.solve(L, yn[..., None])[..., 0]
            mean[r] = np.sum(v * a, axis=1)
            var[r] = kernels.kernel_diag(Xs[r], expert.kernel, xp=np) - np.sum(v * v, axis=1)
            noise[r] = expert.noise
    return PredictiveGaussian.build(mean, var, noise=noise)
