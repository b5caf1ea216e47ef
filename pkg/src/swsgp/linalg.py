"""Dense linear algebra: jittered Cholesky, triangular solves and Gaussian KL."""

from __future__ import annotations

import logging

import jax
import jax.numpy as jnp
import jax.scipy.linalg as jsl
import numpy as np

from .errors import FactorizationError, ShapeError, SingularMatrixError

log = logging.getLogger(__name__)

JITTER_GROWTH = 10.0
MAX_JITTER_RETRIES = 5
DEFAULT_RELATIVE_JITTER = 1e-6


def _is_traced(*xs) -> bool:
    return any(isinstance(x, jax.core.Tracer) for x in xs)


def default_jitter(A) -> float:
    """``1e-6`` times the mean diagonal, falling back to ``1e-6`` for a zero diagonal."""
    scale = float(np.mean(np.diag(A))) if np.size(A) else 0.0
    return DEFAULT_RELATIVE_JITTER * (scale if scale > 0 else 1.0)


def cholesky_with_jitter(A, jitter0: float | None = None) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of a symmetric matrix, adding jitter on failure.

    The first attempt uses no jitter. On failure ``ε = jitter0 · 10^k`` is added
    to the diagonal for ``k = 0..4``.

    Returns
    -------
    L : ndarray
        Lower-triangular factor with ``L Lᵀ = A + ε I``.
    eps : float
        The jitter that was applied (0.0 when none was needed).
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeError(f"expected a square matrix, got shape {A.shape}")
    scale = max(float(np.max(np.abs(A))) if A.size else 0.0, 1.0)
    if not np.allclose(A, A.T, rtol=1e-10, atol=1e-10 * scale):
        raise ValueError("matrix is not symmetric")
    if jitter0 is None:
        jitter0 = default_jitter(A)
    eye = np.eye(A.shape[0])
    eps = 0.0
    for attempt in range(MAX_JITTER_RETRIES + 1):
        try:
            L = np.linalg.cholesky(A + eps * eye)
            if np.all(np.isfinite(L)):
                if eps:
                    log.debug("cholesky succeeded with jitter %.3g", eps)
                return L, eps
        except np.linalg.LinAlgError:
            pass
        eps = jitter0 * JITTER_GROWTH**attempt
    raise FactorizationError(
        f"matrix not positive definite after {MAX_JITTER_RETRIES} jitter retries "
        f"(last jitter {jitter0 * JITTER_GROWTH ** (MAX_JITTER_RETRIES - 1):.3g})"
    )


def jittered_cholesky(K, rel_jitter):
    """Traceable Cholesky of ``K + ε I`` with ``ε = rel_jitter · mean(diag K)``.

    Works on stacks of matrices. Failure shows up as NaNs, which the callers
    turn into jitter escalation or a rejected step.
    """
    n = K.shape[-1]
    diag = jnp.diagonal(K, axis1=-2, axis2=-1)
    eps = rel_jitter * jnp.mean(diag, axis=-1)
    return jnp.linalg.cholesky(K + eps[..., None, None] * jnp.eye(n))


def triangular_solve(L, B, transposed: bool = False):
    """Solve ``L X = B`` (or ``Lᵀ X = B``) for lower-triangular ``L``."""
    L = jnp.asarray(L, dtype=float)
    B = jnp.asarray(B, dtype=float)
    if L.ndim < 2 or L.shape[-1] != L.shape[-2]:
        raise ShapeError(f"L must be square, got {L.shape}")
    rows = B.shape[0] if B.ndim == 1 else B.shape[-2]
    if rows != L.shape[-1]:
        raise ShapeError(f"cannot solve system with L {L.shape} and B {B.shape}")
    if not _is_traced(L) and np.any(np.diagonal(np.asarray(L), axis1=-2, axis2=-1) == 0):
        raise SingularMatrixError("zero on the diagonal of a triangular factor")
    return jsl.solve_triangular(L, B, lower=True, trans=1 if transposed else 0)


def gauss_kl(m, S_factor, K_factor):
    """KL(N(m, S) ‖ N(0, K)) from Cholesky-type factors.

    ``S_factor`` is either a lower-triangular ``L`` with ``S = L Lᵀ`` or a
    vector ``s`` with ``S = diag(s²)``; ``K_factor`` is the lower Cholesky
    factor of ``K``. Only single (unbatched) problems; vmap for batches.
    """
    m = jnp.asarray(m, dtype=float)
    S_factor = jnp.asarray(S_factor, dtype=float)
    K_factor = jnp.asarray(K_factor, dtype=float)
    k = m.shape[0]
    if K_factor.shape != (k, k) or S_factor.shape[0] != k or S_factor.shape not in ((k,), (k, k)):
        raise ShapeError(
            f"inconsistent KL shapes: m {m.shape}, S {S_factor.shape}, K {K_factor.shape}"
        )
    alpha = jsl.solve_triangular(K_factor, m, lower=True)
    logdet_K = 2.0 * jnp.sum(jnp.log(jnp.diagonal(K_factor)))
    if S_factor.ndim == 1:
        Kinv_diag = jnp.sum(jsl.solve_triangular(K_factor, jnp.eye(k), lower=True) ** 2, axis=0)
        trace = jnp.sum(Kinv_diag * S_factor**2)
        logdet_S = jnp.sum(jnp.log(S_factor**2))
    else:
        B = jsl.solve_triangular(K_factor, S_factor, lower=True)
        trace = jnp.sum(B * B)
        logdet_S = jnp.sum(jnp.log(jnp.diagonal(S_factor) ** 2))
    return 0.5 * (trace + jnp.sum(alpha * alpha) - k + logdet_K - logdet_S)
