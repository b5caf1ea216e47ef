"""Gauss–Hermite quadrature for one-dimensional Gaussian expectations."""

from __future__ import annotations

from functools import lru_cache

import jax.numpy as jnp
import numpy as np

from .errors import ConfigError

DEFAULT_ORDER = 20
MAX_ORDER = 100


@lru_cache(maxsize=None)
def _hermgauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    t, w = np.polynomial.hermite.hermgauss(order)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


def gauss_hermite_nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    """Physicists' Gauss–Hermite nodes and weights (weight function e^{-t²}).

    ``Σ w_i g(μ + σ√2 t_i) / √π`` approximates ``E[g(f)]`` for ``f ~ N(μ, σ²)``.
    """
    if not isinstance(order, (int, np.integer)) or not 1 <= order <= MAX_ORDER:
        raise ConfigError(f"quadrature order must be an integer in [1, {MAX_ORDER}], got {order!r}")
    return _hermgauss(int(order))


def gaussian_expectation(fn, mean, var, order: int = DEFAULT_ORDER):
    """``E[fn(f)]`` under ``f ~ N(mean, var)``, vectorized over ``mean``/``var``."""
    t, w = gauss_hermite_nodes(order)
    mean = jnp.asarray(mean)[..., None]
    std = jnp.sqrt(jnp.maximum(jnp.asarray(var), 0.0))[..., None]
    values = fn(mean + np.sqrt(2.0) * std * t)
    return jnp.sum(values * w, axis=-1) / np.sqrt(np.pi)
