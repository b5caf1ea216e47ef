"""Adam over dictionaries of parameter blocks."""

from __future__ import annotations

import jax
import jax.numpy as jnp
import numpy as np

from .errors import NumericError

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


def init_moments(params: dict) -> tuple[dict, dict]:
    zeros = {k: jnp.zeros_like(v) for k, v in params.items()}
    return zeros, dict(zeros)


def adam_update(params, grads, moments, t, lr):
    """One bias-corrected Adam step; traceable. ``t`` counts from 1."""
    m_prev, v_prev = moments
    m = jax.tree_util.tree_map(lambda a, g: BETA1 * a + (1 - BETA1) * g, m_prev, grads)
    v = jax.tree_util.tree_map(lambda a, g: BETA2 * a + (1 - BETA2) * g * g, v_prev, grads)
    c1 = 1 - BETA1**t
    c2 = 1 - BETA2**t
    new = jax.tree_util.tree_map(
        lambda p, a, b: p - lr * (a / c1) / (jnp.sqrt(b / c2) + EPS), params, m, v
    )
    return new, (m, v)


def adam_step(params: dict, gradients: dict, moments: tuple[dict, dict], t: int, lr: float):
    """Checked Adam step on unconstrained parameter blocks.

    Raises :class:`NumericError` (and leaves everything untouched) when any
    gradient entry is non-finite.
    """
    bad = [k for k, g in gradients.items() if not np.all(np.isfinite(np.asarray(g)))]
    if bad:
        raise NumericError("non-finite gradient; step rejected", bad)
    return adam_update(params, gradients, moments, t, lr)
