"""
Reverse-mode gradients of scalar losses over a state's unconstrained blocks,
and the central finite-difference check that defines their correctness.
"""

from __future__ import annotations

import dataclasses
from typing import Callable, Iterable

import jax
import jax.numpy as jnp
import numpy as np

from .errors import NumericError


@dataclasses.dataclass(frozen=True)
class GradCheckReport:
    parameter: str
    analytic: float
    finite_difference: float

    @property
    def relative_error(self) -> float:
        a, f = self.analytic, self.finite_difference
        return abs(a - f) / max(1.0, abs(a), abs(f))


def _split(state, blocks: Iterable[str] | None):
    flat = state.unconstrained()
    names = list(flat) if blocks is None else list(blocks)
    trainable = {k: flat[k] for k in names}
    frozen = {k: v for k, v in flat.items() if k not in trainable}
    return trainable, frozen


def value_and_gradient(loss: Callable, state, blocks: Iterable[str] | None = None):
    """Loss value and its gradient w.r.t. every (or the named) unconstrained block.

    Returns ``(value, grads)`` where ``grads`` maps block name to an array of the
    block's shape.
    """
    trainable, frozen = _split(state, blocks)

    def f(params):
        return loss(state.from_unconstrained({**frozen, **params}))

    value, grads = jax.value_and_grad(f)(trainable)
    value = float(value)
    grads = {k: np.asarray(v) for k, v in grads.items()}
    bad = [k for k, v in grads.items() if not np.all(np.isfinite(v))]
    if not np.isfinite(value) or bad:
        raise NumericError(
            f"non-finite loss or gradient (loss={value})", bad or list(grads)
        )
    return value, grads


def check_gradients(
    loss: Callable,
    state,
    h: float = 1e-5,
    blocks: Iterable[str] | None = None,
    max_per_block: int | None = None,
    rng: np.random.Generator | None = None,
) -> list[GradCheckReport]:
    """Compare reverse-mode gradients with central differences ``(f(θ+h) - f(θ-h)) / 2h``.

    ``max_per_block`` limits the number of probed entries per block (chosen at
    random); by default every scalar is probed.
    """
    rng = rng or np.random.default_rng(0)
    trainable, frozen = _split(state, blocks)
    _, grads = value_and_gradient(loss, state, list(trainable))

    @jax.jit
    def f(params):
        return loss(state.from_unconstrained({**frozen, **params}))

    reports = []
    for name, value in trainable.items():
        base = np.asarray(value, dtype=float)
        entries = list(np.ndindex(base.shape))
        if max_per_block is not None and len(entries) > max_per_block:
            pick = rng.choice(len(entries), size=max_per_block, replace=False)
            entries = [entries[i] for i in sorted(pick)]
        for ix in entries:
            vals = []
            for sign in (1.0, -1.0):
                pert = base.copy()
                pert[ix] += sign * h
                vals.append(float(f({**trainable, name: jnp.asarray(pert)})))
            fd = (vals[0] - vals[1]) / (2 * h)
            label = name if base.ndim == 0 else f"{name}{list(ix)}"
            reports.append(GradCheckReport(label, float(grads[name][ix]), fd))
    return reports
