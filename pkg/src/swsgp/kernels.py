"""
Covariance functions.

Kernels are written against an array namespace ``xp`` so the same code serves
both the differentiable JAX path (``xp=jax.numpy``, the default) and the
deterministic NumPy path used by the neighbor search (``xp=numpy``).

Supported kinds: Matérn-5/2 and Matérn-3/2 with ARD lengthscales, a linear
kernel ``σ² a·b``, and a sum of up to two levels of the above.
"""

from __future__ import annotations

import dataclasses
from enum import Enum
from typing import Any

import jax
import jax.numpy as jnp
import numba
import numpy as np

from .errors import ConfigError, ShapeError

# Matérn distances are floored before the square root so that gradients stay
# finite at coincident points.
R_FLOOR = 1e-12

SQRT3 = float(np.sqrt(3.0))
SQRT5 = float(np.sqrt(5.0))


class KernelKind(str, Enum):
    MATERN52 = "matern52"
    MATERN32 = "matern32"
    LINEAR = "linear"
    SUM = "sum"


def softplus(x, xp=jnp):
    return xp.logaddexp(x, 0.0)


def softplus_inverse(y, xp=jnp):
    """Inverse of :func:`softplus`, valid for ``y > 0``."""
    y = xp.asarray(y, dtype=float)
    return y + xp.log(-xp.expm1(-y))


@dataclasses.dataclass(frozen=True)
class KernelParams:
    """Kernel hyperparameters in constrained (positive) form.

    ``lengthscales`` is ``None`` for the linear kernel; ``components`` is only
    used by ``KernelKind.SUM``.
    """

    kind: KernelKind
    variance: Any = None
    lengthscales: Any = None
    components: tuple = ()

    @property
    def input_dim(self) -> int | None:
        if self.kind == KernelKind.SUM:
            dims = {c.input_dim for c in self.components} - {None}
            return dims.pop() if dims else None
        if self.lengthscales is None:
            return None
        return int(np.shape(self.lengthscales)[0])

    @property
    def is_stationary_matern(self) -> bool:
        return self.kind in (KernelKind.MATERN52, KernelKind.MATERN32)

    def depth(self) -> int:
        if self.kind != KernelKind.SUM:
            return 1
        return 1 + max(c.depth() for c in self.components)

    def validate(self) -> "KernelParams":
        if self.kind == KernelKind.SUM:
            if not self.components:
                raise ConfigError("sum kernel needs at least one component")
            if self.depth() > 2:
                raise ConfigError("sum kernels may nest at most two levels deep")
            for c in self.components:
                c.validate()
            return self
        if not float(self.variance) > 0:
            raise ConfigError(f"kernel variance must be positive, got {self.variance}")
        if self.kind != KernelKind.LINEAR:
            ls = np.asarray(self.lengthscales, dtype=float)
            if ls.ndim != 1 or ls.size == 0 or not np.all(ls > 0):
                raise ConfigError("lengthscales must be a non-empty positive vector")
        return self


jax.tree_util.register_pytree_node(
    KernelParams,
    lambda k: ((k.variance, k.lengthscales, k.components), k.kind),
    lambda kind, ch: KernelParams(kind, ch[0], ch[1], tuple(ch[2])),
)


def matern52(variance=1.0, lengthscales=(1.0,)) -> KernelParams:
    return KernelParams(
        KernelKind.MATERN52, float(variance), np.asarray(lengthscales, dtype=float)
    ).validate()


def matern32(variance=1.0, lengthscales=(1.0,)) -> KernelParams:
    return KernelParams(
        KernelKind.MATERN32, float(variance), np.asarray(lengthscales, dtype=float)
    ).validate()


def linear(variance=1.0) -> KernelParams:
    return KernelParams(KernelKind.LINEAR, float(variance)).validate()


def sum_kernel(*components: KernelParams) -> KernelParams:
    return KernelParams(KernelKind.SUM, components=tuple(components)).validate()


def make_kernel(name: str, input_dim: int, lengthscales=None) -> KernelParams:
    """Build a unit-variance kernel from a config name.

    ``name`` is one of ``matern52``, ``matern32``, ``linear`` or
    ``matern32+linear`` (the composition used for airline-style data).
    """
    ls = np.ones(input_dim) if lengthscales is None else np.asarray(lengthscales, float)
    if name == "matern52":
        return matern52(1.0, ls)
    if name == "matern32":
        return matern32(1.0, ls)
    if name == "linear":
        return linear(1.0)
    if name == "matern32+linear":
        return sum_kernel(matern32(1.0, ls), linear(1.0))
    raise ConfigError(f"unknown kernel {name!r}")


def _check_dims(A, B, params: KernelParams):
    if A.ndim != 2 or B.ndim != 2:
        raise ShapeError(f"kernel inputs must be 2-D, got {A.shape} and {B.shape}")
    if A.shape[1] != B.shape[1]:
        raise ShapeError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    D = params.input_dim
    if D is not None and D != A.shape[1]:
        raise ShapeError(f"kernel expects D={D}, inputs have D={A.shape[1]}")


@numba.njit(cache=True)
def _sqdist_rows(As, Bs):
    """Fused pairwise squared distances; same operation order as the array loop."""
    n, D = As.shape
    m = Bs.shape[0]
    out = np.empty((n, m))
    for i in range(n):
        for j in range(m):
            acc = 0.0
            for d in range(D):
                t = As[i, d] - Bs[j, d]
                acc += t * t
            out[i, j] = acc
    return out


def scaled_sqdist(A, B, lengthscales, xp=jnp):
    """Pairwise ``Σ_d ((a_d - b_d) / ℓ_d)²`` accumulated one dimension at a time.

    The per-dimension loop keeps every entry's arithmetic independent of the
    array shapes, which the neighbor index relies on for exact reproducibility.
    """
    if xp is np:
        As = np.asarray(A, dtype=float) / lengthscales
        Bs = np.asarray(B, dtype=float) / lengthscales
        if As.ndim == 2 and Bs.ndim == 2:
            return _sqdist_rows(np.ascontiguousarray(As), np.ascontiguousarray(Bs))
        shape = np.broadcast_shapes(As.shape[:-2], Bs.shape[:-2]) + (As.shape[-2], Bs.shape[-2])
        r2 = np.zeros(shape)
        tmp = np.empty(shape)
        for d in range(As.shape[-1]):
            np.subtract(As[..., :, None, d], Bs[..., None, :, d], out=tmp)
            np.multiply(tmp, tmp, out=tmp)
            r2 += tmp
        return r2
    r2 = 0.0
    for d in range(A.shape[-1]):
        diff = (A[..., :, None, d] - B[..., None, :, d]) / lengthscales[d]
        r2 = r2 + diff * diff
    return r2


def _matern(r2, kind: KernelKind, variance, xp):
    r = xp.sqrt(xp.maximum(r2, R_FLOOR * R_FLOOR))
    if kind == KernelKind.MATERN52:
        return variance * (1.0 + SQRT5 * r + (5.0 / 3.0) * r * r) * xp.exp(-SQRT5 * r)
    return variance * (1.0 + SQRT3 * r) * xp.exp(-SQRT3 * r)


def _kernel(A, B, params: KernelParams, xp):
    if params.kind == KernelKind.SUM:
        out = 0.0
        for c in params.components:
            out = out + _kernel(A, B, c, xp)
        return out
    if params.kind == KernelKind.LINEAR:
        acc = 0.0
        for d in range(A.shape[-1]):
            acc = acc + A[..., :, None, d] * B[..., None, :, d]
        return params.variance * acc
    r2 = scaled_sqdist(A, B, params.lengthscales, xp)
    return _matern(r2, params.kind, params.variance, xp)


def kernel_matrix(A, B, params: KernelParams, xp=jnp):
    """Cross-covariance ``K[i, j] = k(a_i, b_j)`` for ``A`` (n×D) and ``B`` (m×D).

    Leading batch dimensions are broadcast, so ``A`` of shape (b, n, D) with
    ``B`` of shape (b, m, D) gives (b, n, m).
    """
    A = xp.asarray(A, dtype=float)
    B = xp.asarray(B, dtype=float)
    if A.ndim == 2 or B.ndim == 2:
        if A.ndim == 2 and B.ndim == 2:
            _check_dims(A, B, params)
        elif A.shape[-1] != B.shape[-1]:
            raise ShapeError(f"dimension mismatch: {A.shape[-1]} vs {B.shape[-1]}")
    return _kernel(A, B, params, xp)


def kernel_diag(A, params: KernelParams, xp=jnp):
    """``k(a_i, a_i)`` for every row of ``A`` without building the full matrix."""
    A = xp.asarray(A, dtype=float)
    if params.kind == KernelKind.SUM:
        out = 0.0
        for c in params.components:
            out = out + kernel_diag(A, c, xp)
        return out
    if params.kind == KernelKind.LINEAR:
        return params.variance * xp.sum(A * A, axis=-1)
    return params.variance * xp.ones(A.shape[:-1])


# -- unconstrained parameterization ----------------------------------------


def kernel_to_unconstrained(params: KernelParams, prefix: str = "kernel") -> dict:
    if params.kind == KernelKind.SUM:
        out = {}
        for i, c in enumerate(params.components):
            out.update(kernel_to_unconstrained(c, f"{prefix}.{i}"))
        return out
    out = {f"{prefix}.variance": softplus_inverse(jnp.asarray(params.variance))}
    if params.kind != KernelKind.LINEAR:
        out[f"{prefix}.lengthscales"] = softplus_inverse(jnp.asarray(params.lengthscales))
    return out


def kernel_from_unconstrained(
    flat: dict, template: KernelParams, prefix: str = "kernel"
) -> KernelParams:
    """Rebuild kernel parameters from raw values; traceable under JAX."""
    if template.kind == KernelKind.SUM:
        comps = tuple(
            kernel_from_unconstrained(flat, c, f"{prefix}.{i}")
            for i, c in enumerate(template.components)
        )
        return KernelParams(KernelKind.SUM, components=comps)
    variance = softplus(flat[f"{prefix}.variance"])
    lengthscales = None
    if template.kind != KernelKind.LINEAR:
        lengthscales = softplus(flat[f"{prefix}.lengthscales"])
    return KernelParams(template.kind, variance, lengthscales)


def kernel_to_json(params: KernelParams) -> dict:
    if params.kind == KernelKind.SUM:
        return {"kind": "sum", "components": [kernel_to_json(c) for c in params.components]}
    out = {"kind": params.kind.value, "variance": float(params.variance)}
    if params.lengthscales is not None:
        out["lengthscales"] = [float(v) for v in np.asarray(params.lengthscales)]
    return out


def kernel_from_json(obj: dict) -> KernelParams:
    kind = KernelKind(obj["kind"])
    if kind == KernelKind.SUM:
        return sum_kernel(*(kernel_from_json(c) for c in obj["components"]))
    ls = obj.get("lengthscales")
    return KernelParams(
        kind, float(obj["variance"]), None if ls is None else np.asarray(ls, float)
    ).validate()


def to_numpy(params: KernelParams) -> KernelParams:
    """Concrete NumPy copy of possibly JAX-valued hyperparameters."""
    if params.kind == KernelKind.SUM:
        return KernelParams(KernelKind.SUM, components=tuple(map(to_numpy, params.components)))
    ls = None if params.lengthscales is None else np.asarray(params.lengthscales, float)
    return KernelParams(params.kind, float(params.variance), ls)
