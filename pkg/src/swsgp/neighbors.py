"""
H-nearest inducing inputs.

The mask ``w(x)`` activates the ``H`` inducing inputs with the largest kernel
value ``k(x, z_m)``. For a single Matérn kernel the kernel value is a strictly
decreasing function of the ARD-scaled distance, so the ranking is done on
distances instead; this gives the same index set while avoiding spurious ties
where the kernel underflows to zero. Any other kernel (sums, linear terms) is
ranked by the kernel value itself.

Ties are broken in favor of the lower inducing index. Everything here runs in
NumPy with per-entry arithmetic that does not depend on batch shapes, so a
mask is bit-for-bit the same whether computed alone or inside a large chunk.
"""

from __future__ import annotations

import dataclasses
import hashlib
from typing import Sequence

import numba
import numpy as np

from . import kernels
from .errors import ConfigError, ShapeError, StalenessError
from .kernels import KernelParams

# rows per chunk are chosen so a chunk's score matrix stays around this size
_CHUNK_ELEMENTS = 4_000_000


@dataclasses.dataclass(frozen=True)
class NeighborMask:
    """Sorted active inducing indices, the sparse form of a binary mask ``w``."""

    active_indices: np.ndarray
    query_id: int | None = None

    def __post_init__(self):
        idx = np.asarray(self.active_indices, dtype=np.int64)
        if idx.ndim != 1:
            raise ShapeError("active_indices must be one-dimensional")
        if idx.size > 1 and np.any(np.diff(idx) <= 0):
            idx = np.unique(idx)
        object.__setattr__(self, "active_indices", idx)

    def __len__(self) -> int:
        return int(self.active_indices.size)

    def to_binary(self, M: int) -> np.ndarray:
        w = np.zeros(M, dtype=np.int8)
        w[self.active_indices] = 1
        return w

    def __eq__(self, other) -> bool:
        return isinstance(other, NeighborMask) and np.array_equal(
            self.active_indices, other.active_indices
        )

    __hash__ = None


def neighbor_scores(X: np.ndarray, Z: np.ndarray, params: KernelParams) -> np.ndarray:
    """Closeness scores (higher is closer) of every ``z_m`` to every ``x_n``."""
    params = kernels.to_numpy(params)
    if params.is_stationary_matern:
        return -kernels.scaled_sqdist(X, Z, params.lengthscales, xp=np)
    return kernels.kernel_matrix(X, Z, params, xp=np)


def _select_top(scores: np.ndarray, H: int) -> np.ndarray:
    """Indices of the ``H`` best scores per row, ties to the lower index, sorted."""
    n, M = scores.shape
    if H >= M:
        return np.broadcast_to(np.arange(M), (n, M)).copy()
    kth = -np.partition(-scores, H - 1, axis=1)[:, H - 1 : H]
    sel = scores >= kth
    counts = sel.sum(axis=1)
    for r in np.flatnonzero(counts > H):
        above = scores[r] > kth[r, 0]
        ties = np.flatnonzero(scores[r] == kth[r, 0])
        sel[r] = above
        sel[r, ties[: H - int(above.sum())]] = True
    return np.nonzero(sel)[1].reshape(n, H)


@numba.njit(cache=True)
def _nearest_scaled(As, BsT, h):
    """Top-``h`` smallest squared distances per row by insertion, ties to lower index.

    ``BsT`` is the transposed (D, M) inducing matrix so the distance sweep runs
    contiguously over inducing points; each entry still sums dimensions in order.
    """
    n, D = As.shape
    m = BsT.shape[1]
    out = np.empty((n, h), dtype=np.int64)
    dist = np.empty(m)
    best_d = np.empty(h)
    best_i = np.empty(h, dtype=np.int64)
    for i in range(n):
        dist[:] = 0.0
        for d in range(D):
            a = As[i, d]
            for j in range(m):
                t = a - BsT[d, j]
                dist[j] += t * t
        count = 0
        for j in range(m):
            acc = dist[j]
            if count == h and acc >= best_d[h - 1]:
                continue
            # later indices never displace an equal distance already held
            k = count if count < h else h - 1
            while k > 0 and best_d[k - 1] > acc:
                best_d[k] = best_d[k - 1]
                best_i[k] = best_i[k - 1]
                k -= 1
            best_d[k] = acc
            best_i[k] = j
            if count < h:
                count += 1
        out[i] = np.sort(best_i)
    return out


def nearest_indices(X, Z, H: int, params: KernelParams) -> np.ndarray:
    """``(n, min(H, M))`` array of sorted neighbor indices for every row of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[0] == 0:
        raise ConfigError("inducing inputs Z must be a non-empty (M, D) array")
    if H < 1:
        raise ConfigError(f"H must be at least 1, got {H}")
    if X.shape[1] != Z.shape[1]:
        raise ShapeError(f"dimension mismatch: x has D={X.shape[1]}, Z has D={Z.shape[1]}")
    M = Z.shape[0]
    h = min(H, M)
    params = kernels.to_numpy(params)
    if params.is_stationary_matern:
        ls = params.lengthscales
        return _nearest_scaled(np.ascontiguousarray(X / ls), np.ascontiguousarray((Z / ls).T), h)
    out = np.empty((X.shape[0], h), dtype=np.int64)
    step = max(1, _CHUNK_ELEMENTS // M)
    for start in range(0, X.shape[0], step):
        chunk = X[start : start + step]
        out[start : start + step] = _select_top(neighbor_scores(chunk, Z, params), h)
    return out


def find_h_nearest(x, Z, H: int, params: KernelParams, query_id: int | None = None) -> NeighborMask:
    """Mask of the ``H`` inducing inputs closest to a single point ``x``."""
    x = np.asarray(x, dtype=float).reshape(1, -1)
    return NeighborMask(nearest_indices(x, Z, H, params)[0], query_id)


def mask_minibatch(X_B, Z, H: int, params: KernelParams) -> list[NeighborMask]:
    idx = nearest_indices(X_B, Z, H, params)
    return [NeighborMask(row, i) for i, row in enumerate(idx)]


def union_mask(masks: Sequence[NeighborMask]) -> NeighborMask:
    if not masks:
        raise ConfigError("union of an empty list of masks")
    return NeighborMask(np.unique(np.concatenate([m.active_indices for m in masks])))


def batch_active_set(X_B, Z, size: int, params: KernelParams) -> np.ndarray:
    """Fixed-size union of nearest inducing inputs over a whole mini-batch.

    Inducing inputs are ranked by their best score against any batch point and
    the top ``size`` are kept. Every kept ``z_m`` is within the ``size``
    nearest of some batch element, so this is a union of per-point
    neighborhoods grown until it holds exactly ``size`` points.
    """
    scores = neighbor_scores(np.atleast_2d(X_B), np.asarray(Z, float), params).max(axis=0)
    return _select_top(scores[None, :], min(size, len(Z)))[0]


def z_checksum(Z) -> str:
    Z = np.ascontiguousarray(np.asarray(Z, dtype=np.float64))
    return hashlib.sha256(repr(Z.shape).encode() + Z.tobytes()).hexdigest()


@dataclasses.dataclass(frozen=True)
class FixedZIndex:
    """Neighbor lists of all training points against frozen inducing inputs.

    The kernel used at build time defines the ranking; later lengthscale
    changes are not reflected, which is the point of precomputing.
    """

    neighbors: np.ndarray
    H: int
    checksum: str

    def __len__(self) -> int:
        return int(self.neighbors.shape[0])

    def check(self, Z) -> None:
        if z_checksum(Z) != self.checksum:
            raise StalenessError("inducing inputs changed since the neighbor index was built")

    def lookup(self, i: int, Z=None) -> NeighborMask:
        if Z is not None:
            self.check(Z)
        return NeighborMask(self.neighbors[i], int(i))

    def batch(self, rows: np.ndarray, Z=None) -> np.ndarray:
        if Z is not None:
            self.check(Z)
        return self.neighbors[rows]


def build_fixed_index(X, Z, H: int, params: KernelParams) -> FixedZIndex:
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    h = min(H, len(Z))
    if X.shape[0] == 0:
        neighbors = np.empty((0, h), dtype=np.int64)
    else:
        neighbors = nearest_indices(X, Z, H, params)
    neighbors.setflags(write=False)
    return FixedZIndex(neighbors, int(H), z_checksum(Z))
