"""Sparse variational GPs with nearest-neighbor masking of the inducing set."""

import jax

# All numerics are float64; this must run before any array is created.
jax.config.update("jax_enable_x64", True)

from .errors import (  # noqa: E402
    ConfigError,
    DataError,
    FactorizationError,
    NumericError,
    ParseError,
    ShapeError,
    SingularMatrixError,
    StalenessError,
    SWSGPError,
)
from .kernels import KernelKind, KernelParams, kernel_matrix, make_kernel  # noqa: E402
from .models import LikelihoodParams, PredictiveGaussian, SparseGPState  # noqa: E402
from .neighbors import FixedZIndex, NeighborMask  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DataError",
    "FactorizationError",
    "FixedZIndex",
    "KernelKind",
    "KernelParams",
    "LikelihoodParams",
    "NeighborMask",
    "NumericError",
    "ParseError",
    "PredictiveGaussian",
    "SWSGPError",
    "ShapeError",
    "SingularMatrixError",
    "SparseGPState",
    "StalenessError",
    "kernel_matrix",
    "make_kernel",
]
