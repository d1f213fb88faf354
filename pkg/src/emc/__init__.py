"""Entangled Markov chains: numerics for Schur-product lifts of classical chains."""

from ._kernels import backend as kernel_backend

__version__ = "0.1.0"

__all__ = ["kernel_backend", "__version__"]
