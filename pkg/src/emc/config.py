"""Shared tolerances, size cutoffs and error types.

All numeric checks in the package pull their thresholds from a single
:class:`Tolerances` record so that CLI overrides reach every module.  The
defaults are sized for double precision with headroom: entry-level identities
are expected at ~1e-12, composite solves and block assemblies at ~1e-10.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    """Numeric thresholds and cutoffs used across the package."""

    stochastic_tol: float = 1e-9     # row sum + deficiency == 1
    support_tol: float = 1e-14      # edge existence in the support graph
    closure_tol: float = 1e-12     # outgoing mass of a closed class
    solver_tol: float = 1e-10       # stationary-vector residual (l1)
    dense_cutoff: int = 2000         # direct solve up to this many states
    max_iters: int = 10**6           # power-iteration budget

    herm_tol: float = 1e-10          # Hermiticity of density-like matrices
    psd_tol: float = 1e-10           # minimum eigenvalue of PSD matrices
    trace_tol: float = 1e-10         # stored vs computed trace
    iso_tol: float = 1e-10           # V*V == identity
    phase_tol: float = 1e-12         # |chi_ij| == 1
    entangle_tol: float = 1e-10      # identity-preservation / entanglement report

    block_cutoff: int = 4096         # |alphabet|**k for dense density blocks
    route_check_cutoff: int = 1296   # |alphabet|**k up to which the CLI cross-checks routes
    curve_cutoff: int = 512          # maximum number of correlation gaps
    word_cutoff: int = 4096          # maximum observable-word length
    trace_norm_cutoff: int = 256     # per-factor side for dense trace norms
    support_mass_tol: float = 1e-12  # class weight counted as present in a mixture

    def replace(self, **overrides: float | int) -> "Tolerances":
        """Copy with the named thresholds overridden (unknown names raise)."""
        for name in overrides:
            if name not in {f.name for f in dataclasses.fields(self)}:
                raise ValueError(f"unknown tolerance name: {name!r}")
        return dataclasses.replace(self, **overrides)


DEFAULT_TOLERANCES = Tolerances()


class ValidationFailure(ValueError):
    """An input violates its contract (bad file, negative entry, shape mismatch)."""


class InvariantViolation(RuntimeError):
    """A numeric invariant the package promises to maintain was breached."""

    def __init__(self, invariant: str, residual: float, message: str = ""):
        self.invariant = invariant
        self.residual = residual
        detail = message or f"invariant {invariant!r} violated, residual {residual:.3e}"
        super().__init__(detail)


class ConvergenceFailure(RuntimeError):
    """An iterative solver ran out of its iteration budget."""

    def __init__(self, residual: float, iterations: int):
        self.residual = residual
        self.iterations = iterations
        super().__init__(
            f"no convergence after {iterations} iterations (residual {residual:.3e})"
        )
