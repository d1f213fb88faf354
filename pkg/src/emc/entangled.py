"""Entangled lift of a classical chain.

A stochastic matrix P on an alphabet of size n, together with a unit-modulus
phase matrix chi (defaulting to all ones), defines the lift

    lift(A)[i, j] = sum_{k,l} conj(chi[i,k]) chi[j,l]
                    sqrt(P[i,k] P[j,l]) A[k, l].

The lift is never materialized as a matrix on matrices: with the factor
``W[i, k] = conj(chi[i, k]) * sqrt(P[i, k])`` it acts as ``W A W*`` in
O(n^3), and only this action (plus derived objects) is exposed.  Derived
objects:

* transition expectation  E(A (x) B) = A o lift(B)   (o = Schur product),
  equal to V* (A (x) B) V for the isometry V below;
* generating isometry     V e_i = sum_j chi[i,j] sqrt(P[i,j]) e_i (x) e_j,
  with V*V = 1 on exactly stochastic rows and column norm
  1 - row_deficiency[i] on truncated ones;
* one-site map            E_1(X) = 1 o lift(X), a diagonal matrix; on
  diagonal X it reduces to the classical action of P for every phase choice;
* quantum measure         Q(pi)[i, j] = sum_k pi_k chi[k,i] conj(chi[k,j])
                          sqrt(P[k,i] P[k,j]) = (W* diag(pi) W)[i, j],
  positive by construction, with diagonal pi P (= pi when pi is invariant).

Deficient rows are carried as-is: column norms of V drop below one and
``identity_image`` diagonals fall below one instead of anything being
renormalized.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .classical import StationaryDistribution, StochasticMatrix
from .config import DEFAULT_TOLERANCES, Tolerances, ValidationFailure
from .schur import schur_product, to_flat


def ones_phases(n: int) -> np.ndarray:
    return np.ones((n, n), dtype=complex)


def random_phases(n: int, seed: int) -> np.ndarray:
    """Deterministic gauge randomization: entries exp(i theta), theta uniform."""
    rng = np.random.default_rng(seed)
    return np.exp(2j * np.pi * rng.random((n, n)))


def validate_phases(
    phases: np.ndarray, n: int, tol: Tolerances = DEFAULT_TOLERANCES
) -> np.ndarray:
    phases = np.asarray(phases, dtype=complex)
    if phases.shape != (n, n):
        raise ValidationFailure(f"phase matrix shape {phases.shape}, expected {(n, n)}")
    defect = np.abs(np.abs(phases) - 1.0)
    if defect.max() > tol.phase_tol:
        i, j = map(int, np.unravel_index(int(defect.argmax()), phases.shape))
        raise ValidationFailure(
            f"phase entry ({i}, {j}) has modulus {abs(phases[i, j]):.12g}, not 1"
        )
    return phases


@dataclass(frozen=True)
class EntangledOperator:
    """A classical chain plus phases, with the action factor precomputed.

    ``w = conj(phases) * sqrt_entries`` is the only thing the fast paths
    touch: ``apply`` is ``w @ A @ w.conj().T``.
    """

    base: StochasticMatrix
    phases: np.ndarray
    sqrt_entries: np.ndarray
    w: np.ndarray

    @property
    def size(self) -> int:
        return self.base.size


def lift(
    matrix: StochasticMatrix,
    phases: np.ndarray | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> EntangledOperator:
    """Build the entangled lift of ``matrix`` with optional phases."""
    n = matrix.size
    chi = ones_phases(n) if phases is None else validate_phases(phases, n, tol)
    sqrt_entries = np.sqrt(matrix.entries)
    w = np.conj(chi) * sqrt_entries
    sqrt_entries.setflags(write=False)
    w.setflags(write=False)
    return EntangledOperator(base=matrix, phases=chi, sqrt_entries=sqrt_entries, w=w)


def entangled_apply(op: EntangledOperator, a: np.ndarray) -> np.ndarray:
    """Fast path ``W A W*`` for the lift action."""
    a = np.asarray(a)
    if a.shape != (op.size, op.size):
        raise ValidationFailure(f"operand shape {a.shape}, expected {(op.size, op.size)}")
    return op.w @ a @ op.w.conj().T


def entangled_apply_reference(op: EntangledOperator, a: np.ndarray) -> np.ndarray:
    """Defining quadruple sum, O(n^4); cross-check for the factorized path."""
    a = np.asarray(a, dtype=complex)
    n = op.size
    chi = op.phases
    s = op.sqrt_entries
    out = np.zeros((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            acc = 0.0 + 0.0j
            for k in range(n):
                for l in range(n):
                    acc += np.conj(chi[i, k]) * chi[j, l] * s[i, k] * s[j, l] * a[k, l]
            out[i, j] = acc
    return out


def identity_image(op: EntangledOperator) -> np.ndarray:
    """Image of the identity, ``W W*``; Hermitian PSD with diagonal 1 - deficiency."""
    return op.w @ op.w.conj().T


def schur_identity_report(
    op: EntangledOperator, tol: Tolerances = DEFAULT_TOLERANCES
) -> dict:
    """Is the lift identity preserving, and is it entangled?

    Identity preserving means every diagonal of the identity image is 1
    (automatic for zero-deficiency rows); entangled means some off-diagonal
    of the identity image is nonzero, i.e. the image differs from 1.
    """
    img = identity_image(op)
    diag_defect = float(np.abs(np.diag(img) - 1.0).max())
    off = img - np.diag(np.diag(img))
    off_mass = float(np.abs(off).max()) if op.size > 1 else 0.0
    return {
        "identity_preserving": diag_defect <= tol.entangle_tol,
        "entangled": off_mass > tol.entangle_tol,
    }


@dataclass(frozen=True)
class IsometryV:
    """Generating isometry, stored as per-column coefficient vectors.

    Column i of the map has support on the pair slots ``(i, j)`` only, with
    coefficient ``coefficients[i, j] = phases[i, j] * sqrt(P[i, j])``; this
    is the sparse-column form.  ``as_dense`` expands to an ``(n*n, n)``
    matrix in the row-major pair flattening.
    """

    coefficients: np.ndarray

    @property
    def size(self) -> int:
        return self.coefficients.shape[0]

    def as_dense(self) -> np.ndarray:
        n = self.size
        v = np.zeros((n * n, n), dtype=complex)
        for i in range(n):
            v[i * n : (i + 1) * n, i] = self.coefficients[i]
        return v

    def column_norms_sq(self) -> np.ndarray:
        return np.real(np.sum(np.abs(self.coefficients) ** 2, axis=1))


def build_isometry(op: EntangledOperator) -> IsometryV:
    coeff = op.phases * op.sqrt_entries
    coeff.setflags(write=False)
    return IsometryV(coefficients=coeff)


def transition_expectation(
    op: EntangledOperator, a: np.ndarray, b: np.ndarray
) -> np.ndarray:
    """Two-site expectation ``E(A (x) B) = A o lift(B)``."""
    return schur_product(np.asarray(a, dtype=complex), entangled_apply(op, b))


def expectation_on_pair(op: EntangledOperator, x: np.ndarray) -> np.ndarray:
    """``V* X V`` for an operator on the two-site product space.

    Accepts either the 4-axis pair-indexed form or the flattened
    ``(n*n, n*n)`` form.  For ``X = A (x) B`` this agrees with
    :func:`transition_expectation`; being a compression by an isometry it
    maps PSD to PSD.
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim == 4:
        x = to_flat(x)
    n = op.size
    if x.shape != (n * n, n * n):
        raise ValidationFailure(f"pair operand shape {x.shape}, expected {(n * n, n * n)}")
    v = build_isometry(op).as_dense()
    return v.conj().T @ x @ v


def markov_operator(op: EntangledOperator, x: np.ndarray) -> np.ndarray:
    """One-site map ``E_1(X) = 1 o lift(X)``: the diagonal of ``W X W*``.

    On diagonal arguments this is the classical action of the base chain,
    independently of the phase choice.
    """
    x = np.asarray(x)
    if x.shape != (op.size, op.size):
        raise ValidationFailure(f"operand shape {x.shape}, expected {(op.size, op.size)}")
    diag = np.einsum("ab,bc,ac->a", op.w, x, op.w.conj(), optimize=True)
    return np.diag(diag)


@dataclass(frozen=True)
class QuantumMeasure:
    """One-site measure of the chain: PSD matrix plus the vector it came from.

    ``normalized`` records whether ``pi`` was a probability; unnormalized
    nonnegative vectors are accepted and flagged, never rescaled.
    """

    matrix: np.ndarray
    pi: np.ndarray
    normalized: bool

    @property
    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))


def quantum_measure(
    op: EntangledOperator,
    pi: StationaryDistribution | np.ndarray,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> QuantumMeasure:
    """Build ``Q(pi) = W* diag(pi) W``, the chain's one-site density.

    PSD by construction; its diagonal is the one-step evolution of ``pi``
    (equal to ``pi`` itself when ``pi`` is invariant) and its trace is
    ``sum(pi)`` when the input is a probability.
    """
    weights = pi.weights if isinstance(pi, StationaryDistribution) else np.asarray(pi, float)
    if weights.shape != (op.size,):
        raise ValidationFailure(
            f"measure of length {weights.size} on an alphabet of size {op.size}"
        )
    if np.any(weights < 0.0):
        i = int(np.argwhere(weights < 0.0)[0])
        raise ValidationFailure(f"negative measure entry {weights[i]:g} at index {i}")
    q = op.w.conj().T @ (weights[:, None] * op.w)
    q = (q + q.conj().T) / 2.0
    q.setflags(write=False)
    weights = weights.copy()
    weights.setflags(write=False)
    return QuantumMeasure(
        matrix=q,
        pi=weights,
        normalized=bool(abs(weights.sum() - 1.0) <= tol.trace_tol),
    )
