"""Schur (Hadamard) product calculus on single- and pair-indexed matrices.

Single-site operators are plain ``(n, n)`` complex arrays.  Operators on the
two-site product space are kept as 4-axis arrays ``x[i, j, k, l]`` holding the
matrix element between basis pair ``(i, j)`` and basis pair ``(k, l)`` --
index pairs stay explicit and are only flattened on demand, row-major over
``(i, j)``, via :func:`to_flat` / :func:`from_flat`.  ``np.kron(a, b)`` uses
the same flattening, so ``from_flat(np.kron(a, b), n)[i, j, k, l] ==
a[i, k] * b[j, l]``.

The calculus consists of three maps:

* ``schur_product(a, b)``      entrywise product of same-shape matrices,
* ``diag_embed(a)``            embeds ``a[i, k]`` at pair position
                               ``((i, i), (k, k))``, zero elsewhere,
* ``schur_contract(x)``        reads the diagonal-pair entries
                               ``x[i, i, j, j]`` back into a single-site
                               matrix.

``schur_contract`` is a left inverse of ``diag_embed`` by pure index
bookkeeping, ``diag_embed`` is multiplicative and *-preserving, preserves
traces of positive matrices, and is isometric for the trace and Frobenius
norms; ``schur_contract`` maps positive matrices to positive matrices.  All
of this is exercised numerically by the test suite.
"""

from __future__ import annotations

import numpy as np

from .config import DEFAULT_TOLERANCES, Tolerances, ValidationFailure


def schur_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Entrywise product; operands must share their index set exactly."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape:
        raise ValidationFailure(f"shape mismatch {a.shape} vs {b.shape}")
    return a * b


def diag_embed(a: np.ndarray) -> np.ndarray:
    """Embed a single-site matrix into the product space.

    The image has ``out[i, i, k, k] = a[i, k]`` and is exactly zero at every
    pair position off the doubled diagonal.
    """
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationFailure(f"expected a square matrix, got shape {a.shape}")
    n = a.shape[0]
    out = np.zeros((n, n, n, n), dtype=complex)
    i = np.arange(n)
    out[i[:, None], i[:, None], i[None, :], i[None, :]] = a
    return out


def schur_contract(x: np.ndarray) -> np.ndarray:
    """Diagonal-pair entries ``x[i, i, j, j]`` of a pair-indexed matrix."""
    x = np.asarray(x)
    if x.ndim != 4 or len(set(x.shape)) != 1:
        raise ValidationFailure(
            f"expected a pair-indexed array of shape (n, n, n, n), got {x.shape}"
        )
    return np.einsum("iijj->ij", x)


def to_flat(x: np.ndarray) -> np.ndarray:
    """Flatten a pair-indexed array to ``(n*n, n*n)``, row-major over pairs."""
    x = np.asarray(x)
    if x.ndim != 4:
        raise ValidationFailure(f"expected 4 axes, got {x.ndim}")
    n = x.shape[0]
    return x.reshape(n * n, n * n)


def from_flat(m: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`to_flat` for a factor alphabet of size ``n``."""
    m = np.asarray(m)
    if m.shape != (n * n, n * n):
        raise ValidationFailure(f"expected shape {(n * n, n * n)}, got {m.shape}")
    return m.reshape(n, n, n, n)


# ---------------------------------------------------------------------------
# norms and positivity checks


def hermiticity_defect(m: np.ndarray) -> float:
    return float(np.abs(m - m.conj().T).max())


def min_eigenvalue(m: np.ndarray) -> float:
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2.0).min())


def is_psd(m: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES) -> bool:
    return hermiticity_defect(m) <= tol.herm_tol and min_eigenvalue(m) >= -tol.psd_tol


def trace_norm(m: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES) -> float:
    """Sum of singular values of a dense matrix.

    Desk-scale only: sides beyond ``trace_norm_cutoff`` per alphabet factor
    are rejected rather than silently taking minutes.
    """
    m = np.asarray(m)
    side = m.shape[0] if m.ndim == 2 else m.shape[0]
    if m.ndim == 4:
        side = m.shape[0]
        m = to_flat(m)
    if side > tol.trace_norm_cutoff:
        raise ValidationFailure(
            f"trace norm restricted to factor size <= {tol.trace_norm_cutoff}, got {side}"
        )
    return float(np.linalg.svd(m, compute_uv=False).sum())


def frobenius_norm(m: np.ndarray) -> float:
    m = np.asarray(m)
    if m.ndim == 4:
        m = to_flat(m)
    return float(np.linalg.norm(m))


def assert_trace_class(
    m: np.ndarray, tol: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """Check Hermitian + PSD within tolerance and return the (real) trace."""
    m = np.asarray(m)
    flat = to_flat(m) if m.ndim == 4 else m
    defect = hermiticity_defect(flat)
    if defect > tol.herm_tol:
        raise ValidationFailure(f"matrix is not Hermitian (defect {defect:.3e})")
    lo = min_eigenvalue(flat)
    if lo < -tol.psd_tol:
        raise ValidationFailure(f"matrix is not PSD (min eigenvalue {lo:.3e})")
    return float(np.real(np.trace(flat)))
