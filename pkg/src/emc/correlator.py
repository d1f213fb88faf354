"""Correlation functions and k-site density blocks of the lifted chain.

The state of the lifted chain is determined by its finite-dimensional
distributions: with ``E_A(X) = A o lift(X)`` (o = Schur product) and a
quantum measure Q,

    omega(A_1 (x) ... (x) A_n) = Tr(Q . E_{A_1}( ... E_{A_n}(1) ... )).

Restricted to diagonal matrix units this reproduces the classical path
measure ``pi[i_1] P[i_1, i_2] ... P[i_{k-1}, i_k]`` for every phase choice.

The k-site density block is computed by two deliberately different routes
that serve as mutual oracles:

* ``density_block_recursive`` evaluates the defining nested expectations,
  entry by entry over tuple indices, with the lift applied as genuine
  ``W X W*`` conjugations (batched level by level over shared tuple
  suffixes, which changes the flop count but not the arithmetic route);
* ``density_block_closed`` evaluates the entrywise product formula

      D[(i_vec), (j_vec)] = conj(Q)[i_1, j_1]
          * prod_m W[i_m, i_{m+1}] conj(W[j_m, j_{m+1}])
          * lift(1)[i_k, j_k]

  through the kernel backend (compiled if available).

Blocks are indexed by k-tuples of alphabet symbols in row-major tuple order,
and the matrix is stored in the orientation of the defining trace formula:
``omega(A_1 (x) ... (x) A_k) = sum_{IJ} D[I, J] * prod_m A_m[i_m, j_m]``.
Hermiticity, positivity, unit trace (for exact chains) and the equality of
the two routes are test-suite properties, not runtime assumptions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels
from .classical import Alphabet
from .config import DEFAULT_TOLERANCES, Tolerances, ValidationFailure
from .entangled import (
    EntangledOperator,
    QuantumMeasure,
    identity_image,
    markov_operator,
    transition_expectation,
)

Word = Sequence[np.ndarray]


def _validate_word(op: EntangledOperator, word: Word, tol: Tolerances) -> list[np.ndarray]:
    if len(word) == 0:
        raise ValidationFailure("observable word must have at least one site")
    if len(word) > tol.word_cutoff:
        raise ValidationFailure(
            f"word length {len(word)} exceeds cutoff {tol.word_cutoff}"
        )
    n = op.size
    sites = []
    for pos, a in enumerate(word):
        a = np.asarray(a, dtype=complex)
        if a.shape != (n, n):
            raise ValidationFailure(
                f"site {pos} has shape {a.shape}, expected {(n, n)}"
            )
        sites.append(a)
    return sites


def word_functional(
    op: EntangledOperator,
    measure: QuantumMeasure,
    word: Word,
    terminal: np.ndarray | None = None,
    shift: int = 0,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> complex:
    """Evaluate ``Tr(Q . E_1^shift(E_{A_1}(... E_{A_n}(terminal))))``.

    ``terminal`` defaults to the identity; a projection there restricts the
    trailing site, which is how the ergodic components localize classes.
    """
    sites = _validate_word(op, word, tol)
    x = np.eye(op.size, dtype=complex) if terminal is None else np.asarray(terminal, complex)
    for a in reversed(sites):
        x = transition_expectation(op, a, x)
    for _ in range(shift):
        x = markov_operator(op, x)
    return complex(np.trace(measure.matrix @ x))


def finite_correlation(
    op: EntangledOperator,
    measure: QuantumMeasure,
    word: Word,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> complex:
    """The chain's n-point function on an observable word."""
    return word_functional(op, measure, word, tol=tol)


def shift_correlation(
    op: EntangledOperator,
    measure: QuantumMeasure,
    a: np.ndarray,
    b: np.ndarray,
    gap: int,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> complex:
    """Two-point function ``omega(A (x) 1^gap (x) B)``.

    Fast path: one ``E_B``, then ``gap`` applications of the one-site map,
    then ``E_A`` -- equivalent to inserting ``gap`` identity sites.
    """
    if gap < 0:
        raise ValidationFailure("gap must be >= 0")
    n = op.size
    x = transition_expectation(op, np.asarray(b, complex), np.eye(n, dtype=complex))
    for _ in range(gap):
        x = markov_operator(op, x)
    x = transition_expectation(op, np.asarray(a, complex), x)
    return complex(np.trace(measure.matrix @ x))


# ---------------------------------------------------------------------------
# density blocks


@dataclass(frozen=True)
class DensityBlock:
    """Reduced density matrix of ``k`` consecutive sites.

    ``matrix`` is ``(n**k, n**k)`` over row-major symbol tuples; ``trace``
    is 1 for exact chains and reports the surviving mass for truncations.
    """

    k: int
    alphabet: Alphabet
    matrix: np.ndarray
    trace: float

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


def _check_block_size(n: int, k: int, tol: Tolerances) -> None:
    if k < 1:
        raise ValidationFailure("block length must be >= 1")
    if n**k > tol.block_cutoff:
        raise ValidationFailure(
            f"block too large: {n}**{k} = {n**k} exceeds cutoff {tol.block_cutoff}"
        )


def density_block_recursive(
    op: EntangledOperator,
    measure: QuantumMeasure,
    k: int,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> DensityBlock:
    """Block via the defining trace formula.

    Entry ``(i_vec, j_vec)`` is the nested expectation of the matrix-unit
    word ``e_{i_1 j_1} ... e_{i_k j_k}`` closed off by the diagonal embedding
    of ``pi``.  Sites are peeled right to left; the batch over tuple suffixes
    shares intermediates but every step is a dense ``W X W*`` conjugation of
    the full one-site matrices.
    """
    n = op.size
    _check_block_size(n, k, tol)
    w = op.w
    wc = w.conj()
    pi = measure.pi.astype(complex)
    rows, cols = [idx.ravel() for idx in np.indices((n, n))]
    pair_of = rows * n + cols

    # trailing site: each matrix unit Schur-multiplied into lift(1)
    p_one = identity_image(op)
    x = np.zeros((n * n, n, n), dtype=complex)
    x[pair_of, rows, cols] = p_one[rows, cols]

    for _site in range(k - 1, 1, -1):
        px = np.einsum("ab,sbc,dc->sad", w, x, wc, optimize=True)
        count = px.shape[0]
        y = np.zeros((n * n, count, n, n), dtype=complex)
        y[pair_of[:, None], np.arange(count)[None, :], rows[:, None], cols[:, None]] = (
            px[:, rows, cols].T
        )
        x = y.reshape(n * n * count, n, n)

    if k == 1:
        entries = np.einsum("a,ab,sbc,ac->s", pi, w, x, wc, optimize=True)
    else:
        px = np.einsum("ab,sbc,dc->sad", w, x, wc, optimize=True)
        # leading site: the masked conjugation collapses to one scalar factor
        # per matrix unit, contracted here directly from (pi, W)
        site_one = np.einsum("a,ai,aj->ij", pi, w, wc, optimize=True)
        entries = (site_one[None, :, :] * px).transpose(1, 2, 0).reshape(-1)

    interleaved = entries.reshape((n,) * (2 * k))
    perm = list(range(0, 2 * k, 2)) + list(range(1, 2 * k, 2))
    mat = np.ascontiguousarray(np.transpose(interleaved, perm)).reshape(n**k, n**k)
    return DensityBlock(
        k=k,
        alphabet=op.base.alphabet,
        matrix=mat,
        trace=float(np.real(np.trace(mat))),
    )


def density_block_closed(
    op: EntangledOperator,
    measure: QuantumMeasure,
    k: int,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> DensityBlock:
    """Block via the entrywise closed product formula (kernel backend)."""
    n = op.size
    _check_block_size(n, k, tol)
    head = np.conj(measure.matrix).astype(complex)
    tail = identity_image(op).astype(complex)
    mat = _kernels.closed_block_entries(
        np.ascontiguousarray(head),
        np.ascontiguousarray(op.w.astype(complex)),
        np.ascontiguousarray(tail),
        k,
    )
    return DensityBlock(
        k=k,
        alphabet=op.base.alphabet,
        matrix=mat,
        trace=float(np.real(np.trace(mat))),
    )


def partial_trace_site(block: DensityBlock, side: str) -> DensityBlock:
    """Trace out the first (``side="left"``) or last (``side="right"``) site."""
    if block.k < 2:
        raise ValidationFailure("cannot trace a single-site block")
    if side not in ("left", "right"):
        raise ValidationFailure(f"side must be 'left' or 'right', got {side!r}")
    n = block.alphabet.size
    rest = n ** (block.k - 1)
    if side == "right":
        shaped = block.matrix.reshape(rest, n, rest, n)
        reduced = np.einsum("asbs->ab", shaped)
    else:
        shaped = block.matrix.reshape(n, rest, n, rest)
        reduced = np.einsum("sasb->ab", shaped)
    return DensityBlock(
        k=block.k - 1,
        alphabet=block.alphabet,
        matrix=reduced,
        trace=float(np.real(np.trace(reduced))),
    )


def spectral_diagnostics(
    block: DensityBlock, tol: Tolerances = DEFAULT_TOLERANCES
) -> dict:
    """Eigenvalues (descending), numerical rank and von Neumann entropy."""
    sym = (block.matrix + block.matrix.conj().T) / 2.0
    eigenvalues = np.linalg.eigvalsh(sym)[::-1]
    rank = int(np.count_nonzero(eigenvalues > tol.psd_tol))
    positive = eigenvalues[eigenvalues > 0.0]
    entropy = float(-np.sum(positive * np.log(positive))) if positive.size else 0.0
    return {"eigenvalues": eigenvalues, "rank": rank, "entropy": entropy}
