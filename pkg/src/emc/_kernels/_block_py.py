"""Pure-numpy implementation of the closed-form block assembly.

The k-site density block factors entrywise as

    D[(i_1..i_k), (j_1..j_k)] = head[i_1, j_1]
        * prod_{m=1}^{k-1} w[i_m, i_{m+1}] * conj(w[j_m, j_{m+1}])
        * tail[i_k, j_k]

and the bond chain splits into a row-tuple-only product times the conjugate
of the same product over the column tuple.  Both backends therefore
precompute the per-tuple chain products once (O(k n**k)) and assemble the
block in a single O(n**2k) pass; the compiled kernel in ``_block_cy`` fuses
that pass, this one leans on numpy fancy indexing.
"""

from __future__ import annotations

import numpy as np


def tuple_digits(n: int, k: int) -> np.ndarray:
    """Row-major digit table: ``digits[m, t]`` is symbol m of tuple index t."""
    return np.array(np.unravel_index(np.arange(n**k), (n,) * k))


def chain_products(w: np.ndarray, digits: np.ndarray) -> np.ndarray:
    """Per-tuple product of ``w`` along consecutive symbols."""
    k = digits.shape[0]
    out = np.ones(digits.shape[1], dtype=complex)
    for m in range(k - 1):
        out *= w[digits[m], digits[m + 1]]
    return out


def closed_block_entries(
    head: np.ndarray, w: np.ndarray, tail: np.ndarray, k: int
) -> np.ndarray:
    """Assemble the ``(n**k, n**k)`` block from its entrywise closed form."""
    head = np.asarray(head, dtype=complex)
    w = np.asarray(w, dtype=complex)
    tail = np.asarray(tail, dtype=complex)
    n = head.shape[0]
    if k < 1:
        raise ValueError("block length must be >= 1")
    if k == 1:
        return head * tail
    digits = tuple_digits(n, k)
    chains = chain_products(w, digits)
    first, last = digits[0], digits[-1]
    block = head[first[:, None], first[None, :]] * tail[last[:, None], last[None, :]]
    block *= chains[:, None]
    block *= np.conj(chains)[None, :]
    return block
