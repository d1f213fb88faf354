"""Backend dispatch for the block-assembly hot kernel.

The compiled Cython kernel is used when its extension module imported
successfully; otherwise (or when the ``EMC_PURE_PYTHON`` environment
variable is set to a non-empty value other than ``0``) the numpy
implementation takes over.  Both expose the same ``closed_block_entries``
signature and are compared entry for entry by the test suite and timed
against each other by ``benchmarks/bench_kernels.py``.
"""

from __future__ import annotations

import os

from . import _block_py

_forced_pure = os.environ.get("EMC_PURE_PYTHON", "") not in ("", "0")

if not _forced_pure:
    try:
        from . import _block_cy as _active

        BACKEND = "cython"
    except ImportError:
        _active = _block_py
        BACKEND = "python"
else:
    _active = _block_py
    BACKEND = "python"


def backend() -> str:
    """Name of the kernel backend selected at import time."""
    return BACKEND


def closed_block_entries(head, w, tail, k):
    return _active.closed_block_entries(head, w, tail, k)
