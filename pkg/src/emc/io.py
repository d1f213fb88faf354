"""Serialization of results and atomic report writing.

All documents are plain dicts built in a fixed key order and rendered by
:func:`canonical_json`, so identical inputs produce byte-identical files.
Complex numbers are stored as ``[re, im]`` pairs; NaN (which strict JSON
cannot carry) becomes ``null``.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import os
import tempfile
from pathlib import Path

import numpy as np

from .config import Tolerances
from .correlator import DensityBlock
from .ergodic import ClusterVerdict, CorrelationCurve

SCHEMA = "emc/1"


def canonical_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def atomic_write_text(path: Path, text: str) -> None:
    """Write via a temp file in the target directory plus rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _clean_float(x: float) -> float | None:
    x = float(x)
    return None if math.isnan(x) or math.isinf(x) else x


def config_hash(payload: dict) -> str:
    """Stable short hash of the run configuration (output paths excluded)."""
    text = json.dumps(payload, sort_keys=True, default=str)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def report_document(
    analysis: str,
    cfg_hash: str,
    tolerances: Tolerances,
    row_deficiency: np.ndarray | None,
    payload: dict,
) -> dict:
    doc = {
        "schema": SCHEMA,
        "analysis": analysis,
        "config_hash": cfg_hash,
        "tolerances": dataclasses.asdict(tolerances),
    }
    if row_deficiency is not None:
        doc["row_deficiency"] = [float(d) for d in row_deficiency]
    doc.update(payload)
    return doc


def block_to_json(block: DensityBlock, diagnostics: dict | None = None) -> dict:
    """Density block with tuple-indexed entries in row-major order."""
    n = block.alphabet.size
    shape = (n,) * block.k
    entries = []
    for flat_i, flat_j in np.argwhere(block.matrix != 0.0):
        value = block.matrix[flat_i, flat_j]
        entries.append(
            [
                [int(x) for x in np.unravel_index(int(flat_i), shape)],
                [int(x) for x in np.unravel_index(int(flat_j), shape)],
                float(np.real(value)),
                float(np.imag(value)),
            ]
        )
    doc = {
        "k": block.k,
        "labels": list(block.alphabet.labels),
        "entries": entries,
        "trace": block.trace,
    }
    if diagnostics is not None:
        doc["eigenvalues"] = [float(v) for v in diagnostics["eigenvalues"]]
        doc["rank"] = diagnostics["rank"]
        doc["entropy"] = diagnostics["entropy"]
    return doc


def block_diagonal_csv(block: DensityBlock) -> str:
    """Classical marginals: one row per symbol tuple with its path weight."""
    n = block.alphabet.size
    shape = (n,) * block.k
    lines = [",".join(f"i{p + 1}" for p in range(block.k)) + ",probability"]
    diag = np.real(np.diag(block.matrix))
    for flat in range(block.matrix.shape[0]):
        tup = np.unravel_index(flat, shape)
        lines.append(",".join(str(int(x)) for x in tup) + f",{float(diag[flat])!r}")
    return "\n".join(lines) + "\n"


def curve_csv(curve: CorrelationCurve) -> str:
    lines = ["n,raw,cesaro"]
    for idx in range(curve.raw.size):
        lines.append(
            f"{idx + 1},{float(np.real(curve.raw[idx]))!r},"
            f"{float(np.real(curve.cesaro[idx]))!r}"
        )
    return "\n".join(lines) + "\n"


def verdict_to_json(v: ClusterVerdict) -> dict:
    residuals = {
        label: {
            "raw_final_residual": _clean_float(info["raw_final_residual"]),
            "cesaro_final_residual": _clean_float(info["cesaro_final_residual"]),
            "fitted_rate": _clean_float(info["fitted_rate"]),
        }
        for label, info in v.witness["residuals"].items()
    }
    return {
        "ergodic": v.ergodic,
        "strongly_clustering": v.strongly_clustering,
        "classes": v.witness["classes"],
        "residuals": residuals,
        "fitted_rate": _clean_float(v.witness["fitted_rate"]),
    }
