"""Command-line front end: classify / density / correlate / cluster / groupwalk / selftest.

Inputs are stochastic matrices (CSV or sparse-triplet JSON, inline or file)
or group descriptions (JSON).  Every analysis writes machine-readable
reports into ``--out``: JSON documents carrying the schema tag, the config
hash, the tolerances in force and the per-row deficiencies, plus CSV files
for plot-ready curves.  Reports are written atomically and are byte-stable:
the same configuration and seed always produce identical files.

Exit codes: 0 success, 2 input/validation failure, 3 breach of a numerical
invariant (the violated invariant is named on stderr).

Every flag can also be supplied through ``--config FILE`` holding
``key = value`` lines (flag names without the leading dashes, dots allowed);
explicit flags win.  Tolerance overrides use ``--tol.<name> <value>``.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import classical, correlator, entangled, ergodic, groups, io, selftest
from .config import (
    DEFAULT_TOLERANCES,
    ConvergenceFailure,
    InvariantViolation,
    Tolerances,
    ValidationFailure,
)

ANALYSES = ("classify", "density", "correlate", "cluster", "groupwalk", "selftest")


@dataclass
class RunConfig:
    analysis: str
    input_matrix: str | None = None
    group: str | None = None
    side: str = "right"
    phases: str | None = None
    alpha: tuple[float, ...] | None = None
    k: int = 2
    gap_max: int = 64
    out: str = "."
    seed: int = 0
    mutate: str | None = None
    tol_overrides: dict = field(default_factory=dict)

    def tolerances(self) -> Tolerances:
        return DEFAULT_TOLERANCES.replace(**self.tol_overrides)


def _split_tol_flags(argv: list[str]) -> tuple[list[str], dict]:
    """Pull ``--tol.<name> <value>`` / ``--tol.<name>=<value>`` out of argv."""
    rest: list[str] = []
    overrides: dict = {}
    i = 0
    while i < len(argv):
        arg = argv[i]
        if arg.startswith("--tol."):
            if "=" in arg:
                key, value = arg[len("--tol.") :].split("=", 1)
            else:
                key = arg[len("--tol.") :]
                i += 1
                if i >= len(argv):
                    raise ValidationFailure(f"missing value for --tol.{key}")
                value = argv[i]
            field_types = {f.name: f.type for f in dataclasses.fields(Tolerances)}
            if key not in field_types:
                raise ValidationFailure(f"unknown tolerance name {key!r}")
            overrides[key] = int(value) if field_types[key] == "int" else float(value)
        else:
            rest.append(arg)
        i += 1
    return rest, overrides


def _read_config_file(path: str) -> dict:
    values: dict = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationFailure(f"config line {raw!r} is not key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="analysis", required=True)
    for name in ANALYSES:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="key = value file mirroring the flags")
        p.add_argument("--input", default=None, help="matrix: CSV/JSON text or file path")
        p.add_argument("--group", default=None, help="group spec: JSON text or file path")
        p.add_argument("--side", default=None, choices=("right", "left"))
        p.add_argument("--phases", default=None, help="phase matrix JSON or {\"seed\": n}")
        p.add_argument("--alpha", default=None, help="comma list of mixture coefficients")
        p.add_argument("--k", default=None, type=int, help="density block length")
        p.add_argument("--gap-max", dest="gap_max", default=None, type=int)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--seed", default=None, type=int)
        p.add_argument("--mutate", default=None, help="selftest damage hook (testing only)")
    return parser


def parse_config(argv: list[str]) -> RunConfig:
    argv, overrides = _split_tol_flags(list(argv))
    args = _build_parser().parse_args(argv)
    file_values = _read_config_file(args.config) if args.config else {}

    def pick(flag: str, cast, default):
        cli_value = getattr(args, flag.replace("-", "_"), None)
        if cli_value is not None:
            return cli_value
        if flag in file_values:
            return cast(file_values[flag])
        return default

    for key, value in file_values.items():
        if key.startswith("tol."):
            name = key[4:]
            if name not in overrides:
                field_types = {f.name: f.type for f in dataclasses.fields(Tolerances)}
                if name not in field_types:
                    raise ValidationFailure(f"unknown tolerance name {name!r}")
                overrides[name] = (
                    int(value) if field_types[name] == "int" else float(value)
                )

    alpha = pick("alpha", str, None)
    if isinstance(alpha, str):
        alpha = tuple(float(x) for x in alpha.split(","))
    return RunConfig(
        analysis=args.analysis,
        input_matrix=pick("input", str, None),
        group=pick("group", str, None),
        side=pick("side", str, "right"),
        phases=pick("phases", str, None),
        alpha=alpha,
        k=int(pick("k", int, 2)),
        gap_max=int(pick("gap-max", int, 64)),
        out=str(pick("out", str, ".")),
        seed=int(pick("seed", int, 0)),
        mutate=pick("mutate", str, None),
        tol_overrides=overrides,
    )


# ---------------------------------------------------------------------------
# input resolution


def _read_source(text: str) -> str:
    path = Path(text)
    if path.is_file():
        return path.read_text()
    return text


def _resolve_matrix(config: RunConfig, tol: Tolerances) -> classical.StochasticMatrix:
    if config.input_matrix is not None:
        return classical.load_matrix(_read_source(config.input_matrix), tol)
    if config.group is not None:
        group, measure = groups.group_from_json(json.loads(_read_source(config.group)))
        if measure is None:
            raise ValidationFailure("group spec has no measure; cannot build a walk")
        return groups.walk_matrix(group, measure, config.side, tol)
    raise ValidationFailure(f"analysis {config.analysis!r} needs --input or --group")


def _resolve_phases(
    config: RunConfig, n: int, tol: Tolerances
) -> np.ndarray | None:
    if config.phases is None:
        return None
    doc = json.loads(_read_source(config.phases))
    if isinstance(doc, dict) and "seed" in doc:
        return entangled.random_phases(n, int(doc["seed"]))
    chi = np.array([[complex(re, im) for re, im in row] for row in doc])
    return entangled.validate_phases(chi, n, tol)


def _stationary(
    matrix: classical.StochasticMatrix,
    decomposition: classical.ChainDecomposition,
    config: RunConfig,
    tol: Tolerances,
) -> classical.StationaryDistribution:
    if decomposition.n_classes == 0:
        if config.alpha is not None:
            raise ValidationFailure("mixture coefficients given, but no recurrent class exists")
        # truncation with no invariant vector: fall back to the uniform
        # initial measure (reported, never renormalized downstream)
        weights = np.full(matrix.size, 1.0 / matrix.size)
        return classical.StationaryDistribution(matrix.alphabet, weights, ())
    alpha = config.alpha
    if alpha is None:
        alpha = tuple(1.0 / decomposition.n_classes for _ in range(decomposition.n_classes))
    return classical.mix_stationary(decomposition, alpha, tol)


def _config_hash(config: RunConfig) -> str:
    payload = {
        "analysis": config.analysis,
        "input": _read_source(config.input_matrix) if config.input_matrix else None,
        "group": _read_source(config.group) if config.group else None,
        "side": config.side,
        "phases": _read_source(config.phases) if config.phases else None,
        "alpha": config.alpha,
        "k": config.k,
        "gap_max": config.gap_max,
        "seed": config.seed,
        "tol": config.tol_overrides,
    }
    return io.config_hash(payload)


def _diag_unit(n: int, i: int) -> np.ndarray:
    u = np.zeros((n, n), dtype=complex)
    u[i, i] = 1.0
    return u


# ---------------------------------------------------------------------------
# analyses


def _run_classify(config: RunConfig, tol: Tolerances, out: Path, cfg_hash: str) -> None:
    matrix = _resolve_matrix(config, tol)
    decomposition = classical.decompose(matrix, tol)
    doc = io.report_document(
        "classify",
        cfg_hash,
        tol,
        matrix.row_deficiency,
        classical.decomposition_to_json(decomposition),
    )
    io.atomic_write_text(out / "classify.json", io.canonical_json(doc))


def _run_density(config: RunConfig, tol: Tolerances, out: Path, cfg_hash: str) -> None:
    matrix = _resolve_matrix(config, tol)
    decomposition = classical.decompose(matrix, tol)
    stationary = _stationary(matrix, decomposition, config, tol)
    op = entangled.lift(matrix, _resolve_phases(config, matrix.size, tol), tol)
    measure = entangled.quantum_measure(op, stationary, tol)
    block = correlator.density_block_closed(op, measure, config.k, tol)
    payload: dict = {}
    if matrix.size**config.k <= tol.route_check_cutoff:
        reference = correlator.density_block_recursive(op, measure, config.k, tol)
        residual = float(np.abs(block.matrix - reference.matrix).max())
        if residual > tol.iso_tol:
            raise InvariantViolation("route-equivalence", residual)
        payload["route_residual"] = residual
    diagnostics = correlator.spectral_diagnostics(block, tol)
    payload.update(io.block_to_json(block, diagnostics))
    doc = io.report_document("density", cfg_hash, tol, matrix.row_deficiency, payload)
    io.atomic_write_text(out / "density.json", io.canonical_json(doc))
    io.atomic_write_text(out / "density_diagonal.csv", io.block_diagonal_csv(block))


def _curves(
    op: entangled.EntangledOperator,
    measure: entangled.QuantumMeasure,
    gap_max: int,
    tol: Tolerances,
) -> list[ergodic.CorrelationCurve]:
    n = op.size
    curves = []
    for i in range(n):
        unit = _diag_unit(n, i)
        curves.append(
            ergodic.cesaro_curve(op, measure, unit, unit, gap_max, f"d{i}_d{i}", tol)
        )
    if n >= 2:
        curves.append(
            ergodic.cesaro_curve(
                op, measure, _diag_unit(n, 0), _diag_unit(n, 1), gap_max, "d0_d1", tol
            )
        )
    return curves


def _run_correlate(config: RunConfig, tol: Tolerances, out: Path, cfg_hash: str) -> None:
    matrix = _resolve_matrix(config, tol)
    decomposition = classical.decompose(matrix, tol)
    stationary = _stationary(matrix, decomposition, config, tol)
    op = entangled.lift(matrix, _resolve_phases(config, matrix.size, tol), tol)
    measure = entangled.quantum_measure(op, stationary, tol)
    curves = _curves(op, measure, config.gap_max, tol)
    summary = {}
    for curve in curves:
        io.atomic_write_text(out / f"curve_{curve.label}.csv", io.curve_csv(curve))
        summary[curve.label] = {
            "product_limit": float(np.real(curve.product_limit)),
            "raw_final": float(np.real(curve.raw[-1])),
            "cesaro_final": float(np.real(curve.cesaro[-1])),
        }
    doc = io.report_document(
        "correlate", cfg_hash, tol, matrix.row_deficiency, {"curves": summary}
    )
    io.atomic_write_text(out / "correlate.json", io.canonical_json(doc))


def _run_cluster(config: RunConfig, tol: Tolerances, out: Path, cfg_hash: str) -> None:
    matrix = _resolve_matrix(config, tol)
    decomposition = classical.decompose(matrix, tol)
    if decomposition.n_classes == 0:
        raise ValidationFailure(
            "no recurrent class: the ergodic verdict needs a stationary distribution"
        )
    stationary = _stationary(matrix, decomposition, config, tol)
    op = entangled.lift(matrix, _resolve_phases(config, matrix.size, tol), tol)
    measure = entangled.quantum_measure(op, stationary, tol)
    words = ergodic.standard_test_words(matrix.size, config.seed)
    mixture_residual = ergodic.decomposition_check(
        op, measure, decomposition, stationary, words, tol
    )
    if mixture_residual > tol.solver_tol:
        raise InvariantViolation("ergodic-mixture-decomposition", mixture_residual)
    curves = _curves(op, measure, config.gap_max, tol)
    for curve in curves:
        io.atomic_write_text(out / f"curve_{curve.label}.csv", io.curve_csv(curve))
    result = ergodic.verdict(decomposition, stationary, curves, tol)
    payload = io.verdict_to_json(result)
    payload["mixture_residual"] = mixture_residual
    doc = io.report_document("cluster", cfg_hash, tol, matrix.row_deficiency, payload)
    io.atomic_write_text(out / "cluster.json", io.canonical_json(doc))


def _run_groupwalk(config: RunConfig, tol: Tolerances, out: Path, cfg_hash: str) -> None:
    if config.group is None:
        raise ValidationFailure("groupwalk needs --group")
    group, measure = groups.group_from_json(json.loads(_read_source(config.group)))
    if measure is None:
        raise ValidationFailure("group spec has no measure; cannot build a walk")
    matrix = groups.walk_matrix(group, measure, config.side, tol)
    payload: dict = {
        "kind": group.kind,
        "params": group.params,
        "side": config.side,
        "exact": group.exact,
        "matrix": classical.matrix_to_json(matrix),
    }
    if group.exact:
        payload["doubly_stochastic"] = groups.double_stochastic_check(matrix, tol)
        residuals = {}
        rng = np.random.default_rng(config.seed)
        sample = rng.choice(group.size, size=min(3, group.size), replace=False)
        for element in sorted(int(x) for x in sample):
            residuals[group.labels[element]] = groups.equivariance_residual(
                group, measure, config.side, element, n_samples=5, seed=config.seed, tol=tol
            )
        payload["equivariance_residuals"] = residuals
        worst = max(residuals.values()) if residuals else 0.0
        if worst > tol.entangle_tol:
            raise InvariantViolation("group-equivariance", worst)
    doc = io.report_document("groupwalk", cfg_hash, tol, matrix.row_deficiency, payload)
    io.atomic_write_text(out / "walk.json", io.canonical_json(doc))


def run(config: RunConfig) -> int:
    """Execute one analysis; returns the process exit code."""
    try:
        tol = config.tolerances()
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)
        if config.analysis == "selftest":
            results = selftest.run_selftest(seed=config.seed, mutate=config.mutate, tol=tol)
            if not all(r.ok for r in results):
                failed = next(r for r in results if not r.ok)
                print(
                    f"selftest failed at invariant {failed.name!r} "
                    f"(residual {failed.residual:.3e})",
                    file=sys.stderr,
                )
                return 3
            return 0
        cfg_hash = _config_hash(config)
        runner = {
            "classify": _run_classify,
            "density": _run_density,
            "correlate": _run_correlate,
            "cluster": _run_cluster,
            "groupwalk": _run_groupwalk,
        }[config.analysis]
        runner(config, tol, out, cfg_hash)
        return 0
    except (ValidationFailure, json.JSONDecodeError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except InvariantViolation as exc:
        print(f"numerical invariant violated: {exc}", file=sys.stderr)
        return 3
    except ConvergenceFailure as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return 3


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    try:
        config = parse_config(argv)
    except ValidationFailure as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
