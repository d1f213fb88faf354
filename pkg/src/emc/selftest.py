"""Built-in invariant suite (the ``emc selftest`` command).

Runs every module's headline invariants on a fixed zoo of sample chains and
groups with seeded randomness, printing one PASS/FAIL line per invariant and
stopping at the first breach.  Two deliberate-damage hooks exist for testing
the harness itself: ``mutate="sqrt_cache"`` perturbs the cached square-root
factor after downstream objects were built (the two density-block routes
then disagree), and ``mutate="phase"`` injects a non-unit-modulus phase
entry (the phase validation then rejects it).
"""

from __future__ import annotations

import dataclasses
import itertools
import sys
from dataclasses import dataclass

import numpy as np

from . import classical, correlator, entangled, ergodic, groups, schur
from .config import DEFAULT_TOLERANCES, Tolerances, ValidationFailure


@dataclass(frozen=True)
class CheckResult:
    name: str
    ok: bool
    residual: float
    threshold: float
    note: str = ""


def _sample_chains() -> dict[str, classical.StochasticMatrix]:
    rng = np.random.default_rng(20240)
    dense5 = rng.random((5, 5)) + 0.05
    dense5 /= dense5.sum(axis=1, keepdims=True)
    return {
        "absorbing3": classical.make_stochastic([[0.5, 0.5, 0], [0, 1, 0], [0, 0, 1]]),
        "period2": classical.make_stochastic([[0, 1], [1, 0]]),
        "bipartite4": classical.make_stochastic(
            [[0, 0, 0.5, 0.5], [0, 0, 0.5, 0.5], [0.5, 0.5, 0, 0], [0.5, 0.5, 0, 0]]
        ),
        "twostate": classical.make_stochastic([[0.7, 0.3], [0.3, 0.7]]),
        "dense5": classical.make_stochastic(dense5),
        "truncated3": classical.make_stochastic(
            [[0.5, 0.5, 0], [0.5, 0, 0.3], [0, 0.5, 0]]
        ),
    }


def _uniform_mixture(decomp: classical.ChainDecomposition):
    n = decomp.n_classes
    return classical.mix_stationary(decomp, [1.0 / n] * n)


def _random_units(n: int):
    units = []
    for i, j in itertools.product(range(n), repeat=2):
        u = np.zeros((n, n), complex)
        u[i, j] = 1.0
        units.append(u)
    return units


def run_selftest(
    seed: int = 2024,
    mutate: str | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
    stream=None,
) -> list[CheckResult]:
    """Run the invariant suite; returns per-check results, stopping on failure."""
    stream = stream if stream is not None else sys.stdout
    rng = np.random.default_rng(seed)
    chains = _sample_chains()
    results: list[CheckResult] = []

    def record(name: str, residual: float, threshold: float, note: str = "") -> bool:
        ok = residual <= threshold
        results.append(CheckResult(name, ok, float(residual), threshold, note))
        status = "PASS" if ok else "FAIL"
        extra = f" [{note}]" if note else ""
        print(
            f"{status} {name}: residual {residual:.3e} (tolerance {threshold:.0e}){extra}",
            file=stream,
        )
        return ok

    def classical_partition() -> float:
        worst = 0.0
        for m in chains.values():
            d = classical.decompose(m)
            pieces = [set(d.transient)] + [set(c) for c in d.recurrent_classes]
            union = set().union(*pieces)
            overlap = sum(len(p) for p in pieces) - len(union)
            worst = max(worst, float(overlap + abs(len(union) - m.size)))
        return worst

    def classical_closure() -> float:
        worst = 0.0
        for m in chains.values():
            d = classical.decompose(m)
            for cls in d.recurrent_classes:
                inside = np.zeros(m.size, bool)
                inside[list(cls)] = True
                worst = max(worst, float(m.entries[np.ix_(list(cls), ~inside)].sum()))
        return worst

    def classical_period_blocks() -> float:
        worst = 0.0
        for m in chains.values():
            d = classical.decompose(m)
            for cls, period, subs in zip(
                d.recurrent_classes, d.periods, d.cyclic_subclasses
            ):
                sub = m.entries[np.ix_(list(cls), list(cls))]
                power = np.linalg.matrix_power(sub, period)
                local = {v: p for p, s in enumerate(subs) for v in s}
                pos = {v: i for i, v in enumerate(cls)}
                for u in cls:
                    for v in cls:
                        if local[u] != local[v]:
                            worst = max(worst, float(power[pos[u], pos[v]]))
        return worst

    def classical_fixed_points() -> float:
        worst = 0.0
        for m in chains.values():
            d = classical.decompose(m)
            for x in d.stationary_vectors:
                worst = max(worst, float(np.abs(x @ m.entries - x).sum()))
            if d.n_classes:
                pi = _uniform_mixture(d)
                worst = max(worst, float(np.abs(pi.weights @ m.entries - pi.weights).sum()))
        return worst

    def schur_left_inverse() -> float:
        a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        back = schur.schur_contract(schur.diag_embed(a))
        return 0.0 if np.array_equal(back, a.astype(complex)) else float(np.abs(back - a).max())

    def schur_morphism() -> float:
        worst = 0.0
        for _ in range(20):
            a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            lhs = schur.to_flat(schur.diag_embed(a @ b))
            rhs = schur.to_flat(schur.diag_embed(a)) @ schur.to_flat(schur.diag_embed(b))
            worst = max(worst, float(np.abs(lhs - rhs).max()))
            star = schur.to_flat(schur.diag_embed(a.conj().T))
            worst = max(worst, float(np.abs(star - schur.to_flat(schur.diag_embed(a)).conj().T).max()))
        return worst

    def schur_trace_preservation() -> float:
        worst = 0.0
        for _ in range(10):
            x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            rho = x @ x.conj().T
            embedded = schur.to_flat(schur.diag_embed(rho))
            worst = max(worst, float(abs(np.trace(embedded) - np.trace(rho))))
        return worst

    def schur_lp_isometry() -> float:
        worst = 0.0
        for _ in range(10):
            t = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
            embedded = schur.diag_embed(t)
            worst = max(worst, float(abs(schur.trace_norm(embedded) - schur.trace_norm(t))))
            worst = max(worst, float(abs(schur.frobenius_norm(embedded) - schur.frobenius_norm(t))))
        return worst

    def schur_contract_positive() -> float:
        worst = 0.0
        for _ in range(10):
            x = rng.normal(size=(9, 9)) + 1j * rng.normal(size=(9, 9))
            sigma_flat = x @ x.conj().T
            sigma = schur.from_flat(sigma_flat, 3)
            contracted = schur.schur_contract(sigma)
            worst = max(worst, float(-schur.min_eigenvalue(contracted)))
            total = float(np.real(np.trace(sigma_flat)))
            part = float(np.real(np.trace(contracted)))
            worst = max(worst, float(max(-part, part - total)))
        return worst

    def entangled_factorized_action() -> float:
        m = chains["dense5"]
        op = entangled.lift(m, entangled.random_phases(5, seed + 1))
        worst = 0.0
        for _ in range(3):
            a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
            fast = entangled.entangled_apply(op, a)
            slow = entangled.entangled_apply_reference(op, a)
            worst = max(worst, float(np.abs(fast - slow).max()))
        return worst

    def entangled_isometry_route() -> float:
        m = chains["dense5"]
        op = entangled.lift(m, entangled.random_phases(5, seed + 2))
        worst = 0.0
        for _ in range(5):
            a = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
            b = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
            direct = entangled.transition_expectation(op, a, b)
            viaV = entangled.expectation_on_pair(op, np.kron(a, b))
            worst = max(worst, float(np.abs(direct - viaV).max()))
        return worst

    def entangled_diagonal_covariance() -> float:
        worst = 0.0
        for m in (chains["twostate"], chains["dense5"]):
            n = m.size
            op = entangled.lift(m, entangled.random_phases(n, seed + 3))
            for _ in range(5):
                d = rng.random(n)
                image = entangled.markov_operator(op, np.diag(d).astype(complex))
                worst = max(worst, float(np.abs(np.diag(image) - m.entries @ d).sum()))
        return worst

    def entangled_measure_bounds() -> float:
        m = chains["dense5"]
        decomp = classical.decompose(m)
        pi = _uniform_mixture(decomp)
        worst = 0.0
        diag_reference = None
        for chi_seed in (None, seed + 4, seed + 5):
            chi = None if chi_seed is None else entangled.random_phases(5, chi_seed)
            op = entangled.lift(m, chi)
            q = entangled.quantum_measure(op, pi)
            worst = max(worst, float(np.abs(np.diag(q.matrix) - pi.weights).max()))
            bound = np.sqrt(np.outer(pi.weights, pi.weights))
            worst = max(worst, float((np.abs(q.matrix) - bound).max()))
            worst = max(worst, abs(q.trace - 1.0))
            if diag_reference is None:
                diag_reference = np.diag(q.matrix)
            else:
                worst = max(worst, float(np.abs(np.diag(q.matrix) - diag_reference).max()))
        return worst

    def phase_modulus() -> float:
        chi = entangled.random_phases(4, seed + 6)
        if mutate == "phase":
            chi = chi.copy()
            chi[1, 2] *= 1.5
        try:
            entangled.validate_phases(chi, 4, tol)
        except ValidationFailure:
            return 1.0
        return 0.0

    def route_equivalence() -> float:
        worst = 0.0
        for n, k, chi_seed in ((3, 3, seed + 7), (4, 2, None)):
            p = rng.random((n, n)) + 0.05
            p /= p.sum(axis=1, keepdims=True)
            m = classical.make_stochastic(p)
            decomp = classical.decompose(m)
            pi = _uniform_mixture(decomp)
            chi = None if chi_seed is None else entangled.random_phases(n, chi_seed)
            op = entangled.lift(m, chi)
            q = entangled.quantum_measure(op, pi)
            if mutate == "sqrt_cache":
                tampered = op.w.copy()
                tampered[0, 0] *= 1.01
                op = dataclasses.replace(op, w=tampered)
            recursive = correlator.density_block_recursive(op, q, k, tol)
            closed = correlator.density_block_closed(op, q, k, tol)
            worst = max(worst, float(np.abs(recursive.matrix - closed.matrix).max()))
        return worst

    def marginal_consistency() -> float:
        m = chains["dense5"]
        decomp = classical.decompose(m)
        pi = _uniform_mixture(decomp)
        op = entangled.lift(m, entangled.random_phases(5, seed + 8))
        q = entangled.quantum_measure(op, pi)
        big = correlator.density_block_closed(op, q, 3, tol)
        small = correlator.density_block_closed(op, q, 2, tol)
        worst = 0.0
        for side in ("left", "right"):
            reduced = correlator.partial_trace_site(big, side)
            worst = max(worst, float(np.abs(reduced.matrix - small.matrix).max()))
        return worst

    def diagonal_restriction() -> float:
        m = chains["dense5"]
        decomp = classical.decompose(m)
        pi = _uniform_mixture(decomp)
        op = entangled.lift(m, entangled.random_phases(5, seed + 9))
        q = entangled.quantum_measure(op, pi)
        worst = 0.0
        for path in itertools.product(range(5), repeat=3):
            word = []
            for i in path:
                u = np.zeros((5, 5), complex)
                u[i, i] = 1.0
                word.append(u)
            value = correlator.finite_correlation(op, q, word, tol)
            expected = pi.weights[path[0]]
            for a, b in zip(path, path[1:]):
                expected *= m.entries[a, b]
            worst = max(worst, abs(value - expected))
        return worst

    def state_axioms() -> float:
        worst = 0.0
        for name in ("twostate", "dense5"):
            m = chains[name]
            decomp = classical.decompose(m)
            pi = _uniform_mixture(decomp)
            op = entangled.lift(m, entangled.random_phases(m.size, seed + 10))
            q = entangled.quantum_measure(op, pi)
            block = correlator.density_block_closed(op, q, 2, tol)
            worst = max(worst, schur.hermiticity_defect(block.matrix))
            worst = max(worst, -schur.min_eigenvalue(block.matrix))
            worst = max(worst, abs(block.trace - 1.0))
        return worst

    def correlation_linearity() -> float:
        m = chains["twostate"]
        decomp = classical.decompose(m)
        pi = _uniform_mixture(decomp)
        op = entangled.lift(m)
        q = entangled.quantum_measure(op, pi)
        worst = 0.0
        for _ in range(5):
            a1, a2, b = (
                rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)) for _ in range(3)
            )
            c1, c2 = rng.normal(size=2)
            combined = correlator.finite_correlation(op, q, [c1 * a1 + c2 * a2, b], tol)
            split = c1 * correlator.finite_correlation(
                op, q, [a1, b], tol
            ) + c2 * correlator.finite_correlation(op, q, [a2, b], tol)
            worst = max(worst, abs(combined - split))
        return worst

    def ergodic_mixture() -> float:
        worst = 0.0
        for name in ("absorbing3", "period2", "bipartite4", "twostate"):
            m = chains[name]
            decomp = classical.decompose(m)
            pi = _uniform_mixture(decomp)
            op = entangled.lift(m)
            q = entangled.quantum_measure(op, pi)
            words = ergodic.standard_test_words(m.size, seed)[: 3 * m.size**2]
            worst = max(
                worst,
                ergodic.decomposition_check(op, q, decomp, pi, words, tol),
            )
        return worst

    def phase_average() -> float:
        worst = 0.0
        for name in ("period2", "bipartite4"):
            m = chains[name]
            decomp = classical.decompose(m)
            pi = _uniform_mixture(decomp)
            op = entangled.lift(m)
            q = entangled.quantum_measure(op, pi)
            comp = ergodic.build_components(op, q, decomp, pi, tol)[0]
            for word in ergodic.standard_test_words(m.size, seed)[: m.size**2]:
                omega = comp.omega(word)
                avg = sum(
                    comp.phi(word, shift=k) for k in range(1, comp.period + 1)
                ) / comp.period
                worst = max(worst, abs(omega - avg))
        return worst

    def verdict_monotonicity() -> float:
        bad = 0.0
        for m in chains.values():
            decomp = classical.decompose(m)
            if not decomp.n_classes:
                continue
            pi = _uniform_mixture(decomp)
            v = ergodic.verdict(decomp, pi, (), tol)
            if v.strongly_clustering and not v.ergodic:
                bad = 1.0
        return bad

    def group_axioms() -> float:
        worst = 0.0
        for g in (groups.cyclic_group(6), groups.dihedral_group(4)):
            for _ in range(30):
                a, b, c = rng.integers(0, g.size, 3)
                lhs = g.mult[g.mult[a, b], c]
                rhs = g.mult[a, g.mult[b, c]]
                worst = max(worst, float(abs(int(lhs) - int(rhs))))
                worst = max(worst, float(abs(int(g.mult[a, g.inverse[a]]) - g.identity_index)))
                worst = max(worst, float(abs(int(g.mult[g.identity_index, a]) - a)))
        return worst

    def group_double_stochastic() -> float:
        worst = 0.0
        for g in (groups.cyclic_group(3), groups.dihedral_group(3)):
            weights = rng.random(g.size)
            weights /= weights.sum()
            mu = groups.group_measure(g, list(zip(g.labels, weights)))
            for side in ("right", "left"):
                w = groups.walk_matrix(g, mu, side, tol)
                worst = max(worst, float(np.abs(w.entries.sum(axis=0) - 1).max()))
                worst = max(worst, float(np.abs(w.entries.sum(axis=1) - 1).max()))
        return worst

    def group_equivariance() -> float:
        worst = 0.0
        for g in (groups.cyclic_group(3), groups.dihedral_group(3)):
            weights = rng.random(g.size)
            weights /= weights.sum()
            mu = groups.group_measure(g, list(zip(g.labels, weights)))
            for side in ("right", "left"):
                for element in range(g.size):
                    worst = max(
                        worst,
                        groups.equivariance_residual(
                            g, mu, side, element, n_samples=5, seed=seed, tol=tol
                        ),
                    )
        return worst

    checks = [
        ("classical-partition", classical_partition, 0.0),
        ("classical-closure", classical_closure, tol.closure_tol),
        ("classical-period-blocks", classical_period_blocks, tol.support_tol),
        ("classical-fixed-points", classical_fixed_points, tol.solver_tol),
        ("schur-left-inverse", schur_left_inverse, 0.0),
        ("schur-morphism", schur_morphism, 1e-12),
        ("schur-trace-preservation", schur_trace_preservation, 1e-12),
        ("schur-lp-isometry", schur_lp_isometry, 1e-10),
        ("schur-contract-positive", schur_contract_positive, 1e-10),
        ("entangled-factorized-action", entangled_factorized_action, 1e-12),
        ("entangled-isometry-route", entangled_isometry_route, tol.iso_tol),
        ("entangled-diagonal-covariance", entangled_diagonal_covariance, 1e-12),
        ("entangled-measure-bounds", entangled_measure_bounds, 1e-12),
        ("phase-unit-modulus", phase_modulus, 0.0),
        ("route-equivalence", route_equivalence, 1e-10),
        ("marginal-consistency", marginal_consistency, 1e-10),
        ("diagonal-restriction", diagonal_restriction, 1e-10),
        ("block-state-axioms", state_axioms, 1e-10),
        ("correlation-linearity", correlation_linearity, 1e-12),
        ("ergodic-mixture", ergodic_mixture, 1e-10),
        ("ergodic-phase-average", phase_average, 1e-10),
        ("verdict-monotonicity", verdict_monotonicity, 0.0),
        ("group-axioms", group_axioms, 0.0),
        ("group-double-stochastic", group_double_stochastic, tol.entangle_tol),
        ("group-equivariance", group_equivariance, tol.entangle_tol),
    ]

    for name, fn, threshold in checks:
        if not record(name, fn(), threshold):
            break
    return results
