"""Ergodic decomposition of the lifted chain and the clustering dichotomy.

For a stationary mixture ``pi = sum_l alpha_l x_l`` over recurrent classes,
the chain's state splits into per-class components.  With ``p_l`` the
projection onto class ``l`` and ``p_ref`` the cyclic subclass containing the
class's minimal index:

    omega_l(word) = Tr(Q . E_word(p_l)) / pi(p_l)
    phi_l(word)   = Tr(Q . E_word(p_subclass(ref + n))) / pi(p_ref)

where ``n`` is the word length (shifted words advance the subclass index
further).  ``phi_l`` localizes site 1 at the reference subclass and is only
period-step shift invariant; omega_l is the average of ``phi_l`` over one
full cycle of shifts, and the chain itself is the weight-``pi(p_l)`` mixture
of the ``omega_l``.  Both identities hold exactly on finite words and are
checked numerically.

The dichotomy is structural: the chain is ergodic iff exactly one class
carries mixture weight, and strongly clustering iff additionally that class
is aperiodic.  Correlation curves (raw and Cesaro-averaged two-point
functions) are attached as corroborating evidence, including a fitted
geometric decay rate, but never decide the verdict.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .classical import ChainDecomposition, StationaryDistribution
from .config import DEFAULT_TOLERANCES, Tolerances, ValidationFailure
from .correlator import Word, finite_correlation, shift_correlation, word_functional
from .entangled import EntangledOperator, QuantumMeasure


def _projection(n: int, indices: Sequence[int]) -> np.ndarray:
    p = np.zeros((n, n), dtype=complex)
    for i in indices:
        p[i, i] = 1.0
    return p


def support_classes(
    decomposition: ChainDecomposition,
    stationary: StationaryDistribution,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> list[int]:
    """Indices of the recurrent classes carrying mixture weight."""
    if len(stationary.mixture_coefficients) != decomposition.n_classes:
        raise ValidationFailure(
            "stationary distribution does not match the decomposition"
        )
    return [
        idx
        for idx, alpha in enumerate(stationary.mixture_coefficients)
        if alpha > tol.support_mass_tol
    ]


@dataclass(frozen=True)
class ErgodicComponent:
    """Evaluator for one class's ergodic and completely ergodic components."""

    class_id: int
    indices: tuple[int, ...]
    weight: float
    period: int
    subclasses: tuple[tuple[int, ...], ...]
    ref_subclass: int
    op: EntangledOperator
    measure: QuantumMeasure

    def omega(self, word: Word, shift: int = 0) -> complex:
        """Class-restricted state; exactly shift invariant."""
        terminal = _projection(self.op.size, self.indices)
        val = word_functional(self.op, self.measure, word, terminal, shift)
        return val / self.weight

    def phi(self, word: Word, shift: int = 0) -> complex:
        """Phase-localized component; invariant only under period-step shifts.

        The trailing projection advances through the subclass cycle with the
        total word length, which pins site 1 to the reference subclass.
        """
        offset = (self.ref_subclass + len(word) + shift) % self.period
        terminal = _projection(self.op.size, self.subclasses[offset])
        val = word_functional(self.op, self.measure, word, terminal, shift)
        ref_mass = float(
            sum(self.measure.pi[i] for i in self.subclasses[self.ref_subclass])
        )
        return val / ref_mass


def build_components(
    op: EntangledOperator,
    measure: QuantumMeasure,
    decomposition: ChainDecomposition,
    stationary: StationaryDistribution,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> list[ErgodicComponent]:
    """One component per supported class, in class order."""
    if decomposition.periods is None or decomposition.cyclic_subclasses is None:
        raise ValidationFailure("decomposition lacks periods/subclasses; run decompose()")
    components = []
    for idx in support_classes(decomposition, stationary, tol):
        cls = decomposition.recurrent_classes[idx]
        weight = float(stationary.weights[list(cls)].sum())
        components.append(
            ErgodicComponent(
                class_id=idx,
                indices=cls,
                weight=weight,
                period=decomposition.periods[idx],
                subclasses=decomposition.cyclic_subclasses[idx],
                ref_subclass=0,
                op=op,
                measure=measure,
            )
        )
    return components


def component_correlation(
    component: ErgodicComponent, word: Word, which: str, shift: int = 0
) -> complex:
    if which == "omega":
        return component.omega(word, shift)
    if which == "phi":
        return component.phi(word, shift)
    raise ValidationFailure(f"which must be 'omega' or 'phi', got {which!r}")


def decomposition_check(
    op: EntangledOperator,
    measure: QuantumMeasure,
    decomposition: ChainDecomposition,
    stationary: StationaryDistribution,
    test_words: Sequence[Word],
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> float:
    """Max residual of the convex decomposition over the test words.

    Both sides of

        omega(word) = sum_l (weight_l / period_l)
                      sum_{k=1..period_l} phi_l(word shifted by k)

    are evaluated verbatim; the return value is the largest absolute gap.
    """
    components = build_components(op, measure, decomposition, stationary, tol)
    worst = 0.0
    for word in test_words:
        lhs = finite_correlation(op, measure, word, tol)
        rhs = 0.0 + 0.0j
        for comp in components:
            acc = 0.0 + 0.0j
            for k in range(1, comp.period + 1):
                acc += comp.phi(word, shift=k)
            rhs += (comp.weight / comp.period) * acc
        worst = max(worst, abs(lhs - rhs))
    return worst


def standard_test_words(n: int, seed: int = 0) -> list[list[np.ndarray]]:
    """Word suite for decomposition checks.

    Alphabets up to 4: every matrix unit as a one-site word and every pair
    of matrix units as a two-site word.  Larger alphabets: 20 seeded random
    Hermitian words of lengths 1 to 3.
    """
    units = []
    for i in range(n):
        for j in range(n):
            u = np.zeros((n, n), dtype=complex)
            u[i, j] = 1.0
            units.append(u)
    if n <= 4:
        words = [[u] for u in units]
        words.extend([u, v] for u in units for v in units)
        return words
    rng = np.random.default_rng(seed)
    words = []
    for t in range(20):
        length = 1 + t % 3
        word = []
        for _ in range(length):
            x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            word.append((x + x.conj().T) / 2.0)
        words.append(word)
    return words


# ---------------------------------------------------------------------------
# correlation curves and the verdict


@dataclass(frozen=True)
class CorrelationCurve:
    """Two-point function of (A, B) over increasing shifts.

    ``raw[k-1] = omega(A tau^k B)`` for k = 1..N, ``cesaro`` its running
    average, ``product_limit = omega(A) omega(B)`` the clustering target.
    """

    label: str
    raw: np.ndarray
    cesaro: np.ndarray
    product_limit: complex


def cesaro_curve(
    op: EntangledOperator,
    measure: QuantumMeasure,
    a: np.ndarray,
    b: np.ndarray,
    n_max: int,
    label: str = "",
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> CorrelationCurve:
    """Raw and Cesaro-averaged two-point sequences up to shift ``n_max``."""
    if not 1 <= n_max <= tol.curve_cutoff:
        raise ValidationFailure(
            f"curve length {n_max} outside 1..{tol.curve_cutoff}"
        )
    raw = np.empty(n_max, dtype=complex)
    for k in range(1, n_max + 1):
        raw[k - 1] = shift_correlation(op, measure, a, b, gap=k - 1, tol=tol)
    cesaro = np.cumsum(raw) / np.arange(1, n_max + 1)
    limit = finite_correlation(op, measure, [a], tol) * finite_correlation(
        op, measure, [b], tol
    )
    return CorrelationCurve(label=label, raw=raw, cesaro=cesaro, product_limit=limit)


def fit_decay_rate(residuals: np.ndarray, floor: float = 1e-12) -> float:
    """Geometric rate of a decaying residual sequence.

    Least-squares slope of log |residual| against the shift index, taken over
    the last half of the window where residuals still clear the noise floor.
    Returns NaN when fewer than four usable points exist.
    """
    mags = np.abs(np.asarray(residuals))
    usable = int(np.argmax(mags <= floor)) if np.any(mags <= floor) else mags.size
    if usable < 4:
        return float("nan")
    lo = usable // 2
    xs = np.arange(lo, usable)
    ys = np.log(mags[lo:usable])
    slope = np.polyfit(xs, ys, 1)[0]
    return float(np.exp(slope))


@dataclass(frozen=True)
class ClusterVerdict:
    """Structural ergodicity verdict with numerical corroboration attached."""

    ergodic: bool
    strongly_clustering: bool
    witness: dict


def verdict(
    decomposition: ChainDecomposition,
    stationary: StationaryDistribution,
    curves: Sequence[CorrelationCurve] = (),
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> ClusterVerdict:
    """Decide ergodicity and strong clustering from the class structure.

    Ergodic iff a single class carries mixture weight; strongly clustering
    iff that class is additionally aperiodic.  Curve residuals and fitted
    decay rates are recorded as evidence only.
    """
    if decomposition.periods is None:
        raise ValidationFailure("decomposition lacks periods; run decompose()")
    supported = support_classes(decomposition, stationary, tol)
    ergodic = len(supported) == 1
    strongly = ergodic and decomposition.periods[supported[0]] == 1
    curve_info = {}
    rates = []
    for curve in curves:
        residuals = curve.raw - curve.product_limit
        rate = fit_decay_rate(residuals)
        if not np.isnan(rate):
            rates.append(rate)
        curve_info[curve.label or f"curve{len(curve_info)}"] = {
            "raw_final_residual": float(abs(residuals[-1])),
            "cesaro_final_residual": float(abs(curve.cesaro[-1] - curve.product_limit)),
            "fitted_rate": rate,
        }
    witness = {
        "class_count": len(supported),
        "classes": [
            {
                "id": idx,
                "weight": float(stationary.mixture_coefficients[idx]),
                "period": decomposition.periods[idx],
            }
            for idx in supported
        ],
        "residuals": curve_info,
        "fitted_rate": max(rates) if rates else float("nan"),
    }
    return ClusterVerdict(ergodic=ergodic, strongly_clustering=strongly, witness=witness)
