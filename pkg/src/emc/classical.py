"""Classical stochastic matrices and their ergodic classification.

A chain lives on a labeled, ordered alphabet.  Truncations of infinite state
spaces are carried as sub-stochastic rows: the lost tail mass of each row is
stored in ``row_deficiency`` and is never renormalized away, so leakage stays
visible to every downstream computation.

The classification pipeline is

    communication_classes -> classify_states -> period_of_class
        -> cyclic_subclasses -> stationary_distribution -> mix_stationary

with ``decompose`` running the whole thing.  A class is recurrent exactly
when it is closed (no outgoing mass) and exactly stochastic (no deficiency);
on a finite truncation every such class is positive recurrent.  Classes and
subclasses are always ordered by their minimal contained index so identical
inputs give identical decompositions.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .config import (
    DEFAULT_TOLERANCES,
    ConvergenceFailure,
    Tolerances,
    ValidationFailure,
)

Label = str | int


@dataclass(frozen=True)
class Alphabet:
    """Ordered collection of distinct state labels."""

    labels: tuple[Label, ...]

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValidationFailure("alphabet labels must be distinct")
        if not self.labels:
            raise ValidationFailure("alphabet must be nonempty")

    @property
    def size(self) -> int:
        return len(self.labels)

    def index(self, label: Label) -> int:
        return self.labels.index(label)

    @staticmethod
    def of_size(n: int) -> "Alphabet":
        return Alphabet(tuple(range(n)))


@dataclass(frozen=True)
class StochasticMatrix:
    """Nonnegative matrix with per-row tail-mass bookkeeping.

    ``entries[i, j]`` is the probability of stepping from state i to state j;
    ``row_deficiency[i] = 1 - sum_j entries[i, j]`` is the mass lost to
    truncation (zero for an exactly stochastic row).
    """

    alphabet: Alphabet
    entries: np.ndarray
    row_deficiency: np.ndarray

    @property
    def size(self) -> int:
        return self.alphabet.size

    @property
    def is_exact(self) -> bool:
        return bool(np.all(self.row_deficiency == 0.0))


def make_stochastic(
    entries: np.ndarray | Sequence[Sequence[float]],
    labels: Sequence[Label] | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> StochasticMatrix:
    """Validate raw entries and attach per-row deficiencies.

    Raises on negative entries (naming the offending position) and on rows
    whose sum exceeds 1 beyond ``stochastic_tol``.  Row sums within
    ``stochastic_tol`` of 1 are treated as exact.
    """
    m = np.array(entries, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValidationFailure(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValidationFailure("matrix entries must be finite")
    neg = np.argwhere(m < 0.0)
    if neg.size:
        i, j = map(int, neg[0])
        raise ValidationFailure(f"negative entry {m[i, j]:g} at row {i}, column {j}")
    n = m.shape[0]
    alphabet = Alphabet(tuple(labels)) if labels is not None else Alphabet.of_size(n)
    if alphabet.size != n:
        raise ValidationFailure(
            f"{alphabet.size} labels given for a {n}x{n} matrix"
        )
    sums = m.sum(axis=1)
    over = np.argwhere(sums > 1.0 + tol.stochastic_tol)
    if over.size:
        i = int(over[0])
        raise ValidationFailure(f"row {i} sums to {sums[i]:.12g} > 1")
    deficiency = 1.0 - sums
    deficiency[np.abs(deficiency) <= tol.stochastic_tol] = 0.0
    deficiency = np.maximum(deficiency, 0.0)
    m.setflags(write=False)
    deficiency.setflags(write=False)
    return StochasticMatrix(alphabet, m, deficiency)


def load_matrix(
    source: str | Path, tol: Tolerances = DEFAULT_TOLERANCES
) -> StochasticMatrix:
    """Parse a matrix from CSV text, JSON text, or a file holding either.

    CSV rows are separated by semicolons, columns by commas:
    ``"0.5,0.5;0.5,0.5"``.  JSON uses sparse triplets:
    ``{"n": 2, "labels": [...], "entries": [[i, j, value], ...]}``
    (``labels`` optional).
    """
    text = str(source)
    path = Path(text)
    if ("," not in text and "{" not in text) or path.is_file():
        try:
            text = path.read_text()
        except OSError as exc:
            raise ValidationFailure(f"cannot read matrix source {source!r}: {exc}")
    text = text.strip()
    if text.startswith("{"):
        return _matrix_from_json(text, tol)
    return _matrix_from_csv(text, tol)


def _matrix_from_csv(text: str, tol: Tolerances) -> StochasticMatrix:
    rows = []
    for r, line in enumerate(filter(None, (s.strip() for s in text.split(";")))):
        try:
            rows.append([float(x) for x in line.split(",")])
        except ValueError as exc:
            raise ValidationFailure(f"row {r}: {exc}")
    if not rows:
        raise ValidationFailure("empty matrix source")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValidationFailure("rows have inconsistent lengths")
    return make_stochastic(rows, tol=tol)


def _matrix_from_json(text: str, tol: Tolerances) -> StochasticMatrix:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationFailure(f"bad JSON matrix: {exc}")
    try:
        n = int(doc["n"])
        triplets = doc["entries"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationFailure(f"matrix JSON needs integer 'n' and 'entries': {exc}")
    m = np.zeros((n, n))
    for t in triplets:
        i, j, v = int(t[0]), int(t[1]), float(t[2])
        if not (0 <= i < n and 0 <= j < n):
            raise ValidationFailure(f"triplet index ({i}, {j}) outside a {n}x{n} matrix")
        m[i, j] = v
    labels = doc.get("labels")
    if labels is not None:
        labels = [x if isinstance(x, int) else str(x) for x in labels]
    return make_stochastic(m, labels=labels, tol=tol)


def matrix_to_json(matrix: StochasticMatrix) -> dict:
    """Sparse-triplet JSON document for a stochastic matrix."""
    entries = [
        [int(i), int(j), float(matrix.entries[i, j])]
        for i, j in np.argwhere(matrix.entries != 0.0)
    ]
    return {
        "n": matrix.size,
        "labels": list(matrix.alphabet.labels),
        "entries": entries,
        "row_deficiency": [float(d) for d in matrix.row_deficiency],
    }


# ---------------------------------------------------------------------------
# class structure


def communication_classes(
    matrix: StochasticMatrix, tol: Tolerances = DEFAULT_TOLERANCES
) -> list[list[int]]:
    """Strongly connected components of the support graph.

    An edge i -> j exists when ``entries[i, j] > support_tol``.  Components
    are returned sorted by minimal contained index, indices sorted inside.
    Iterative Tarjan, so deep chains cannot hit the recursion limit.
    """
    n = matrix.size
    adj = [
        np.flatnonzero(matrix.entries[i] > tol.support_tol).tolist() for i in range(n)
    ]
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    components: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            v, ptr = work[-1]
            if ptr == 0:
                index[v] = low[v] = counter
                counter += 1
                stack.append(v)
                on_stack[v] = True
            advanced = False
            while ptr < len(adj[v]):
                w = adj[v][ptr]
                ptr += 1
                if index[w] == -1:
                    work[-1] = (v, ptr)
                    work.append((w, 0))
                    advanced = True
                    break
                if on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                components.append(sorted(comp))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
    components.sort(key=min)
    return components


@dataclass(frozen=True)
class ChainDecomposition:
    """Transient states plus recurrent classes with their cycle structure.

    ``periods``, ``cyclic_subclasses`` and ``stationary_vectors`` are filled
    per recurrent class by :func:`decompose`; :func:`classify_states` leaves
    them ``None``.  Stationary vectors are full-length, supported on their
    class.
    """

    alphabet: Alphabet
    transient: tuple[int, ...]
    recurrent_classes: tuple[tuple[int, ...], ...]
    periods: tuple[int, ...] | None = None
    cyclic_subclasses: tuple[tuple[tuple[int, ...], ...], ...] | None = None
    stationary_vectors: tuple[np.ndarray, ...] | None = None

    @property
    def n_classes(self) -> int:
        return len(self.recurrent_classes)


def classify_states(
    matrix: StochasticMatrix, tol: Tolerances = DEFAULT_TOLERANCES
) -> ChainDecomposition:
    """Split the alphabet into transient states and recurrent classes.

    A communication class is recurrent iff its total outgoing mass is at most
    ``closure_tol`` and none of its rows is deficient; anything else leaks and
    is transient.
    """
    classes = communication_classes(matrix, tol)
    transient: list[int] = []
    recurrent: list[tuple[int, ...]] = []
    for comp in classes:
        inside = np.zeros(matrix.size, dtype=bool)
        inside[comp] = True
        outgoing = float(matrix.entries[np.ix_(comp, ~inside)].sum())
        deficient = float(matrix.row_deficiency[comp].max())
        if outgoing <= tol.closure_tol and deficient <= tol.closure_tol:
            recurrent.append(tuple(comp))
        else:
            transient.extend(comp)
    return ChainDecomposition(
        alphabet=matrix.alphabet,
        transient=tuple(sorted(transient)),
        recurrent_classes=tuple(recurrent),
    )


def _bfs_levels(matrix: StochasticMatrix, cls: Sequence[int], tol: Tolerances):
    """BFS levels from the minimal index, restricted to the class.

    Rejects index sets that are not strongly connected inside the support
    graph (forward and backward reachability from the root must both cover
    the whole set).
    """
    members = sorted(cls)
    inside = set(members)
    support = matrix.entries > tol.support_tol
    level = {members[0]: 0}
    frontier = [members[0]]
    while frontier:
        nxt = []
        for v in frontier:
            for w in np.flatnonzero(support[v]):
                w = int(w)
                if w in inside and w not in level:
                    level[w] = level[v] + 1
                    nxt.append(w)
        frontier = nxt
    backward = {members[0]}
    frontier = [members[0]]
    while frontier:
        nxt = []
        for v in frontier:
            for w in np.flatnonzero(support[:, v]):
                w = int(w)
                if w in inside and w not in backward:
                    backward.add(w)
                    nxt.append(w)
        frontier = nxt
    if len(level) != len(members) or len(backward) != len(members):
        raise ValidationFailure(
            f"index set {tuple(members)} is not a communication class"
        )
    return members, level


def period_of_class(
    matrix: StochasticMatrix,
    cls: Sequence[int],
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> int:
    """gcd of return-cycle lengths, via BFS level differences.

    Every edge u -> v inside a strongly connected class satisfies
    level(v) == level(u) + 1 modulo the period; the period is the gcd of
    ``level(u) + 1 - level(v)`` over all internal edges.
    """
    members, level = _bfs_levels(matrix, cls, tol)
    inside = set(members)
    g = 0
    for u in members:
        for v in np.flatnonzero(matrix.entries[u] > tol.support_tol):
            v = int(v)
            if v in inside:
                g = math.gcd(g, level[u] + 1 - level[v])
    return g if g > 0 else 1


def cyclic_subclasses(
    matrix: StochasticMatrix,
    cls: Sequence[int],
    period: int | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> tuple[tuple[int, ...], ...]:
    """Partition a class into its cycle of subclasses.

    Subclass j holds the states at BFS distance j (mod period) from the
    class's minimal index, so subclass 0 contains that index and the chain
    maps subclass j into subclass j+1 (mod period).
    """
    if period is None:
        period = period_of_class(matrix, cls, tol)
    members, level = _bfs_levels(matrix, cls, tol)
    inside = set(members)
    subclasses = [[] for _ in range(period)]
    for v in members:
        subclasses[level[v] % period].append(v)
    for u in members:
        for v in np.flatnonzero(matrix.entries[u] > tol.support_tol):
            v = int(v)
            if v in inside and (level[v] - level[u] - 1) % period != 0:
                raise ValidationFailure(
                    f"edge {u}->{v} is inconsistent with period {period}"
                )
    return tuple(tuple(sorted(s)) for s in subclasses)


# ---------------------------------------------------------------------------
# stationary distributions


def _gth_solve(p: np.ndarray) -> np.ndarray:
    """Stationary vector of an irreducible stochastic matrix (GTH elimination).

    State-reduction form of Gaussian elimination: no subtractions, so it is
    stable even for stiff chains and exact-zero entries.
    """
    p = np.array(p, dtype=float)
    n = p.shape[0]
    for k in range(n - 1, 0, -1):
        s = p[k, :k].sum()
        if s <= 0.0:
            raise ValidationFailure("GTH elimination hit a non-irreducible block")
        p[:k, :k] += np.outer(p[:k, k], p[k, :k]) / s
    x = np.zeros(n)
    x[0] = 1.0
    for k in range(1, n):
        x[k] = (x[:k] @ p[:k, k]) / p[k, :k].sum()
    return x / x.sum()


def _power_solve(
    p: np.ndarray, period: int, tol: Tolerances
) -> np.ndarray:
    """Power iteration on the ``period``-step chain, phase-averaged.

    The period-step chain is aperiodic on each cyclic subclass, so plain
    power iteration converges geometrically; averaging the result over one
    full cycle of phases restores the stationary vector of the original
    chain.
    """
    n = p.shape[0]
    u = np.full(n, 1.0 / n)
    inner_tol = 0.1 * tol.solver_tol
    for _ in range(tol.max_iters):
        v = u
        for _ in range(period):
            v = v @ p
        if np.abs(v - u).sum() <= inner_tol:
            u = v
            break
        u = v
    else:
        raise ConvergenceFailure(float(np.abs(v - u).sum()), tol.max_iters)
    x = np.zeros(n)
    w = u
    for _ in range(period):
        x += w
        w = w @ p
    x /= x.sum()
    residual = float(np.abs(x @ p - x).sum())
    if residual > tol.solver_tol:
        raise ConvergenceFailure(residual, tol.max_iters)
    return x


def stationary_distribution(
    matrix: StochasticMatrix,
    cls: Sequence[int],
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> np.ndarray:
    """Unique left fixed vector of the chain restricted to a recurrent class.

    Returns a full-length probability vector supported on the class with
    ``|x P - x|_1 <= solver_tol``.  Direct GTH solve up to ``dense_cutoff``
    states, phase-averaged power iteration beyond.
    """
    members = sorted(cls)
    sub = matrix.entries[np.ix_(members, members)]
    row_gap = np.abs(sub.sum(axis=1) - 1.0).max()
    if row_gap > tol.stochastic_tol + tol.closure_tol:
        raise ValidationFailure(
            f"class {tuple(members)} is not closed/exact (row gap {row_gap:.3e}); "
            "stationary distributions exist only on recurrent classes"
        )
    if len(members) <= tol.dense_cutoff:
        x_local = _gth_solve(sub)
    else:
        period = period_of_class(matrix, members, tol)
        x_local = _power_solve(sub, period, tol)
    residual = float(np.abs(x_local @ sub - x_local).sum())
    if residual > tol.solver_tol:
        raise ConvergenceFailure(residual, tol.max_iters)
    x = np.zeros(matrix.size)
    x[members] = x_local
    return x


def decompose(
    matrix: StochasticMatrix, tol: Tolerances = DEFAULT_TOLERANCES
) -> ChainDecomposition:
    """Full classification: classes, periods, subclass cycles, stationaries."""
    base = classify_states(matrix, tol)
    periods = []
    subclasses = []
    vectors = []
    for cls in base.recurrent_classes:
        m = period_of_class(matrix, cls, tol)
        periods.append(m)
        subclasses.append(cyclic_subclasses(matrix, cls, m, tol))
        vectors.append(stationary_distribution(matrix, cls, tol))
    return ChainDecomposition(
        alphabet=base.alphabet,
        transient=base.transient,
        recurrent_classes=base.recurrent_classes,
        periods=tuple(periods),
        cyclic_subclasses=tuple(subclasses),
        stationary_vectors=tuple(vectors),
    )


@dataclass(frozen=True)
class StationaryDistribution:
    """A convex mixture of per-class stationary vectors."""

    alphabet: Alphabet
    weights: np.ndarray
    mixture_coefficients: tuple[float, ...] = field(default_factory=tuple)


def mix_stationary(
    decomposition: ChainDecomposition,
    coefficients: Sequence[float],
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> StationaryDistribution:
    """Combine per-class stationary vectors with weights ``alpha``.

    ``coefficients`` aligns with ``recurrent_classes``; they must be
    nonnegative and sum to 1.  The result is supported on the union of the
    classes that received positive weight.
    """
    if decomposition.stationary_vectors is None:
        raise ValidationFailure("decomposition has no stationary vectors; run decompose()")
    alpha = np.asarray(coefficients, dtype=float)
    if alpha.shape != (decomposition.n_classes,):
        raise ValidationFailure(
            f"{alpha.size} mixture coefficients for {decomposition.n_classes} "
            "recurrent classes"
        )
    if np.any(alpha < 0.0):
        raise ValidationFailure("mixture coefficients must be nonnegative")
    if abs(alpha.sum() - 1.0) > tol.solver_tol:
        raise ValidationFailure(f"mixture coefficients sum to {alpha.sum():.12g}, not 1")
    weights = np.zeros(decomposition.alphabet.size)
    for a, x in zip(alpha, decomposition.stationary_vectors):
        weights += a * x
    weights.setflags(write=False)
    return StationaryDistribution(
        alphabet=decomposition.alphabet,
        weights=weights,
        mixture_coefficients=tuple(float(a) for a in alpha),
    )


def evolve(matrix: StochasticMatrix, dist: np.ndarray, steps: int) -> np.ndarray:
    """``dist @ P**steps``; total mass shrinks by whatever leaks out."""
    v = np.asarray(dist, dtype=float)
    if v.shape != (matrix.size,):
        raise ValidationFailure(
            f"distribution of length {v.size} on an alphabet of size {matrix.size}"
        )
    for _ in range(steps):
        v = v @ matrix.entries
    return v


def decomposition_to_json(decomposition: ChainDecomposition) -> dict:
    """Deterministic JSON document for a full decomposition."""
    classes = []
    for idx, cls in enumerate(decomposition.recurrent_classes):
        entry: dict = {"indices": list(cls)}
        if decomposition.periods is not None:
            entry["period"] = decomposition.periods[idx]
        if decomposition.cyclic_subclasses is not None:
            entry["subclasses"] = [list(s) for s in decomposition.cyclic_subclasses[idx]]
        if decomposition.stationary_vectors is not None:
            entry["stationary"] = [
                float(x) for x in decomposition.stationary_vectors[idx]
            ]
        classes.append(entry)
    return {"transient": list(decomposition.transient), "classes": classes}
