"""Random walks on discrete groups and their translation equivariance.

Finite groups (cyclic, dihedral, arbitrary multiplication tables) are
represented exactly; finitely generated infinite groups (free groups,
integer lattices) are truncated to balls/windows, with products that leave
the window routed to the row deficiency of the walk matrix rather than
renormalized.

A probability measure mu on the elements induces the right and left walks

    right:  P[g, h] = mu(g^-1 h)      (step g -> g s with probability mu(s))
    left:   P[g, h] = mu(g h^-1)      (step g -> t^-1 g with probability mu(t))

which are doubly stochastic on exact finite groups.  The left/right
translation permutation matrices

    rho(g)[x, y] = 1 iff x = y g^-1,      lambda(g)[x, y] = 1 iff x = g y

commute with the entangled lift of the right/left walk respectively
(``lambda`` with the right walk, ``rho`` with the left walk); the mismatched
pairing fails on nonabelian groups, which the tests use as a negative
control.  Translations are only defined on exact groups -- they do not
preserve truncation windows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Hashable, Sequence

import numpy as np

from .classical import StochasticMatrix, make_stochastic
from .config import DEFAULT_TOLERANCES, Tolerances, ValidationFailure
from .entangled import entangled_apply, lift


@dataclass(frozen=True)
class GroupSpec:
    """Enumerated (possibly truncated) group with dense multiplication table.

    ``mult[i, j]`` is the element index of ``labels[i] * labels[j]``, or -1
    when the product falls outside the truncation window.  ``exact`` is True
    when the element set is closed under multiplication, i.e. the spec is a
    genuine finite group.
    """

    kind: str
    params: dict
    labels: tuple[str, ...]
    mult: np.ndarray
    inverse: np.ndarray

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def exact(self) -> bool:
        return bool(np.all(self.mult >= 0))

    @property
    def identity_index(self) -> int:
        return 0

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise ValidationFailure(f"element {label!r} is not enumerated")


def _enumerate_bfs(
    identity: Hashable,
    generators: Sequence[Hashable],
    multiply: Callable,
    keep: Callable[[Hashable], bool],
    max_depth: int | None = None,
):
    """Breadth-first element enumeration: identity first, then by word
    length, generator order breaking ties inside each length."""
    order = [identity]
    seen = {identity}
    frontier = [identity]
    depth = 0
    while frontier and (max_depth is None or depth < max_depth):
        nxt = []
        for g in frontier:
            for s in generators:
                h = multiply(g, s)
                if h is not None and keep(h) and h not in seen:
                    seen.add(h)
                    order.append(h)
                    nxt.append(h)
        frontier = nxt
        depth += 1
    return order


def _finish(kind, params, elements, multiply, invert, label_of) -> GroupSpec:
    index = {g: i for i, g in enumerate(elements)}
    n = len(elements)
    mult = np.full((n, n), -1, dtype=np.int64)
    inv = np.empty(n, dtype=np.int64)
    for i, g in enumerate(elements):
        gi = invert(g)
        if gi not in index:
            raise ValidationFailure(f"inverse of {label_of(g)!r} left the element set")
        inv[i] = index[gi]
        for j, h in enumerate(elements):
            prod = multiply(g, h)
            if prod is not None and prod in index:
                mult[i, j] = index[prod]
    mult.setflags(write=False)
    inv.setflags(write=False)
    return GroupSpec(
        kind=kind,
        params=dict(params),
        labels=tuple(label_of(g) for g in elements),
        mult=mult,
        inverse=inv,
    )


def cyclic_group(n: int) -> GroupSpec:
    """Integers mod n, generated by +1 and -1."""
    if n < 1:
        raise ValidationFailure("cyclic group order must be >= 1")
    gens = [1 % n, (-1) % n]
    elements = _enumerate_bfs(0, gens, lambda g, s: (g + s) % n, lambda h: True)
    return _finish(
        "cyclic",
        {"n": n},
        elements,
        lambda g, h: (g + h) % n,
        lambda g: (-g) % n,
        lambda g: "e" if g == 0 else f"g{g}",
    )


def dihedral_group(n: int) -> GroupSpec:
    """Symmetries of the n-gon: 2n elements s^b r^a with s r s = r^-1."""
    if n < 1:
        raise ValidationFailure("dihedral parameter must be >= 1")

    def multiply(x, y):
        b1, a1 = x
        b2, a2 = y
        sign = -1 if b2 else 1
        return ((b1 + b2) % 2, (sign * a1 + a2) % n)

    def invert(x):
        b, a = x
        return (b, (-a if b == 0 else a) % n)

    def label_of(x):
        b, a = x
        if b == 0:
            return "e" if a == 0 else f"r{a}"
        return "s" if a == 0 else f"sr{a}"

    gens = [(0, 1 % n), (0, (-1) % n), (1, 0)]
    elements = _enumerate_bfs((0, 0), gens, multiply, lambda h: True)
    return _finish("dihedral", {"n": n}, elements, multiply, invert, label_of)


def _reduce_free(word: str) -> str:
    out: list[str] = []
    for ch in word:
        if out and out[-1] == ch.swapcase() and out[-1] != ch:
            out.pop()
        else:
            out.append(ch)
    return "".join(out)


def free_group_ball(rank: int, radius: int) -> GroupSpec:
    """Ball of reduced words of length <= radius in the free group.

    Generators are letters a, b, ...; capitals are their inverses.  Products
    whose reduced form leaves the ball map to -1 in the table.
    """
    if not 1 <= rank <= 26:
        raise ValidationFailure("free-group rank must be between 1 and 26")
    if radius < 0:
        raise ValidationFailure("ball radius must be >= 0")
    letters = [chr(ord("a") + i) for i in range(rank)]
    gens: list[str] = []
    for ch in letters:
        gens.extend([ch, ch.upper()])

    def multiply(g, h):
        prod = _reduce_free(g + h)
        return prod if len(prod) <= radius else None

    elements = _enumerate_bfs("", gens, multiply, lambda h: True, max_depth=radius)
    return _finish(
        "free",
        {"rank": rank, "radius": radius},
        elements,
        multiply,
        lambda g: g[::-1].swapcase(),
        lambda g: g if g else "e",
    )


def lattice_window(dim: int, window: int) -> GroupSpec:
    """Integer lattice Z^dim truncated to the box |x_i| <= window."""
    if dim < 1:
        raise ValidationFailure("lattice dimension must be >= 1")
    if window < 0:
        raise ValidationFailure("window must be >= 0")
    gens = []
    for axis in range(dim):
        for step in (1, -1):
            v = [0] * dim
            v[axis] = step
            gens.append(tuple(v))

    def multiply(g, h):
        prod = tuple(a + b for a, b in zip(g, h))
        return prod if all(abs(c) <= window for c in prod) else None

    elements = _enumerate_bfs(tuple([0] * dim), gens, multiply, lambda h: True)
    return _finish(
        "lattice",
        {"dim": dim, "window": window},
        elements,
        multiply,
        lambda g: tuple(-c for c in g),
        lambda g: ",".join(str(c) for c in g),
    )


def group_from_table(labels: Sequence[str], table: Sequence[Sequence[int]]) -> GroupSpec:
    """Finite group given by an explicit multiplication table.

    ``table[i][j]`` is the index of ``labels[i] * labels[j]``; ``labels[0]``
    must be the identity.  Associativity is the caller's responsibility
    (spot-checked by the test suite on the built-in families).
    """
    labels = tuple(str(x) for x in labels)
    n = len(labels)
    mult = np.asarray(table, dtype=np.int64)
    if mult.shape != (n, n) or mult.min() < 0 or mult.max() >= n:
        raise ValidationFailure("multiplication table must be n x n over element indices")
    if not (np.array_equal(mult[0], np.arange(n)) and np.array_equal(mult[:, 0], np.arange(n))):
        raise ValidationFailure("labels[0] must act as the identity")
    inv = np.full(n, -1, dtype=np.int64)
    for i in range(n):
        hits = np.flatnonzero(mult[i] == 0)
        if hits.size != 1:
            raise ValidationFailure(f"element {labels[i]!r} lacks a unique inverse")
        inv[i] = hits[0]
    return GroupSpec(
        kind="table", params={}, labels=labels, mult=mult, inverse=inv
    )


@dataclass(frozen=True)
class GroupMeasure:
    """Probability weights aligned with a group's element enumeration."""

    weights: np.ndarray

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.weights > 0.0)


def group_measure(
    group: GroupSpec,
    pairs: Sequence[tuple[str, float]],
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> GroupMeasure:
    """Measure from (element label, weight) pairs; must sum to 1."""
    weights = np.zeros(group.size)
    for label, value in pairs:
        value = float(value)
        if value < 0.0:
            raise ValidationFailure(f"negative weight {value:g} for element {label!r}")
        weights[group.index(str(label))] += value
    if abs(weights.sum() - 1.0) > tol.phase_tol:
        raise ValidationFailure(f"measure weights sum to {weights.sum():.12g}, not 1")
    weights.setflags(write=False)
    return GroupMeasure(weights=weights)


def uniform_measure(group: GroupSpec, labels: Sequence[str]) -> GroupMeasure:
    share = 1.0 / len(labels)
    return group_measure(group, [(label, share) for label in labels])


def walk_matrix(
    group: GroupSpec,
    measure: GroupMeasure,
    side: str,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> StochasticMatrix:
    """Transition matrix of the right or left walk driven by ``measure``.

    On truncations, steps leaving the window contribute to row deficiency.
    """
    if side not in ("right", "left"):
        raise ValidationFailure(f"side must be 'right' or 'left', got {side!r}")
    if measure.weights.shape != (group.size,):
        raise ValidationFailure("measure does not match the group enumeration")
    n = group.size
    entries = np.zeros((n, n))
    for s in measure.support:
        weight = measure.weights[s]
        if side == "right":
            targets = group.mult[:, s]
        else:
            targets = group.mult[group.inverse[s], :]
        for g in range(n):
            h = targets[g]
            if h >= 0:
                entries[g, h] += weight
    return make_stochastic(entries, labels=group.labels, tol=tol)


def double_stochastic_check(
    matrix: StochasticMatrix, tol: Tolerances = DEFAULT_TOLERANCES
) -> bool:
    """Row and column sums both within 1e-10 of 1 (exact matrices only)."""
    if not matrix.is_exact:
        raise ValidationFailure("double-stochasticity is only defined for exact matrices")
    rows = np.abs(matrix.entries.sum(axis=1) - 1.0).max()
    cols = np.abs(matrix.entries.sum(axis=0) - 1.0).max()
    return bool(max(rows, cols) <= tol.entangle_tol)


def translation_operator(group: GroupSpec, element: str | int, side: str) -> np.ndarray:
    """Permutation matrix of left or right translation by a group element.

    left:  row x has its 1 at column g^-1 x;  right: at column x g.
    Only exact finite groups qualify; translations do not preserve balls.
    """
    if not group.exact:
        raise ValidationFailure(
            "translations are not defined on truncated groups"
        )
    if side not in ("right", "left"):
        raise ValidationFailure(f"side must be 'right' or 'left', got {side!r}")
    g = group.index(element) if isinstance(element, str) else int(element)
    n = group.size
    t = np.zeros((n, n))
    for x in range(n):
        if side == "left":
            y = group.mult[group.inverse[g], x]
        else:
            y = group.mult[x, g]
        t[x, y] = 1.0
    return t


def equivariance_residual(
    group: GroupSpec,
    measure: GroupMeasure,
    walk_side: str,
    element: str | int,
    n_samples: int = 20,
    seed: int = 0,
    translation_side: str | None = None,
    tol: Tolerances = DEFAULT_TOLERANCES,
) -> float:
    """Max residual of translation covariance of the lifted walk.

    For the matched pairing (left translations with the right walk, right
    translations with the left walk) the residual is at numerical zero; the
    mismatched pairing on a nonabelian group is the negative control.
    """
    if translation_side is None:
        translation_side = "left" if walk_side == "right" else "right"
    matrix = walk_matrix(group, measure, walk_side, tol)
    op = lift(matrix)
    t = translation_operator(group, element, translation_side)
    rng = np.random.default_rng(seed)
    n = group.size
    worst = 0.0
    for _ in range(n_samples):
        a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        lhs = t @ entangled_apply(op, a) @ t.T
        rhs = entangled_apply(op, t @ a @ t.T)
        worst = max(worst, float(np.abs(lhs - rhs).max()))
    return worst


def group_from_json(doc: dict) -> tuple[GroupSpec, GroupMeasure | None]:
    """Build a group (and optional measure) from its JSON description.

    ``{"kind": ..., "params": {...}, "measure": [[label, weight], ...]}``
    with kinds cyclic / dihedral / free / lattice / table.
    """
    try:
        kind = doc["kind"]
        params = doc.get("params", {})
    except (TypeError, KeyError) as exc:
        raise ValidationFailure(f"group JSON needs a 'kind': {exc}")
    if kind == "cyclic":
        group = cyclic_group(int(params["n"]))
    elif kind == "dihedral":
        group = dihedral_group(int(params["n"]))
    elif kind == "free":
        group = free_group_ball(int(params["rank"]), int(params["radius"]))
    elif kind == "lattice":
        group = lattice_window(int(params["dim"]), int(params["window"]))
    elif kind == "table":
        group = group_from_table(doc["labels"], doc["table"])
    else:
        raise ValidationFailure(f"unknown group kind {kind!r}")
    measure = None
    if "measure" in doc:
        measure = group_measure(group, [(str(l), float(w)) for l, w in doc["measure"]])
    return group, measure
