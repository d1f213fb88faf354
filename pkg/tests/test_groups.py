"""Group walks: construction, double stochasticity, translation equivariance."""

import json

import numpy as np
import pytest

from emc.classical import load_matrix
from emc.config import ValidationFailure
from emc.groups import (
    cyclic_group,
    dihedral_group,
    double_stochastic_check,
    equivariance_residual,
    free_group_ball,
    group_from_json,
    group_from_table,
    group_measure,
    lattice_window,
    translation_operator,
    uniform_measure,
    walk_matrix,
)


def _random_measure(group, seed):
    rng = np.random.default_rng(seed)
    weights = rng.random(group.size)
    weights /= weights.sum()
    return group_measure(group, list(zip(group.labels, weights)))


class TestConstruction:
    def test_cyclic_enumeration_identity_first(self):
        g = cyclic_group(4)
        assert g.labels[0] == "e"
        assert set(g.labels) == {"e", "g1", "g2", "g3"}
        assert g.exact

    def test_dihedral_order(self):
        g = dihedral_group(5)
        assert g.size == 10 and g.exact

    def test_group_axioms_spot_check(self):
        rng = np.random.default_rng(4)
        for g in (cyclic_group(6), dihedral_group(4), lattice_window(2, 1)):
            for _ in range(40):
                a, b, c = rng.integers(0, g.size, 3)
                ab, bc = g.mult[a, b], g.mult[b, c]
                if ab >= 0 and bc >= 0 and g.mult[ab, c] >= 0 and g.mult[a, bc] >= 0:
                    assert g.mult[ab, c] == g.mult[a, bc]
                assert g.mult[a, g.inverse[a]] == g.identity_index
                assert g.mult[g.identity_index, a] == a

    def test_free_ball_enumeration(self):
        g = free_group_ball(2, 2)
        assert g.labels[:5] == ("e", "a", "A", "b", "B")
        # 1 + 4 + 4*3 elements within radius 2
        assert g.size == 17
        assert not g.exact

    def test_free_ball_inverse_closed(self):
        g = free_group_ball(2, 3)
        assert all(g.inverse[i] >= 0 for i in range(g.size))
        assert g.labels[g.inverse[g.index("ab")]] == "BA"

    def test_lattice_window(self):
        g = lattice_window(1, 2)
        assert g.size == 5 and not g.exact
        assert g.labels[0] == "0"

    def test_table_group_validation(self):
        z2 = group_from_table(["e", "x"], [[0, 1], [1, 0]])
        assert z2.exact
        with pytest.raises(ValidationFailure):
            group_from_table(["e", "x"], [[1, 0], [0, 1]])


class TestWalks:
    def test_cyclic3_uniform_generators(self):
        g = cyclic_group(3)
        mu = uniform_measure(g, ["g1", "g2"])
        w = walk_matrix(g, mu, "right")
        np.testing.assert_allclose(
            w.entries, [[0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]], atol=1e-15
        )

    def test_point_mass_at_identity(self):
        for g in (cyclic_group(4), dihedral_group(3)):
            mu = group_measure(g, [("e", 1.0)])
            for side in ("right", "left"):
                w = walk_matrix(g, mu, side)
                np.testing.assert_array_equal(w.entries, np.eye(g.size))

    def test_free_ball_boundary_deficiency(self):
        g = free_group_ball(2, 3)
        mu = uniform_measure(g, ["a", "A", "b", "B"])
        w = walk_matrix(g, mu, "right")
        for i, label in enumerate(g.labels):
            expected = 0.75 if len(label) == 3 and label != "e" else 0.0
            assert w.row_deficiency[i] == expected

    def test_double_stochastic_on_groups(self):
        for g in (cyclic_group(3), cyclic_group(4), dihedral_group(3)):
            mu = _random_measure(g, g.size)
            for side in ("right", "left"):
                assert double_stochastic_check(walk_matrix(g, mu, side))

    def test_double_stochastic_fails_generic_chain(self):
        assert not double_stochastic_check(load_matrix("0.9,0.1;0.4,0.6"))

    def test_double_stochastic_rejects_truncations(self):
        g = free_group_ball(2, 2)
        w = walk_matrix(g, uniform_measure(g, ["a", "A", "b", "B"]), "right")
        with pytest.raises(ValidationFailure):
            double_stochastic_check(w)

    def test_symmetric_measure_symmetric_walk(self):
        g = dihedral_group(4)
        # mu(g) = mu(g^-1) on a symmetric generating set
        mu = uniform_measure(g, ["r1", "r3", "s"])
        for side in ("right", "left"):
            w = walk_matrix(g, mu, side)
            np.testing.assert_allclose(w.entries, w.entries.T, atol=1e-15)


class TestTranslations:
    def test_cyclic_shift(self):
        g = cyclic_group(3)
        lam = translation_operator(g, "g1", "left")
        # lambda(g) e_y = e_{g y}: permutation with exactly one 1 per row/col
        assert lam.sum() == 3
        vec = np.zeros(3)
        vec[g.index("e")] = 1.0
        image = lam @ vec
        assert image[g.index("g1")] == 1.0

    def test_identity_translation(self):
        g = dihedral_group(3)
        for side in ("left", "right"):
            np.testing.assert_array_equal(
                translation_operator(g, "e", side), np.eye(g.size)
            )

    def test_translations_are_morphisms(self):
        # multiplication-table oracle: both families compose covariantly
        # (the inverse inside the right-translation matrix makes it so)
        g = dihedral_group(4)
        rng = np.random.default_rng(9)
        for side in ("left", "right"):
            for _ in range(20):
                a, b = rng.integers(0, g.size, 2)
                t_a = translation_operator(g, int(a), side)
                t_b = translation_operator(g, int(b), side)
                t_ab = translation_operator(g, int(g.mult[a, b]), side)
                np.testing.assert_array_equal(t_a @ t_b, t_ab)

    def test_truncated_group_rejected(self):
        g = free_group_ball(2, 2)
        with pytest.raises(ValidationFailure):
            translation_operator(g, "a", "left")


class TestEquivariance:
    @pytest.mark.parametrize("side", ["right", "left"])
    def test_matched_pairing_cyclic(self, side):
        g = cyclic_group(3)
        mu = _random_measure(g, 21)
        for element in range(g.size):
            assert equivariance_residual(g, mu, side, element, 20, seed=3) <= 1e-10

    def test_identity_element_exact_zero(self):
        g = dihedral_group(3)
        mu = _random_measure(g, 22)
        assert equivariance_residual(g, mu, "right", "e", 5, seed=4) == 0.0

    def test_mismatched_pairing_nonabelian(self):
        g = dihedral_group(3)
        mu = _random_measure(g, 23)
        residuals = [
            equivariance_residual(
                g, mu, "right", element, 20, seed=5, translation_side="right"
            )
            for element in range(g.size)
        ]
        assert max(residuals) > 1e-2

    def test_mismatched_pairing_harmless_on_abelian(self):
        g = cyclic_group(5)
        mu = _random_measure(g, 24)
        residual = equivariance_residual(
            g, mu, "right", "g2", 10, seed=6, translation_side="right"
        )
        assert residual <= 1e-10


class TestJson:
    def test_round_trip_kinds(self):
        docs = [
            {"kind": "cyclic", "params": {"n": 3}},
            {"kind": "dihedral", "params": {"n": 3}},
            {"kind": "free", "params": {"rank": 2, "radius": 2}},
            {"kind": "lattice", "params": {"dim": 1, "window": 2}},
        ]
        for doc in docs:
            group, measure = group_from_json(doc)
            assert group.kind == doc["kind"] and measure is None

    def test_measure_parsing(self):
        doc = {
            "kind": "cyclic",
            "params": {"n": 3},
            "measure": [["g1", 0.5], ["g2", 0.5]],
        }
        group, measure = group_from_json(doc)
        assert measure.weights[group.index("g1")] == 0.5

    def test_bad_kind(self):
        with pytest.raises(ValidationFailure):
            group_from_json({"kind": "sporadic"})

    def test_measure_must_be_probability(self):
        g = cyclic_group(3)
        with pytest.raises(ValidationFailure):
            group_measure(g, [("g1", 0.7), ("g2", 0.7)])
        with pytest.raises(ValidationFailure):
            group_measure(g, [("nope", 1.0)])
