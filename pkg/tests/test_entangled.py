"""The lift, its isometry, the transition expectation, the quantum measure."""

import numpy as np
import pytest

from conftest import random_complex, random_dense_chain, unique_stationary
from emc.classical import decompose, load_matrix, make_stochastic, mix_stationary
from emc.config import ValidationFailure
from emc.entangled import (
    build_isometry,
    entangled_apply,
    entangled_apply_reference,
    expectation_on_pair,
    identity_image,
    lift,
    markov_operator,
    ones_phases,
    quantum_measure,
    random_phases,
    schur_identity_report,
    transition_expectation,
    validate_phases,
)


class TestPhases:
    def test_default_is_all_ones(self):
        op = lift(load_matrix("0.5,0.5;0.5,0.5"))
        np.testing.assert_array_equal(op.phases, np.ones((2, 2)))

    def test_random_phases_unit_modulus_and_seeded(self):
        chi = random_phases(4, 7)
        np.testing.assert_allclose(np.abs(chi), 1.0, atol=1e-14)
        np.testing.assert_array_equal(chi, random_phases(4, 7))
        assert not np.array_equal(chi, random_phases(4, 8))

    def test_non_unit_modulus_rejected(self):
        chi = ones_phases(3)
        chi[1, 2] = 1.5
        with pytest.raises(ValidationFailure, match=r"\(1, 2\)"):
            validate_phases(chi, 3)


class TestLiftAction:
    def test_identity_chain_acts_trivially(self, rng):
        op = lift(load_matrix("1,0;0,1"))
        a = random_complex(rng, (2, 2))
        np.testing.assert_allclose(entangled_apply(op, a), a, atol=1e-15)

    def test_identity_image_of_symmetric_chain_is_all_ones(self):
        # image[i,j] = sum_k sqrt(P[i,k] P[j,k]) = 1 for P = [[.5,.5],[.5,.5]]
        op = lift(load_matrix("0.5,0.5;0.5,0.5"))
        np.testing.assert_allclose(identity_image(op), np.ones((2, 2)), atol=1e-15)

    def test_entrywise_bound(self, rng):
        m = random_dense_chain(5, rng)
        op = lift(m, random_phases(5, 3))
        for _ in range(10):
            a = random_complex(rng, (5, 5))
            norm = np.linalg.norm(a, 2)
            assert np.abs(entangled_apply(op, a)).max() <= norm + 1e-12

    def test_factorized_matches_defining_sum(self, rng):
        m = random_dense_chain(4, rng)
        op = lift(m, random_phases(4, 11))
        for _ in range(5):
            a = random_complex(rng, (4, 4))
            fast = entangled_apply(op, a)
            slow = entangled_apply_reference(op, a)
            assert np.abs(fast - slow).max() <= 1e-12


class TestIdentityReport:
    def test_identity_chain_not_entangled(self):
        rep = schur_identity_report(lift(load_matrix("1,0;0,1")))
        assert rep == {"identity_preserving": True, "entangled": False}

    def test_symmetric_chain_entangled(self):
        # off-diagonal of the identity image is 2 sqrt(0.25) = 1
        rep = schur_identity_report(lift(load_matrix("0.5,0.5;0.5,0.5")))
        assert rep == {"identity_preserving": True, "entangled": True}

    def test_swap_chain_not_entangled(self):
        # disjoint row supports kill every off-diagonal
        rep = schur_identity_report(lift(load_matrix("0,1;1,0")))
        assert rep == {"identity_preserving": True, "entangled": False}

    def test_deficient_rows_break_identity_preservation(self):
        rep = schur_identity_report(lift(load_matrix("0.3,0.3;0.2,0.2")))
        assert rep["identity_preserving"] is False


class TestIsometry:
    def test_identity_chain_columns(self):
        v = build_isometry(lift(load_matrix("1,0;0,1"))).as_dense()
        # column i is e_i (x) e_i
        np.testing.assert_array_equal(v[:, 0], [1, 0, 0, 0])
        np.testing.assert_array_equal(v[:, 1], [0, 0, 0, 1])

    def test_symmetric_chain_column(self):
        v = build_isometry(lift(load_matrix("0.5,0.5;0.5,0.5"))).as_dense()
        np.testing.assert_allclose(v[:, 0], [2**-0.5, 2**-0.5, 0, 0], atol=1e-15)

    def test_isometry_property_random_chain(self, rng):
        m = random_dense_chain(6, rng)
        v = build_isometry(lift(m, random_phases(6, 2))).as_dense()
        np.testing.assert_allclose(v.conj().T @ v, np.eye(6), atol=1e-10)

    def test_deficient_rows_subisometric(self):
        m = load_matrix("0.3,0.3;0.2,0.2")
        iso = build_isometry(lift(m))
        np.testing.assert_allclose(iso.column_norms_sq(), [0.6, 0.4], atol=1e-12)
        gram = iso.as_dense().conj().T @ iso.as_dense()
        np.testing.assert_allclose(np.diag(gram), 1.0 - m.row_deficiency, atol=1e-12)


class TestTransitionExpectation:
    def test_identity_preserving(self, rng):
        m = random_dense_chain(4, rng)
        op = lift(m, random_phases(4, 9))
        image = transition_expectation(op, np.eye(4), np.eye(4))
        np.testing.assert_allclose(image, np.eye(4), atol=1e-12)

    def test_identity_chain_reduces_to_schur_product(self, rng):
        op = lift(load_matrix("1,0;0,1"))
        a, b = random_complex(rng, (2, 2)), random_complex(rng, (2, 2))
        np.testing.assert_allclose(
            transition_expectation(op, a, b), a * b, atol=1e-14
        )

    def test_matrix_unit_against_identity_image(self, rng):
        m = random_dense_chain(3, rng)
        op = lift(m)
        img = identity_image(op)
        for i in range(3):
            for j in range(3):
                unit = np.zeros((3, 3), complex)
                unit[i, j] = 1.0
                out = transition_expectation(op, unit, np.eye(3))
                expected = img[i, j] * unit
                assert np.abs(out - expected).max() <= 1e-13

    def test_agrees_with_isometry_compression(self, rng):
        for seed in range(5):
            n = 2 + seed
            m = random_dense_chain(n, rng)
            chi = random_phases(n, seed) if seed % 2 else None
            op = lift(m, chi)
            a, b = random_complex(rng, (n, n)), random_complex(rng, (n, n))
            direct = transition_expectation(op, a, b)
            compressed = expectation_on_pair(op, np.kron(a, b))
            assert np.abs(direct - compressed).max() <= 1e-10

    def test_psd_to_psd(self, rng):
        # complete-positivity shadow: compression by an isometry
        m = random_dense_chain(3, rng)
        op = lift(m, random_phases(3, 21))
        for _ in range(10):
            x = random_complex(rng, (9, 9))
            psd = x @ x.conj().T
            image = expectation_on_pair(op, psd)
            assert np.linalg.eigvalsh((image + image.conj().T) / 2).min() >= -1e-10


class TestMarkovOperator:
    def test_diagonal_covariance_any_phases(self, rng):
        m = random_dense_chain(4, rng)
        for chi_seed in (None, 1, 2, 3):
            chi = None if chi_seed is None else random_phases(4, chi_seed)
            op = lift(m, chi)
            d = rng.random(4)
            image = markov_operator(op, np.diag(d).astype(complex))
            np.testing.assert_allclose(np.diag(image), m.entries @ d, atol=1e-12)
            assert np.abs(image - np.diag(np.diag(image))).max() == 0.0

    def test_identity_fixed(self, rng):
        m = random_dense_chain(3, rng)
        op = lift(m)
        np.testing.assert_allclose(
            markov_operator(op, np.eye(3, dtype=complex)), np.eye(3), atol=1e-12
        )

    def test_composition_is_matrix_power(self, rng):
        m = random_dense_chain(3, rng)
        op = lift(m, random_phases(3, 5))
        d = rng.random(3)
        once = markov_operator(op, np.diag(d).astype(complex))
        twice = markov_operator(op, once)
        np.testing.assert_allclose(
            np.diag(twice), m.entries @ (m.entries @ d), atol=1e-12
        )


class TestQuantumMeasure:
    def test_projection_chain_rank_one(self):
        # rows all equal to pi: Q[i,j] = sqrt(pi_i pi_j)
        pi_vec = np.array([0.5, 0.3, 0.2])
        m = make_stochastic(np.tile(pi_vec, (3, 1)))
        stationary = unique_stationary(m)
        q = quantum_measure(lift(m), stationary)
        np.testing.assert_allclose(
            q.matrix, np.sqrt(np.outer(pi_vec, pi_vec)), atol=1e-14
        )

    def test_swap_chain_diagonal(self):
        m = load_matrix("0,1;1,0")
        q = quantum_measure(lift(m), unique_stationary(m))
        np.testing.assert_allclose(q.matrix, np.diag([0.5, 0.5]), atol=1e-14)

    def test_invariance_certificates(self, rng):
        m = random_dense_chain(5, rng)
        stationary = unique_stationary(m)
        op = lift(m, random_phases(5, 31))
        q = quantum_measure(op, stationary)
        np.testing.assert_allclose(np.diag(q.matrix), stationary.weights, atol=1e-12)
        assert np.abs(stationary.weights @ m.entries - stationary.weights).sum() <= 1e-10

    def test_full_invariance_under_one_site_map(self, rng):
        # Tr(Q E_1(X)) == Tr(Q X) for invariant pi, any X, any phases
        m = random_dense_chain(4, rng)
        stationary = unique_stationary(m)
        op = lift(m, random_phases(4, 17))
        q = quantum_measure(op, stationary)
        for _ in range(5):
            x = random_complex(rng, (4, 4))
            lhs = np.trace(q.matrix @ markov_operator(op, x))
            rhs = np.trace(q.matrix @ x)
            assert abs(lhs - rhs) <= 1e-12

    def test_bounds_and_gauge(self, rng):
        m = random_dense_chain(5, rng)
        stationary = unique_stationary(m)
        bound = np.sqrt(np.outer(stationary.weights, stationary.weights))
        diag_ref = None
        for chi_seed in (None, 41, 42):
            chi = None if chi_seed is None else random_phases(5, chi_seed)
            q = quantum_measure(lift(m, chi), stationary)
            assert np.all(np.abs(q.matrix) <= bound + 1e-12)
            assert abs(q.trace - 1.0) <= 1e-12
            assert np.linalg.eigvalsh(q.matrix).min() >= -1e-12
            if diag_ref is None:
                diag_ref = np.diag(q.matrix)
            else:
                np.testing.assert_allclose(np.diag(q.matrix), diag_ref, atol=1e-13)

    def test_unnormalized_vector_flagged(self, rng):
        m = random_dense_chain(3, rng)
        q = quantum_measure(lift(m), np.array([1.0, 1.0, 1.0]))
        assert q.normalized is False
        assert q.trace == pytest.approx(3.0, abs=1e-12)

    def test_negative_vector_rejected(self, rng):
        m = random_dense_chain(3, rng)
        with pytest.raises(ValidationFailure):
            quantum_measure(lift(m), np.array([0.5, -0.1, 0.6]))


class TestMixedChainMeasure:
    def test_two_absorbing_states(self):
        m = load_matrix("1,0;0,1")
        d = decompose(m)
        pi = mix_stationary(d, [0.5, 0.5])
        q = quantum_measure(lift(m), pi)
        np.testing.assert_allclose(q.matrix, np.diag([0.5, 0.5]), atol=1e-14)
