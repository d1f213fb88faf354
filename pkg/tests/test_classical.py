"""Classification pipeline: loading, classes, periods, stationary vectors."""

import json

import numpy as np
import pytest

from conftest import random_dense_chain
from emc.classical import (
    Alphabet,
    classify_states,
    communication_classes,
    cyclic_subclasses,
    decompose,
    decomposition_to_json,
    evolve,
    load_matrix,
    make_stochastic,
    matrix_to_json,
    mix_stationary,
    period_of_class,
    stationary_distribution,
)
from emc.config import DEFAULT_TOLERANCES, ConvergenceFailure, ValidationFailure


class TestLoading:
    def test_csv_exact_rows(self):
        m = load_matrix("0.5,0.5;0.5,0.5")
        assert m.size == 2
        np.testing.assert_array_equal(m.row_deficiency, [0.0, 0.0])

    def test_csv_deficiency(self):
        m = load_matrix("0.3,0.3;0.2,0.2")
        np.testing.assert_allclose(m.row_deficiency, [0.4, 0.6], atol=1e-15)

    def test_negative_entry_names_position(self):
        with pytest.raises(ValidationFailure, match="row 1, column 0"):
            load_matrix("0.5,0.5;-0.1,1.1")

    def test_row_sum_above_one_rejected(self):
        with pytest.raises(ValidationFailure, match="row 0"):
            load_matrix("0.7,0.5;0.5,0.5")

    def test_json_triplets(self):
        doc = {"n": 2, "labels": ["a", "b"], "entries": [[0, 1, 1.0], [1, 0, 1.0]]}
        m = load_matrix(json.dumps(doc))
        assert m.alphabet.labels == ("a", "b")
        np.testing.assert_array_equal(m.entries, [[0, 1], [1, 0]])

    def test_json_roundtrip(self):
        m = load_matrix("0.9,0.1;0.4,0.6")
        again = load_matrix(json.dumps(matrix_to_json(m)))
        np.testing.assert_array_equal(m.entries, again.entries)

    def test_file_source(self, tmp_path):
        path = tmp_path / "m.csv"
        path.write_text("0,1;1,0")
        m = load_matrix(str(path))
        np.testing.assert_array_equal(m.entries, [[0, 1], [1, 0]])

    def test_parse_error(self):
        with pytest.raises(ValidationFailure):
            load_matrix("0.5,oops;0.5,0.5")

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValidationFailure):
            Alphabet(("a", "a"))


class TestCommunicationClasses:
    def test_irreducible(self):
        m = load_matrix("0.5,0.5;0.5,0.5")
        assert communication_classes(m) == [[0, 1]]

    def test_upper_triangular_support(self):
        m = load_matrix("0.5,0.5,0;0,1,0;0,0,1")
        assert communication_classes(m) == [[0], [1], [2]]

    def test_three_cycle(self):
        m = load_matrix("0,1,0;0,0,1;1,0,0")
        assert communication_classes(m) == [[0, 1, 2]]

    def test_order_is_by_minimal_index(self):
        # two closed classes listed in index order regardless of discovery
        m = load_matrix("0,0,1,0;0,1,0,0;1,0,0,0;0,0.5,0,0.5")
        assert communication_classes(m) == [[0, 2], [1], [3]]


class TestClassification:
    def test_absorbing_states(self):
        m = load_matrix("0.5,0.5,0;0,1,0;0,0,1")
        d = classify_states(m)
        assert d.transient == (0,)
        assert d.recurrent_classes == ((1,), (2,))

    def test_irreducible_doubly_stochastic(self):
        d = classify_states(load_matrix("0.5,0.5;0.5,0.5"))
        assert d.transient == ()
        assert d.recurrent_classes == ((0, 1),)

    def test_deficient_class_is_transient(self):
        # birth-death window whose last row leaks: strongly connected but
        # sub-stochastic, so no recurrent class survives
        m = load_matrix("0.5,0.5,0;0.5,0,0.3;0,0.5,0")
        d = classify_states(m)
        assert d.recurrent_classes == ()
        assert d.transient == (0, 1, 2)
        # brute-force oracle: mass starting anywhere dissipates
        mass = evolve(m, np.array([1.0, 0.0, 0.0]), 200).sum()
        assert mass < 1e-2


class TestPeriods:
    def test_two_cycle(self):
        assert period_of_class(load_matrix("0,1;1,0"), [0, 1]) == 2

    def test_self_loop_support(self):
        assert period_of_class(load_matrix("0.5,0.5;0.5,0.5"), [0, 1]) == 1

    def test_three_cycle(self):
        assert period_of_class(load_matrix("0,1,0;0,0,1;1,0,0"), [0, 1, 2]) == 3

    def test_not_a_class_rejected(self):
        with pytest.raises(ValidationFailure):
            period_of_class(load_matrix("0.5,0.5,0;0,1,0;0,0,1"), [0, 1])


class TestCyclicSubclasses:
    def test_two_cycle(self):
        assert cyclic_subclasses(load_matrix("0,1;1,0"), [0, 1]) == ((0,), (1,))

    def test_aperiodic_single_subclass(self):
        m = load_matrix("0.5,0.5;0.5,0.5")
        assert cyclic_subclasses(m, [0, 1]) == ((0, 1),)

    def test_bipartite_four_state(self):
        m = load_matrix("0,0,0.5,0.5;0,0,0.5,0.5;0.5,0.5,0,0;0.5,0.5,0,0")
        subs = cyclic_subclasses(m, [0, 1, 2, 3])
        assert subs == ((0, 1), (2, 3))
        # brute-force reachability-level oracle from state 0
        reach = {0: {0}}
        frontier = {0}
        for level in range(1, 4):
            frontier = {
                j
                for i in frontier
                for j in np.flatnonzero(m.entries[i] > 0)
            }
            reach[level] = set(frontier)
        assert reach[1] == {2, 3} and reach[2] == {0, 1}

    def test_subclass_cycle_moves_forward(self):
        m = load_matrix("0,1,0;0,0,1;1,0,0")
        subs = cyclic_subclasses(m, [0, 1, 2])
        assert subs == ((0,), (1,), (2,))
        for j, sub in enumerate(subs):
            for i in sub:
                targets = np.flatnonzero(m.entries[i] > 0)
                assert all(t in subs[(j + 1) % 3] for t in targets)


class TestStationary:
    def test_symmetric_two_state(self):
        x = stationary_distribution(load_matrix("0.7,0.3;0.3,0.7"), [0, 1])
        np.testing.assert_allclose(x, [0.5, 0.5], atol=1e-12)

    def test_period_two(self):
        x = stationary_distribution(load_matrix("0,1;1,0"), [0, 1])
        np.testing.assert_allclose(x, [0.5, 0.5], atol=1e-12)

    def test_hand_balance_oracle(self):
        # balance: x0 * 0.1 = x1 * 0.4  =>  x = (0.8, 0.2)
        x = stationary_distribution(load_matrix("0.9,0.1;0.4,0.6"), [0, 1])
        np.testing.assert_allclose(x, [0.8, 0.2], atol=1e-12)

    def test_power_iteration_branch_matches_direct(self, rng):
        m = random_dense_chain(5, rng)
        direct = stationary_distribution(m, list(range(5)))
        tiny_cutoff = DEFAULT_TOLERANCES.replace(dense_cutoff=1)
        iterated = stationary_distribution(m, list(range(5)), tiny_cutoff)
        np.testing.assert_allclose(direct, iterated, atol=1e-9)

    def test_power_iteration_periodic_class(self):
        m = load_matrix("0,1;1,0")
        tiny_cutoff = DEFAULT_TOLERANCES.replace(dense_cutoff=1)
        x = stationary_distribution(m, [0, 1], tiny_cutoff)
        np.testing.assert_allclose(x, [0.5, 0.5], atol=1e-10)

    def test_non_recurrent_class_rejected(self):
        m = load_matrix("0.5,0.5,0;0.5,0,0.3;0,0.5,0")
        with pytest.raises(ValidationFailure):
            stationary_distribution(m, [0, 1, 2])

    def test_iteration_budget_enforced(self):
        # asymmetric and stiff: uniform start is far from stationary
        slow = make_stochastic([[0.999, 0.001], [0.0005, 0.9995]])
        starved = DEFAULT_TOLERANCES.replace(dense_cutoff=1, max_iters=1)
        with pytest.raises(ConvergenceFailure):
            stationary_distribution(slow, [0, 1], starved)

    def test_residual_within_solver_tol(self, rng):
        for n in (3, 4, 6):
            m = random_dense_chain(n, rng)
            x = stationary_distribution(m, list(range(n)))
            assert np.abs(x @ m.entries - x).sum() <= 1e-10


class TestMixtures:
    def test_single_class_identity(self):
        d = decompose(load_matrix("0.7,0.3;0.3,0.7"))
        pi = mix_stationary(d, [1.0])
        np.testing.assert_allclose(pi.weights, d.stationary_vectors[0])

    def test_two_absorbing_states(self):
        d = decompose(load_matrix("1,0;0,1"))
        pi = mix_stationary(d, [0.5, 0.5])
        np.testing.assert_allclose(pi.weights, [0.5, 0.5])

    def test_degenerate_weight(self):
        d = decompose(load_matrix("0.5,0.5,0;0,1,0;0,0,1"))
        pi = mix_stationary(d, [1.0, 0.0])
        assert pi.weights[1] == 1.0 and pi.weights[2] == 0.0

    def test_bad_coefficients(self):
        d = decompose(load_matrix("1,0;0,1"))
        with pytest.raises(ValidationFailure):
            mix_stationary(d, [0.7, 0.7])
        with pytest.raises(ValidationFailure):
            mix_stationary(d, [-0.5, 1.5])
        with pytest.raises(ValidationFailure):
            mix_stationary(d, [1.0])

    def test_mixture_is_fixed_point(self, rng):
        m = load_matrix("0.5,0.25,0.25,0;0,1,0,0;0,0,0.3,0.7;0,0,0.6,0.4")
        d = decompose(m)
        pi = mix_stationary(d, [0.25, 0.75])
        assert np.abs(pi.weights @ m.entries - pi.weights).sum() <= 1e-10


class TestEvolve:
    def test_zero_steps_identity(self):
        m = load_matrix("0,1;1,0")
        np.testing.assert_array_equal(evolve(m, np.array([0.3, 0.7]), 0), [0.3, 0.7])

    def test_swap(self):
        m = load_matrix("0,1;1,0")
        np.testing.assert_array_equal(evolve(m, np.array([1.0, 0.0]), 1), [0.0, 1.0])

    def test_hand_matrix_square(self):
        m = load_matrix("0.7,0.3;0.3,0.7")
        np.testing.assert_allclose(
            evolve(m, np.array([1.0, 0.0]), 2), [0.58, 0.42], atol=1e-15
        )


class TestDecomposeDeterminism:
    def test_identical_bytes_identical_output(self, rng):
        m = random_dense_chain(6, np.random.default_rng(5))
        d1 = decompose(m)
        d2 = decompose(make_stochastic(m.entries.copy()))
        assert decomposition_to_json(d1) == decomposition_to_json(d2)

    def test_partition_property(self, rng):
        samples = [
            load_matrix("0.5,0.5,0;0,1,0;0,0,1"),
            load_matrix("0.5,0.5,0;0.5,0,0.3;0,0.5,0"),
            random_dense_chain(5, rng),
        ]
        for m in samples:
            d = decompose(m)
            pieces = [set(d.transient)] + [set(c) for c in d.recurrent_classes]
            assert set().union(*pieces) == set(range(m.size))
            assert sum(len(p) for p in pieces) == m.size
