"""Ground-truth-simulation protocol: data generation, anomalization, errors."""

import math

import numpy as np
import pytest

from isoexplain import (
    AnomalizationSpec,
    ConfigurationError,
    Dataset,
    ExplanationVector,
    InputError,
    METHOD_DIFFI,
    METHOD_OURS,
    METHOD_RANDOM,
    SynthConfig,
    anomalize,
    expected_vector,
    explanation_error,
    fit_forest,
    gen_clusters,
    run_ground_truth,
    sweep,
)


# ---------------------------------------------------------------- gen_clusters

def test_gen_clusters_shapes_and_even_split():
    data = gen_clusters(1000, 2, 2, seed=0)
    assert data.n == 1000 and data.d == 2
    # alternating centers: first half near (5,5), second near (-5,-5)
    first, second = data.values[:500], data.values[500:]
    assert np.linalg.norm(first.mean(axis=0) - 5.0) < 0.5
    assert np.linalg.norm(second.mean(axis=0) + 5.0) < 0.5


def test_gen_clusters_within_four_sigma():
    # Gaussian tail oracle: >= 99.9% of unit-variance draws within 4 sigma
    data = gen_clusters(1000, 2, 2, seed=1)
    centers = np.vstack([np.full((500, 2), 5.0), np.full((500, 2), -5.0)])
    dist = np.abs(data.values - centers)
    assert (dist <= 4.0).mean() >= 0.999


def test_gen_clusters_single_cluster_1d():
    data = gen_clusters(10, 1, 1, seed=2)
    assert data.n == 10 and data.d == 1
    assert np.isfinite(data.values).all()


def test_gen_clusters_uneven_counts_distributed():
    data = gen_clusters(10, 1, 3, seed=0)
    assert data.n == 10


def test_gen_clusters_deterministic():
    a = gen_clusters(100, 3, 2, seed=9)
    b = gen_clusters(100, 3, 2, seed=9)
    assert np.array_equal(a.values, b.values)


def test_gen_clusters_rejects_bad_configs():
    with pytest.raises(ConfigurationError):
        gen_clusters(1, 2, 2, seed=0)
    with pytest.raises(ConfigurationError):
        gen_clusters(10, 2, 0, seed=0)


# ---------------------------------------------------------------- anomalize

def test_anomalize_empty_set_rejected(small_gaussian_data):
    with pytest.raises(InputError):
        anomalize(small_gaussian_data, 0, [], 3.0)


def test_anomalize_sets_three_times_column_max():
    data = Dataset([[1.0, 2.0], [10.0, -1.0], [4.0, 0.5]])
    x = anomalize(data, 0, [0], 3.0)
    assert x[0] == 30.0
    assert x[1] == 2.0  # untouched attribute is bit-identical


def test_anomalize_all_attributes():
    data = Dataset([[1.0, 2.0], [10.0, -1.0]])
    x = anomalize(data, 1, [0, 1], 3.0)
    assert np.array_equal(x, [30.0, 6.0])


def test_anomalize_rejects_out_of_range():
    data = Dataset([[1.0, 2.0]])
    with pytest.raises(InputError):
        anomalize(data, 0, [2], 3.0)
    with pytest.raises(InputError):
        anomalize(data, 5, [0], 3.0)


# ---------------------------------------------------------------- expected_vector

def test_expected_vector_two_of_five():
    v = expected_vector({0, 3}, 5)
    assert np.array_equal(v.weights, [0.5, 0.0, 0.0, 0.5, 0.0])
    assert v.changed == frozenset({0, 3})


def test_expected_vector_single():
    assert np.array_equal(expected_vector({2}, 3).weights, [0.0, 0.0, 1.0])


def test_expected_vector_all_of_four():
    assert np.array_equal(expected_vector({0, 1, 2, 3}, 4).weights, [0.25] * 4)


def test_expected_vector_is_probability_vector():
    rng = np.random.default_rng(0)
    for _ in range(50):
        d = int(rng.integers(1, 30))
        k = int(rng.integers(1, d + 1))
        changed = rng.choice(d, size=k, replace=False)
        v = expected_vector(changed, d)
        assert v.weights.sum() == pytest.approx(1.0, abs=1e-12)
        assert (v.weights >= 0).all()
        assert np.count_nonzero(v.weights) == k


# ---------------------------------------------------------------- explanation_error

def test_explanation_error_zero_for_equal():
    v = expected_vector({1}, 3)
    w = ExplanationVector(v.weights.copy(), METHOD_OURS)
    assert explanation_error(v, w) == 0.0


def test_explanation_error_orthogonal_unit_vectors():
    v = expected_vector({0}, 2)
    w = ExplanationVector(np.array([0.0, 1.0]), METHOD_OURS)
    assert explanation_error(v, w) == pytest.approx(math.sqrt(2.0))


def test_explanation_error_direct_formula():
    v = expected_vector({0, 1}, 2)
    w = ExplanationVector(np.array([0.75, 0.25]), METHOD_OURS)
    oracle = math.sqrt((0.5 - 0.75) ** 2 + (0.5 - 0.25) ** 2)
    assert explanation_error(v, w) == pytest.approx(oracle, abs=1e-15)
    assert explanation_error(v, w) == pytest.approx(0.35355339059327373, abs=1e-12)


def test_explanation_error_rejects_length_mismatch():
    v = expected_vector({0}, 3)
    with pytest.raises(InputError):
        explanation_error(v, ExplanationVector(np.zeros(2), METHOD_OURS))


# ---------------------------------------------------------------- run_ground_truth

def test_spec_validation():
    with pytest.raises(ConfigurationError):
        AnomalizationSpec(m_fraction=0.0, n_examples=10)
    with pytest.raises(ConfigurationError):
        AnomalizationSpec(m_fraction=1.5, n_examples=10)
    with pytest.raises(ConfigurationError):
        AnomalizationSpec(m_fraction=0.5, n_examples=0)


def test_changed_count_rounds_half_up():
    assert AnomalizationSpec(0.25, 10).changed_count(10) == 3  # 2.5 rounds up
    assert AnomalizationSpec(0.25, 10).changed_count(6) == 2   # 1.5 rounds up
    assert AnomalizationSpec(0.01, 10).changed_count(10) == 1  # floor of 1
    assert AnomalizationSpec(1.0, 10).changed_count(7) == 7


@pytest.fixture(scope="module")
def small_run():
    data = gen_clusters(400, 4, 2, seed=3)
    forest = fit_forest(data, t=50, psi=128, seed=3)
    spec = AnomalizationSpec(m_fraction=0.5, n_examples=40, seed=3)
    return data, forest, spec


def test_random_method_self_normalizes(small_run):
    data, forest, spec = small_run
    (res,) = run_ground_truth(data, forest, spec, [METHOD_RANDOM])
    assert res.normalized_error == 1.0
    assert res.n_excluded == 0
    assert len(res.errors) == 40


def test_run_ground_truth_deterministic(small_run):
    data, forest, spec = small_run
    a = run_ground_truth(data, forest, spec, [METHOD_OURS, METHOD_RANDOM])
    b = run_ground_truth(data, forest, spec, [METHOD_OURS, METHOD_RANDOM])
    assert a == b


def test_run_ground_truth_same_picks_across_method_subsets(small_run):
    # the random baseline (and the picks) must not depend on which methods run
    data, forest, spec = small_run
    full = run_ground_truth(data, forest, spec, [METHOD_OURS, METHOD_RANDOM])
    only_ours = run_ground_truth(data, forest, spec, [METHOD_OURS])
    assert full[0].errors == only_ours[0].errors
    assert full[0].normalized_error == only_ours[0].normalized_error


def test_run_ground_truth_ours_beats_random(small_run):
    data, forest, spec = small_run
    (res,) = run_ground_truth(data, forest, spec, [METHOD_OURS])
    assert res.method_tag == METHOD_OURS
    assert res.normalized_error < 1.0


def test_run_ground_truth_rejects_unknown_method(small_run):
    data, forest, spec = small_run
    with pytest.raises(ConfigurationError):
        run_ground_truth(data, forest, spec, ["shap"])


def test_run_ground_truth_rejects_mismatched_forest(small_run):
    data, forest, spec = small_run
    other = gen_clusters(100, 3, 2, seed=0)
    with pytest.raises(InputError):
        run_ground_truth(other, forest, spec, [METHOD_OURS])


# ---------------------------------------------------------------- sweep

def test_sweep_rejects_bad_axis_and_empty_grid():
    base = SynthConfig()
    with pytest.raises(ConfigurationError):
        sweep("temperature", [1], base, [METHOD_OURS])
    with pytest.raises(ConfigurationError):
        sweep("size", [], base, [METHOD_OURS])


def test_sweep_single_point_has_row_per_method():
    base = SynthConfig(n=300, d=3, trees=20, psi=64, n_examples=15, seed=1)
    points = sweep("m_fraction", [0.5], base, [METHOD_OURS, METHOD_DIFFI, METHOD_RANDOM])
    assert len(points) == 1
    assert {r.method_tag for r in points[0].results} == {METHOD_OURS, METHOD_DIFFI, METHOD_RANDOM}


def test_sweep_size_grid_is_total():
    base = SynthConfig(d=3, trees=20, psi=64, n_examples=10, seed=2)
    points = sweep("size", [200, 500], base, [METHOD_OURS])
    assert [p.axis_value for p in points] == [200.0, 500.0]
    for p in points:
        for r in p.results:
            assert math.isfinite(r.mean_error)
            assert math.isfinite(r.normalized_error)


def test_sweep_m_grid_error_decreases_with_k():
    # quick shape check; the full sqrt(1/k) fit runs in the acceptance suite
    base = SynthConfig(n=500, d=8, trees=50, psi=128, n_examples=40, seed=4)
    points = sweep("m_fraction", [0.125, 1.0], base, [METHOD_OURS])
    raw = [p.results[0].mean_error for p in points]
    assert raw[0] > raw[1]
