"""Distribution containers, sampling, and grid plumbing."""

import numpy as np
import pytest

from divlab.dists import (
    DiscreteDist,
    DiscreteJoint,
    Gaussian2D,
    GridDensity,
    IsotropicGaussian,
    RngSeed,
    TabularAutoregressive,
    conditional_second,
    default_bounds,
    factorized,
    gaussian_density,
    grid_from_density,
    grid_from_gaussian,
    marginal_first,
    marginal_second,
    random_dist,
    random_joint,
    sample,
    sample_many,
)
from divlab.errors import DegenerateGrid, InvalidDistribution, ZeroMarginal


# ---------------------------------------------------------------------------
# discrete containers


def test_discrete_dist_accepts_probability_vector():
    d = DiscreteDist([0.2, 0.3, 0.5])
    assert d.size == 3
    assert d.probs.sum() == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize(
    "bad",
    [
        [0.5, 0.6],
        [0.5, -0.1, 0.6],
        [0.5, np.nan, 0.5],
        [[0.5, 0.5]],
        [1.0 + 1e-9],
    ],
)
def test_discrete_dist_rejects_bad_input(bad):
    with pytest.raises(InvalidDistribution):
        DiscreteDist(bad)


def test_discrete_dist_is_frozen():
    d = DiscreteDist([0.5, 0.5])
    with pytest.raises(ValueError):
        d.probs[0] = 0.9


def test_from_weights_normalizes():
    d = DiscreteDist.from_weights([2.0, 3.0, 5.0])
    assert np.allclose(d.probs, [0.2, 0.3, 0.5])
    with pytest.raises(InvalidDistribution):
        DiscreteDist.from_weights([0.0, 0.0])


def test_joint_must_be_square():
    with pytest.raises(InvalidDistribution):
        DiscreteJoint(np.full((2, 3), 1.0 / 6.0))
    j = DiscreteJoint(np.full((3, 3), 1.0 / 9.0))
    assert j.alphabet_size == 3


def test_marginals_and_conditionals(correlated_joint):
    p1 = marginal_first(correlated_joint)
    p2 = marginal_second(correlated_joint)
    assert np.allclose(p1.probs, [0.5, 0.5])
    assert np.allclose(p2.probs, [0.5, 0.5])
    c0 = conditional_second(correlated_joint, 0)
    assert np.allclose(c0.probs, [0.8, 0.2])
    c1 = conditional_second(correlated_joint, 1)
    assert np.allclose(c1.probs, [0.2, 0.8])


def test_conditional_on_zero_row_raises():
    j = DiscreteJoint(np.array([[0.5, 0.5], [0.0, 0.0]]))
    with pytest.raises(ZeroMarginal):
        conditional_second(j, 1)


def test_factorized_outer_product():
    j = factorized(DiscreteDist([0.3, 0.7]), DiscreteDist([0.25, 0.75]))
    assert np.allclose(j.table, np.outer([0.3, 0.7], [0.25, 0.75]))


# ---------------------------------------------------------------------------
# rng streams and sampling


def test_rng_streams_are_reproducible():
    seed = RngSeed(42)
    a = seed.stream("data").standard_normal(8)
    b = seed.stream("data").standard_normal(8)
    assert np.array_equal(a, b)


def test_rng_streams_with_distinct_keys_differ():
    seed = RngSeed(42)
    a = seed.stream("data").standard_normal(8)
    b = seed.stream("coin").standard_normal(8)
    c = seed.stream("data", 1).standard_normal(8)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_sampling_matches_probabilities(rng):
    d = DiscreteDist([0.1, 0.6, 0.3])
    draws = sample_many(d, rng, 200_000)
    freq = np.bincount(draws, minlength=3) / draws.size
    assert np.allclose(freq, d.probs, atol=5e-3)


def test_sample_returns_in_range(rng):
    d = DiscreteDist([0.0, 1.0])
    for _ in range(20):
        assert sample(d, rng) == 1


def test_random_dist_and_joint_are_valid(rng):
    d = random_dist(5, 3.0, rng)
    j = random_joint(4, 1.0, rng)
    assert d.probs.sum() == pytest.approx(1.0, abs=1e-12)
    assert j.table.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(d.probs > 0)


# ---------------------------------------------------------------------------
# autoregressive tables


def test_uniform_autoregressive_rows():
    model = TabularAutoregressive.uniform(2, 3)
    assert np.allclose(model.row(()).probs, [1 / 3] * 3)
    assert np.allclose(model.row((2,)).probs, [1 / 3] * 3)


def test_from_joint_matches_chain_rule(correlated_joint):
    model = TabularAutoregressive.from_joint(correlated_joint)
    assert np.allclose(model.row(()).probs, [0.5, 0.5])
    assert np.allclose(model.row((0,)).probs, [0.8, 0.2])
    back = model.implied_joint()
    assert np.allclose(back.table, correlated_joint.table, atol=1e-15)


def test_from_joint_zero_row_becomes_uniform():
    j = DiscreteJoint(np.array([[0.5, 0.5], [0.0, 0.0]]))
    model = TabularAutoregressive.from_joint(j)
    assert np.allclose(model.row((1,)).probs, [0.5, 0.5])


def test_log_prob_is_chain_rule_sum(correlated_joint):
    model = TabularAutoregressive.from_joint(correlated_joint)
    assert model.log_prob((0, 0)) == pytest.approx(np.log(0.5) + np.log(0.8))


def test_path_probabilities_sum_to_one():
    model = TabularAutoregressive.uniform(3, 2)
    paths = model.path_probabilities()
    assert paths.shape == (2, 2, 2)
    assert paths.sum() == pytest.approx(1.0, abs=1e-12)


def test_with_row_replaces_single_conditional():
    model = TabularAutoregressive.uniform(2, 2)
    bumped = model.with_row((0,), DiscreteDist([0.9, 0.1]))
    assert np.allclose(bumped.row((0,)).probs, [0.9, 0.1])
    assert np.allclose(model.row((0,)).probs, [0.5, 0.5])


def test_sample_sequence_is_deterministic_per_stream():
    model = TabularAutoregressive.uniform(4, 3)
    s1 = [model.sample_sequence(RngSeed(7).stream("s")) for _ in range(3)]
    s2 = [model.sample_sequence(RngSeed(7).stream("s")) for _ in range(3)]
    assert s1 == s2


def test_incomplete_conditional_map_rejected():
    with pytest.raises(InvalidDistribution):
        TabularAutoregressive(2, 2, {(): DiscreteDist([0.5, 0.5])})


# ---------------------------------------------------------------------------
# gaussians and grids


def test_gaussian_validation():
    with pytest.raises(InvalidDistribution):
        Gaussian2D(np.zeros(2), np.array([[1.0, 0.5], [0.4, 1.0]]))
    with pytest.raises(InvalidDistribution):
        Gaussian2D(np.zeros(2), np.array([[1.0, 2.0], [2.0, 1.0]]))
    with pytest.raises(InvalidDistribution):
        IsotropicGaussian(np.zeros(2), 0.0)


def test_density_peak_value():
    g = Gaussian2D(np.zeros(2), np.eye(2) * 2.0)
    assert gaussian_density(g, (0.0, 0.0)) == pytest.approx(1.0 / (4.0 * np.pi))


def test_isotropic_round_trip():
    iso = IsotropicGaussian(np.array([1.0, -2.0]), 3.0)
    g = iso.to_gaussian2d()
    assert np.allclose(g.covariance, np.eye(2) * 3.0)
    assert np.allclose(g.mean, [1.0, -2.0])


def test_default_bounds_track_largest_eigenvalue():
    g = Gaussian2D(np.zeros(2), np.diag([4.0, 1.0]))
    x_min, x_max, y_min, y_max = default_bounds(g)
    assert x_min == pytest.approx(-12.0)
    assert x_max == pytest.approx(12.0)
    assert y_min == pytest.approx(-12.0)


def test_grid_quadrature_mass_is_one():
    g = Gaussian2D(np.zeros(2), np.diag([4.0, 1.0]))
    grid = grid_from_gaussian(g, resolution=128)
    assert grid.quadrature_mass() == pytest.approx(1.0, abs=1e-9)


def test_grid_cell_centers_spacing():
    grid = grid_from_gaussian(IsotropicGaussian(np.zeros(2), 1.0), (-1, 1, -1, 1), 4)
    xs, ys = grid.cell_centers()
    assert xs.shape == (4,)
    assert np.allclose(np.diff(xs), 0.5)
    assert grid.cell_area == pytest.approx(0.25)


def test_grid_from_density_callable():
    grid = grid_from_density(lambda x, y: np.exp(-(x**2) - y**2), (-5, 5, -5, 5), 64)
    assert grid.quadrature_mass() == pytest.approx(1.0, abs=1e-12)
    assert grid.values.shape == (64, 64)


def test_degenerate_window_raises():
    g = IsotropicGaussian(np.zeros(2), 1.0)
    with pytest.raises(DegenerateGrid):
        grid_from_gaussian(g, (500.0, 501.0, 500.0, 501.0), 32)


def test_same_grid_compares_geometry():
    a = grid_from_gaussian(IsotropicGaussian(np.zeros(2), 1.0), (-3, 3, -3, 3), 16)
    b = grid_from_gaussian(IsotropicGaussian(np.zeros(2), 2.0), (-3, 3, -3, 3), 16)
    c = grid_from_gaussian(IsotropicGaussian(np.zeros(2), 1.0), (-3, 3, -3, 3), 32)
    assert a.same_grid(b)
    assert not a.same_grid(c)


def test_renormalize_clears_small_mass_drift():
    grid = grid_from_gaussian(IsotropicGaussian(np.zeros(2), 1.0), (-4, 4, -4, 4), 32)
    drifted = GridDensity(
        grid.x_min, grid.x_max, grid.y_min, grid.y_max, grid.resolution,
        grid.values * (1.0 + 5e-4),
    )
    assert abs(drifted.quadrature_mass() - 1.0) > 1e-4
    assert drifted.renormalize().quadrature_mass() == pytest.approx(1.0, abs=1e-12)


def test_grid_rejects_large_mass_error():
    grid = grid_from_gaussian(IsotropicGaussian(np.zeros(2), 1.0), (-4, 4, -4, 4), 32)
    with pytest.raises(InvalidDistribution):
        GridDensity(
            grid.x_min, grid.x_max, grid.y_min, grid.y_max, grid.resolution,
            grid.values * 3.0,
        )
