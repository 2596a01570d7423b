import numpy as np
import pytest

from mgembed import (Graph, GraphSet, GridSpec, LoadingDistribution,
                     MregModel, enumerate_loop_graphs,
                     exhaustive_distribution_check, sphere_grid_min,
                     universal_mreg)

from conftest import random_graph_set


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        GridSpec(resolution=4)
    with pytest.raises(ValueError):
        GridSpec(zoom=1.0)


def test_sphere_grid_rank_one_target():
    a = np.zeros((3, 3))
    a[0, 0] = 1.0
    gs = GraphSet([Graph.from_dense(a, weighted=True, loops_allowed=True)])
    h, val = sphere_grid_min(gs, GridSpec(resolution=16))
    assert val == pytest.approx(0.0, abs=1e-6)
    assert abs(abs(h[0]) - 1.0) < 1e-3


def test_sphere_grid_zero_graphs():
    g = Graph.from_dense(np.zeros((3, 3)), weighted=False, loops_allowed=False)
    h, val = sphere_grid_min(GraphSet([g, g]), GridSpec(resolution=12))
    assert val == 0.0
    assert abs(np.linalg.norm(h) - 1.0) < 1e-12


def test_sphere_grid_bounds_and_determinism(rng):
    gs = random_graph_set(rng, 3, 3, weighted=False, loops=False)
    h1, v1 = sphere_grid_min(gs, GridSpec(resolution=12))
    h2, v2 = sphere_grid_min(gs, GridSpec(resolution=12))
    assert v1 == v2 and np.array_equal(h1, h2)
    upper = np.mean([g.frobenius_norm_sq() for g in gs])
    assert 0.0 <= v1 <= upper


def test_sphere_grid_n1_and_size_cap(rng):
    g = Graph.from_dense(np.array([[1.0]]), weighted=False, loops_allowed=True)
    h, val = sphere_grid_min(GraphSet([g]))
    assert h[0] == 1.0 and val == pytest.approx(0.0)
    big = random_graph_set(rng, 1, 5)
    with pytest.raises(ValueError):
        sphere_grid_min(big)


def test_sphere_grid_certifies_solver(rng):
    from mgembed import EmbedConfig, joint_embed, sample_approx_error
    gs = random_graph_set(rng, 3, 3, weighted=False, loops=False)
    res = joint_embed(gs, EmbedConfig(d=1, restarts=4, seed=5))
    solver_val = sample_approx_error(gs, res.H[:, 0])
    _, oracle_val = sphere_grid_min(gs, GridSpec(resolution=16))
    assert oracle_val <= solver_val + 1e-3


def uniform_n2_model():
    graphs = enumerate_loop_graphs(2)
    return universal_mreg([(g, 1.0 / 8.0) for g in graphs])


def test_distribution_check_point_mass():
    graphs = enumerate_loop_graphs(2)
    probs = [(g, 1.0 if i == 5 else 0.0) for i, g in enumerate(graphs)]
    model = universal_mreg(probs)
    with pytest.warns(UserWarning):
        stat, p = exhaustive_distribution_check(model, 200, seed=3)
    assert stat == pytest.approx(0.0)
    assert p == 1.0


def test_distribution_check_uniform_passes():
    model = uniform_n2_model()
    stat, p = exhaustive_distribution_check(model, 10 ** 4, seed=11)
    assert p > 0.001


def test_distribution_check_power():
    # Sample from a skewed distribution, test against one with the most and
    # least likely graphs swapped: decisive rejection.
    graphs = enumerate_loop_graphs(2)
    weights = np.arange(1.0, 9.0)
    weights /= weights.sum()
    model = universal_mreg(list(zip(graphs, weights)))
    wrong = weights.copy()
    wrong[0], wrong[7] = wrong[7], wrong[0]
    stat, p = exhaustive_distribution_check(model, 10 ** 4, seed=7, probs=wrong)
    assert p < 1e-6


def test_distribution_check_size_cap():
    h = np.full((5, 1), 1.0 / np.sqrt(5.0))
    model = MregModel(n=5, d=1, H=h,
                      F=LoadingDistribution.point_mass_mixture([[0.0]], [1.0]))
    with pytest.raises(ValueError):
        exhaustive_distribution_check(model, 10, seed=0)
