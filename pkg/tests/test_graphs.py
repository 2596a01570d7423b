import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mgembed import (Graph, GraphSet, GraphFormatError, load_graph_set,
                     parse_graph, serialize_graph, write_graph_set)

from conftest import random_symmetric


def test_parse_single_edge():
    g = parse_graph("2 1 0 1\n0 1")
    assert g.n == 2 and not g.weighted and g.loops_allowed
    assert np.array_equal(g.dense(), [[0.0, 1.0], [1.0, 0.0]])


def test_parse_empty_graph():
    g = parse_graph("1 0 0 1")
    assert np.array_equal(g.dense(), [[0.0]])


def test_parse_weighted_self_loop():
    g = parse_graph("2 1 1 1\n0 0 0.5")
    assert np.array_equal(g.dense(), [[0.5, 0.0], [0.0, 0.0]])


@pytest.mark.parametrize("text", [
    "2 1 0",                      # short header
    "x 1 0 1\n0 1",               # non-integer header
    "2 1 0 2\n0 1",               # flag out of range
    "2 1 0 1\n0 2",               # index out of range
    "2 1 0 1\n1 0",               # u > v
    "2 2 0 1\n0 1\n0 1",          # duplicate edge
    "2 1 0 1\n0 1 2.0",           # weight on unweighted graph
    "2 1 1 1\n0 1",               # missing weight on weighted graph
    "2 2 0 1\n0 1",               # edge count mismatch
    "2 1 0 0\n0 0",               # loop but loops flag 0
])
def test_parse_errors(text):
    with pytest.raises(GraphFormatError):
        parse_graph(text)


@given(st.integers(1, 8), st.booleans(), st.booleans(), st.integers(0, 10 ** 6))
@settings(max_examples=60, deadline=None)
def test_parse_serialize_roundtrip(n, weighted, loops, seed):
    rng = np.random.default_rng(seed)
    a = random_symmetric(rng, n, weighted=weighted, loops=loops)
    g = Graph.from_dense(a, weighted=weighted, loops_allowed=loops)
    again = parse_graph(serialize_graph(g))
    assert np.array_equal(again.dense(), g.dense())
    assert (again.weighted, again.loops_allowed) == (weighted, loops)
    # serialize is stable under a second pass
    assert serialize_graph(again) == serialize_graph(g)


def test_matvec_identity_with_loops():
    g = Graph.from_dense(np.eye(3), weighted=False, loops_allowed=True)
    assert np.array_equal(g.matvec([1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])


def test_matvec_all_ones_row_sums():
    g = Graph.from_dense(np.ones((4, 4)), weighted=False, loops_allowed=True)
    assert np.array_equal(g.matvec(np.ones(4)), np.full(4, 4.0))


def test_matvec_dimension_mismatch():
    g = Graph.from_dense(np.eye(2), weighted=False, loops_allowed=True)
    with pytest.raises(ValueError):
        g.matvec([1.0, 2.0, 3.0])


@given(st.integers(1, 32), st.booleans(), st.integers(0, 10 ** 6))
@settings(max_examples=60, deadline=None)
def test_matvec_sparse_matches_dense(n, weighted, seed):
    rng = np.random.default_rng(seed)
    a = random_symmetric(rng, n, weighted=weighted)
    dense = Graph.from_dense(a, weighted=weighted, loops_allowed=True)
    sparse = Graph.from_dense(a, weighted=weighted, loops_allowed=True,
                              storage="sparse")
    v = rng.standard_normal(n)
    ref = a @ v
    assert np.max(np.abs(dense.matvec(v) - ref)) < 1e-12
    assert np.max(np.abs(sparse.matvec(v) - ref)) < 1e-12


def test_quadratic_form_ones():
    g = Graph.from_dense(np.ones((4, 4)), weighted=False, loops_allowed=True)
    assert g.quadratic_form(np.full(4, 0.5)) == pytest.approx(4.0)


def test_quadratic_form_zero_vector():
    g = Graph.from_dense(np.ones((4, 4)), weighted=False, loops_allowed=True)
    assert g.quadratic_form(np.zeros(4)) == 0.0


def test_quadratic_form_double_loop_reference(rng):
    a = random_symmetric(rng, 5)
    g = Graph.from_dense(a, weighted=True, loops_allowed=True)
    h = rng.standard_normal(5)
    ref = sum(a[s, t] * h[s] * h[t] for s in range(5) for t in range(5))
    assert g.quadratic_form(h) == pytest.approx(ref, abs=1e-12)
    # consistency with matvec, exactly as computed
    assert g.quadratic_form(h) == float(np.dot(h, g.matvec(h)))


def test_frobenius_norm_sq():
    zero = Graph.from_dense(np.zeros((3, 3)), weighted=False, loops_allowed=False)
    assert zero.frobenius_norm_sq() == 0.0
    ones = Graph.from_dense(np.ones((3, 3)), weighted=False, loops_allowed=True)
    assert ones.frobenius_norm_sq() == 9.0
    edge = parse_graph("3 1 0 0\n0 1")
    assert edge.frobenius_norm_sq() == 2.0


def test_frobenius_sparse_matches_dense(rng):
    a = random_symmetric(rng, 7)
    dense = Graph.from_dense(a, weighted=True, loops_allowed=True)
    sparse = Graph.from_dense(a, weighted=True, loops_allowed=True, storage="sparse")
    assert dense.frobenius_norm_sq() == pytest.approx(sparse.frobenius_norm_sq(),
                                                      abs=1e-12)


def test_graph_rejects_asymmetry():
    a = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(GraphFormatError):
        Graph(2, weighted=False, loops_allowed=False, storage="dense", dense=a)


def test_graph_rejects_nonbinary_unweighted():
    a = np.array([[0.0, 0.5], [0.5, 0.0]])
    with pytest.raises(GraphFormatError):
        Graph(2, weighted=False, loops_allowed=False, storage="dense", dense=a)


def test_graph_set_requires_common_n():
    g2 = Graph.from_dense(np.zeros((2, 2)), weighted=False, loops_allowed=False)
    g3 = Graph.from_dense(np.zeros((3, 3)), weighted=False, loops_allowed=False)
    with pytest.raises(GraphFormatError):
        GraphSet([g2, g3])


def test_graph_set_label_and_response_validation():
    g = Graph.from_dense(np.zeros((2, 2)), weighted=False, loops_allowed=False)
    with pytest.raises(GraphFormatError):
        GraphSet([g, g], labels=[1])
    with pytest.raises(GraphFormatError):
        GraphSet([g, g], labels=[0, 1])
    with pytest.raises(GraphFormatError):
        GraphSet([g, g], responses=[1.0, np.inf])
    gs = GraphSet([g, g], labels=[2, 1], responses=[0.5, -1.0])
    assert gs.labels == (2, 1) and gs.responses == (0.5, -1.0)


def test_manifest_roundtrip(tmp_path, rng):
    graphs = [Graph.from_dense(random_symmetric(rng, 4, weighted=False,
                                                loops=False),
                               weighted=False, loops_allowed=False)
              for _ in range(3)]
    gs = GraphSet(graphs, labels=[1, 2, 1], responses=[0.25, -3.5, 10.0])
    manifest = write_graph_set(gs, tmp_path / "set")
    back = load_graph_set(manifest)
    assert back.m == 3 and back.labels == gs.labels and back.responses == gs.responses
    for g0, g1 in zip(gs, back):
        assert np.array_equal(g0.dense(), g1.dense())


def test_manifest_partial_fields(tmp_path):
    g = Graph.from_dense(np.zeros((2, 2)), weighted=False, loops_allowed=False)
    manifest = write_graph_set(GraphSet([g]), tmp_path)
    back = load_graph_set(manifest)
    assert back.labels is None and back.responses is None
