"""test functions in graphdemo.py"""

import networkx as nx
import numpy as np
import pytest

from src import equicheck
from src.graphdemo import (
    NAMED_GRAPHS,
    SmallGraph,
    adjacency_action,
    automorphism_group,
    automorphism_perms,
    automorphism_subgroup,
    distance_decoder_best_error,
    equivariant_embed,
    erdos_renyi,
    graph_demo,
    graph_from_networkx,
    named_graph,
    node_breaking_vector,
    node_orbits,
    sympe_embed,
    summarize,
)
from src.groups import check_group_axioms, make_symmetric
from src.utils import make_rng


@pytest.mark.parametrize(
    "name, order", [("C4", 8), ("C6", 12), ("P3", 2), ("K4", 24), ("K4-M", 8)]
)
def test_automorphism_orders(name, order):
    """automorphism group orders of the named graphs"""
    graph = named_graph(name)
    perms = automorphism_perms(graph)
    assert len(perms) == order
    assert np.array_equal(perms[0], np.arange(graph.n))
    for perm in perms:
        assert graph.permuted(perm) == graph


def test_automorphism_methods_agree():
    """vf2 and exhaustive enumeration give the same automorphisms"""
    rng = make_rng(60)
    for n in range(1, 7):
        for _ in range(5):
            graph = erdos_renyi(n, 0.4, rng)
            assert np.array_equal(
                automorphism_perms(graph, "vf2"),
                automorphism_perms(graph, "exhaustive"),
            )
    with pytest.raises(ValueError):
        automorphism_perms(named_graph("P3"), "bogus")


def test_automorphism_group():
    """Aut(C4) as a group and as a subgroup of S_4"""
    graph = named_graph("C4")
    action = automorphism_group(graph)
    assert action.group.order == 8
    assert check_group_axioms(action.group)
    subgroup = automorphism_subgroup(graph, make_symmetric(4))
    assert subgroup.order == 8
    assert subgroup.check()


def test_adjacency_action():
    """S_n acts on adjacency matrices by relabeling nodes"""
    sym_action = make_symmetric(4)
    action = adjacency_action(sym_action)
    graph = named_graph("P3")
    graph = SmallGraph(np.pad(graph.adjacency, ((0, 1), (0, 1))))
    for elem in [1, 9, 17, 23]:
        perm = sym_action.perms[elem]
        assert np.array_equal(
            action.apply(elem, graph.adjacency), graph.permuted(perm).adjacency
        )


def test_graph_errors():
    """invalid adjacency matrices and names are rejected"""
    with pytest.raises(ValueError):
        SmallGraph(np.array([[0, 1], [0, 0]]))
    with pytest.raises(ValueError):
        SmallGraph(np.eye(2, dtype=np.int64))
    with pytest.raises(ValueError):
        SmallGraph(np.zeros((9, 9)))
    with pytest.raises(ValueError):
        named_graph("Petersen")
    with pytest.raises(ValueError):
        erdos_renyi(9, 0.5, make_rng(0))
    with pytest.raises(ValueError):
        erdos_renyi(4, 1.5, make_rng(0))


def test_networkx_round_trip():
    """conversion to networkx and back preserves the graph"""
    for name in NAMED_GRAPHS:
        graph = named_graph(name)
        assert graph_from_networkx(graph.to_networkx()) == graph
    assert named_graph("K4-M").to_networkx().number_of_edges() == 4
    assert nx.is_isomorphic(named_graph("K4-M").to_networkx(), nx.cycle_graph(4))


def test_node_orbits():
    """orbits of the path and cycle graphs"""
    assert node_orbits(named_graph("P3")) == [(0, 2), (1,)]
    assert node_orbits(named_graph("C6")) == [tuple(range(6))]


def test_equivariant_embed():
    """relabeling nodes permutes embedding rows, and rows agree within orbits"""
    rng = make_rng(61)
    graph = erdos_renyi(6, 0.5, rng)
    embedding = equivariant_embed(graph)
    perm = rng.permutation(6)
    moved = equivariant_embed(graph.permuted(perm))
    assert np.array_equal(moved[perm], embedding)
    for orbit in node_orbits(graph):
        for node in orbit:
            assert np.array_equal(embedding[node], embedding[orbit[0]])
    with pytest.raises(ValueError):
        equivariant_embed(graph, rounds=-1)


def test_c4_decoder_errors():
    """equivariant embeddings misclassify 1/3 of C4 pairs, SymPE none"""
    graph = named_graph("C4")
    assert distance_decoder_best_error(graph, equivariant_embed(graph)) == 1.0 / 3.0
    v = np.array([0.0, 1.0, 3.0, 7.0])
    rng = make_rng(62)
    for _ in range(10):
        assert distance_decoder_best_error(graph, sympe_embed(graph, v, rng)) == 0.0
    with pytest.raises(ValueError):
        sympe_embed(graph, np.zeros(3), rng)
    with pytest.raises(ValueError):
        distance_decoder_best_error(graph, np.zeros((3, 2)))


def test_node_breaking_vector():
    """breaking vectors for S_n have distinct entries"""
    v = node_breaking_vector(7, make_rng(63))
    assert len(np.unique(v.v)) == 7


def test_sympe_embed_equivariant():
    """law of SymPE embeddings of P3 is equivariant at alpha = 0.01"""
    sym_action = make_symmetric(3)
    rng = make_rng(64)
    v = node_breaking_vector(3, rng)

    def sampler(adjacency, rng):
        return sympe_embed(SmallGraph(adjacency), v, rng).T

    report = equicheck.test_distributional_equivariance(
        sampler,
        adjacency_action(sym_action),
        sym_action,
        named_graph("P3").adjacency,
        2000,
        0.01,
        rng,
    )
    assert report.passed


def test_graph_demo():
    """sampled graphs are often automorphic and SymPE dominates"""
    records = graph_demo(7, 0.25, 200, make_rng(65))
    summary = summarize(records)
    assert summary["count"] == 200
    assert summary["automorphic_fraction"] >= 0.3
    assert summary["mean_err_sympe"] == 0.0
    for record in records:
        assert record["err_sympe"] <= record["err_equivariant"]
    assert summarize([])["mean_err_sympe"] is None


def test_graph_demo_reproducible():
    """records depend only on the seed"""
    assert graph_demo(5, 0.5, 10, make_rng(66)) == graph_demo(5, 0.5, 10, make_rng(66))
