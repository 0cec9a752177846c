import numpy as np
import pytest

from storychains.community import (
    ClusterTree,
    hierarchical_cluster,
    map_equation,
    optimize_partition,
    read_tree,
    visit_rates,
)

from .oracles import (
    best_partition,
    clique,
    dense_rates,
    network,
    small_graphs,
    tree_codelength,
    two_level_codelength,
    undirected,
)


def test_visit_rates_examples():
    r = visit_rates(network(["a", "b"], undirected([("a", "b")])))
    assert np.allclose(r.rates, [0.5, 0.5], atol=1e-12)
    r = visit_rates(network(["a", "b", "c"], []))
    assert np.allclose(r.rates, [1 / 3] * 3, atol=1e-12)
    # a dangling sink still gets only its share of the walk
    r = visit_rates(network(["a", "b"], [("a", "b", 1.0)]))
    assert r.rates.sum() == pytest.approx(1.0)
    assert r.rates[1] > r.rates[0]


@pytest.mark.parametrize("name, nodes, edges", small_graphs(seed=1))
def test_visit_rates_match_eigen_solve(name, nodes, edges):
    r = visit_rates(network(nodes, edges))
    p, flows = dense_rates(nodes, edges)
    assert np.allclose(r.rates, [p[v] for v in nodes], atol=1e-9)
    got = {(nodes[s], nodes[d]): f for s, d, f in zip(r.link_src, r.link_dst, r.link_flow)}
    assert got.keys() == flows.keys()
    for k in flows:
        assert got[k] == pytest.approx(flows[k], abs=1e-9)


def test_visit_rates_reject_bad_teleport():
    with pytest.raises(ValueError):
        visit_rates(network(["a"], []), teleport=0.0)


@pytest.mark.parametrize("name, nodes, edges", small_graphs(seed=2)[:12])
def test_map_equation_matches_oracle(name, nodes, edges):
    net = network(nodes, edges)
    rng = np.random.default_rng(len(nodes))
    for _ in range(5):
        labels = rng.integers(0, 3, size=len(nodes))
        part = dict(zip(nodes, labels.tolist()))
        assert map_equation(net, part) == pytest.approx(two_level_codelength(nodes, edges, part), abs=1e-9)


def test_one_module_costs_node_entropy():
    nodes = [f"n{i}" for i in range(5)]
    edges = undirected([("n0", "n1"), ("n1", "n2"), ("n3", "n4")])
    net = network(nodes, edges)
    p = visit_rates(net).rates
    assert map_equation(net, {v: 0 for v in nodes}) == pytest.approx(-(p * np.log2(p)).sum(), abs=1e-12)


def test_edgeless_network_singletons_cost_nothing():
    nodes = ["a", "b", "c", "d"]
    net = network(nodes, [])
    assert map_equation(net, {v: i for i, v in enumerate(nodes)}) == 0.0
    assert map_equation(net, {v: 0 for v in nodes}) == pytest.approx(2.0)
    assert len(set(optimize_partition(net).values())) == 4


def test_two_cliques_beat_one_module():
    a, b = [f"a{i}" for i in range(4)], [f"b{i}" for i in range(4)]
    edges = clique(a) + clique(b) + undirected([("a0", "b0")], 0.05)
    net = network(a + b, edges)
    two = map_equation(net, {v: int(v[0] == "b") for v in a + b})
    one = map_equation(net, {v: 0 for v in a + b})
    assert two < one
    part = optimize_partition(net)
    assert len(set(part.values())) == 2
    assert len({part[v] for v in a}) == 1 and len({part[v] for v in b}) == 1


def test_two_triangles_match_exhaustive():
    a, b = ["a0", "a1", "a2"], ["b0", "b1", "b2"]
    edges = clique(a) + clique(b) + undirected([("a0", "b0")], 0.1)
    length, best = best_partition(a + b, edges)
    part = optimize_partition(network(a + b, edges))
    assert two_level_codelength(a + b, edges, part) == pytest.approx(length, abs=1e-9)


@pytest.mark.parametrize("name, nodes, edges", [g for g in small_graphs(seed=3) if len(g[1]) <= 6])
def test_optimizer_never_worse_than_one_module(name, nodes, edges):
    part = optimize_partition(network(nodes, edges))
    found = two_level_codelength(nodes, edges, part)
    assert found <= two_level_codelength(nodes, edges, {v: 0 for v in nodes}) + 1e-12
    length, _ = best_partition(nodes, edges)
    assert found == pytest.approx(length, abs=1e-9)


def test_labels_are_canonical():
    a, b = [f"a{i}" for i in range(3)], [f"b{i}" for i in range(5)]
    part = optimize_partition(network(a + b, clique(a) + clique(b)))
    assert {part[v] for v in b} == {0}  # larger module first
    assert {part[v] for v in a} == {1}


def two_by_two():
    groups = {k: [f"{k}{i}" for i in range(4)] for k in "ABCD"}
    nodes = [v for g in groups.values() for v in g]
    edges = []
    for g in groups.values():
        edges += clique(g)
    edges += undirected([(u, v) for u in groups["A"] for v in groups["B"]], 0.05)
    edges += undirected([(u, v) for u in groups["C"] for v in groups["D"]], 0.05)
    edges += undirected([("A0", "C0")], 0.01)
    return groups, nodes, edges


def test_two_by_two_hierarchy():
    groups, nodes, edges = two_by_two()
    tree = hierarchical_cluster(network(nodes, edges))
    paths = dict((a, p) for p, a in tree.paths())
    assert sorted({p for p in paths.values()}) == [(1, 1), (1, 2), (2, 1), (2, 2)]
    for g in groups.values():
        assert len({paths[v] for v in g}) == 1
    assert paths["A0"][0] == paths["B0"][0] != paths["C0"][0] == paths["D0"][0]


def test_tree_codelength_matches_oracle():
    groups, nodes, edges = two_by_two()
    tree = hierarchical_cluster(network(nodes, edges))
    paths = {a: p for p, a in tree.paths()}
    assert tree.codelength == pytest.approx(tree_codelength(nodes, edges, paths), abs=1e-9)
    flat = {v: paths[v][:1] for v in nodes}
    assert tree.codelength < tree_codelength(nodes, edges, flat)


def test_facets_nest_inside_one_story():
    # a story with two tight facets, three plain stories weakly tied to it and to each
    # other through their lead articles, and isolated noise
    f1, f2 = [f"f{i}" for i in range(4)], [f"g{i}" for i in range(4)]
    others = [[f"o{k}{i}" for i in range(4)] for k in range(3)]
    noise = [f"n{i}" for i in range(4)]
    nodes = f1 + f2 + [v for o in others for v in o] + noise
    edges = clique(f1) + clique(f2) + [e for o in others for e in clique(o)]
    edges += undirected([(u, v) for u in f1 for v in f2], 0.2)
    heads = ["f0", "g0"] + [o[0] for o in others]
    edges += undirected([(u, v) for i, u in enumerate(heads) for v in heads[i + 1:]], 0.005)

    tree = hierarchical_cluster(network(nodes, edges))
    paths = {a: p for p, a in tree.paths()}
    story = {paths[v][0] for v in f1 + f2}
    assert len(story) == 1
    assert {len(paths[v]) for v in f1 + f2} == {2}
    assert len({paths[v] for v in f1}) == 1 and len({paths[v] for v in f2}) == 1
    assert paths["f0"] != paths["g0"]
    assert all(paths[v][0] not in story for o in others for v in o)
    assert len({paths[v] for v in noise}) == len(noise)
    # same tree without the facet level: the facets merged into one leaf module
    flat = {v: (paths[v][0],) if v in f1 + f2 else paths[v] for v in nodes}
    assert tree.codelength < tree_codelength(nodes, edges, flat)


def test_isolated_nodes_stay_singletons():
    nodes = [f"n{i}" for i in range(7)]
    tree = hierarchical_cluster(network(nodes, []))
    assert tree.depth == 1
    assert sorted(len(m.members()) for m in tree.top_modules) == [1] * 7


@pytest.mark.parametrize("name, nodes, edges", small_graphs(seed=4))
def test_tree_invariants(name, nodes, edges):
    net = network(nodes, edges)
    tree = hierarchical_cluster(net)
    leaves = [a for m in tree.leaf_modules() for a in m.members()]
    assert sorted(leaves) == sorted(nodes)
    p = visit_rates(net).rates
    assert tree.codelength <= -(p * np.log2(p)).sum() + 1e-9
    paths = {a: q for q, a in tree.paths()}
    assert tree.codelength == pytest.approx(tree_codelength(nodes, edges, paths), abs=1e-9)


def test_same_seed_same_tree():
    groups, nodes, edges = two_by_two()
    texts = {hierarchical_cluster(network(nodes, edges), seed=5).to_text() for _ in range(3)}
    assert len(texts) == 1


def test_tree_roundtrip(tmp_path):
    groups, nodes, edges = two_by_two()
    tree = hierarchical_cluster(network(nodes, edges))
    path = tmp_path / "tree.txt"
    tree.write(path)
    again = read_tree(path)
    assert again.to_text() == tree.to_text()
    assert again.clusters("leaf") == tree.clusters("leaf")
    assert isinstance(again, ClusterTree)


def test_read_tree_rejects_garbage(tmp_path):
    path = tmp_path / "tree.txt"
    path.write_text("1:x a1\n")
    with pytest.raises(ValueError, match=":1:"):
        read_tree(path)
