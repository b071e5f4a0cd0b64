import re

import numpy as np
import pytest

from conftest import prototype_stream, random_sdrs
from fpengine.cluster import Cluster, ClusterPolicy, Trace, cluster_archetype, cluster_projection
from fpengine.errors import ArgumentError, DimensionError, NoMatchError
from oracles import ReferenceCluster

SPAWN = ClusterPolicy(theta_seed=0.6, theta_step=0.2, theta_max=1.0, spawn_count=2, max_depth=4)


def test_first_input():
    c = Cluster(4)
    x = np.array([1, 0, 1, 0], dtype=float)
    t = c.process(x)
    assert len(t) == 1 and t.path[0][1].created
    assert np.array_equal(cluster_projection(t), x)
    assert np.array_equal(cluster_archetype(t), x)


def test_spawn_example():
    c = Cluster(4, SPAWN)
    x = np.array([1, 1, 0, 0], dtype=float)
    c.process(x)
    t = c.process(x)
    assert t.spawned == 1
    assert c.child_of(0, 0) == 1 and len(c.cells[1]) == 0
    assert c.cells[1].theta == pytest.approx(0.8)
    t = c.process(x)
    assert [cell for cell, _ in t.path] == [0, 1]
    assert t.path[1][1].created
    assert np.array_equal(t.projection, c.cells[1].values[0])
    c.check_invariants()


def test_query_into_empty_child_stops_at_parent():
    c = Cluster(4, SPAWN)
    x = np.array([1, 1, 0, 0], dtype=float)
    c.process(x)
    c.process(x)
    t = c.query(x)
    assert len(t) == 1


def test_empty_cluster_query():
    t = Cluster(3).query([1, 0, 0])
    assert not t.is_match
    with pytest.raises(NoMatchError):
        t.projection
    with pytest.raises(NoMatchError):
        Trace().archetype


def test_dimension_error():
    with pytest.raises(DimensionError):
        Cluster(3).process([1, 0])


def test_policy_validation():
    with pytest.raises(ArgumentError):
        ClusterPolicy(theta_seed=0.9, theta_max=0.5)
    with pytest.raises(ArgumentError):
        ClusterPolicy(spawn_count=0)
    assert ClusterPolicy(theta_seed=0.9, theta_step=0.2).child_theta(0.9) == 1.0


@pytest.mark.parametrize("seed,policy", [
    (0, (0.3, 0.15, 1.0, 5, 4)),
    (1, (0.5, 0.1, 0.9, 3, 3)),
    (2, (0.4, 0.2, 1.0, 8, 6)),
])
def test_matches_reference_simulator(seed, policy):
    rng = np.random.default_rng(seed)
    stream = prototype_stream(rng, 300, d=24, prototypes=5, flip=0.1)
    ref = ReferenceCluster(*policy)
    c = Cluster(24, ClusterPolicy(*policy))
    for x in stream:
        expected = ref.learn(x)
        t = c.process(x)
        assert [(cell, out.footprint_id) for cell, out in t.path] == expected
    assert len(c.cells) == len(ref.cells) > 1
    for i, (cell, rcell) in enumerate(zip(c.cells, ref.cells)):
        assert cell.counts.tolist() == rcell["counts"]
        assert cell.theta == pytest.approx(float(rcell["theta"]), abs=1e-12)
        if rcell["counts"]:
            np.testing.assert_allclose(cell.values, ref.means(i), atol=1e-12, rtol=0)
    c.check_invariants()


def test_theta_strictly_increases_and_depth_bounded():
    pol = ClusterPolicy(0.3, 0.2, 0.8, 4, 3)
    c = Cluster(16, pol)
    for x in random_sdrs(np.random.default_rng(4), 400, 16):
        c.process(x)
    c.check_invariants()
    assert c.tree_depth() <= 3
    assert max(cell.theta for cell in c.cells) <= 0.8 + 1e-12


def test_only_one_branch_changes():
    c = Cluster(16, ClusterPolicy(0.3, 0.2, 1.0, 3, 5))
    rng = np.random.default_rng(8)
    for x in random_sdrs(rng, 200, 16):
        c.process(x)
    for x in random_sdrs(rng, 100, 16):
        before = c.cell_hashes()
        t = c.process(x)
        after = c.cell_hashes()
        on_path = {cell for cell, _ in t.path}
        for i, h in enumerate(before):
            if i not in on_path:
                assert after[i] == h


def test_query_purity_and_determinism():
    stream = random_sdrs(np.random.default_rng(3), 200, 16)
    a, b = Cluster(16, SPAWN), Cluster(16, SPAWN)
    for x in stream:
        a.process(x)
        b.process(x)
    assert a.state_hash() == b.state_hash()
    h = a.state_hash()
    for x in stream[:50]:
        a.query(x)
        a.query(x, mask=np.arange(16) < 8)
    assert a.state_hash() == h


def test_export_dot_empty():
    assert Cluster(2).export_dot() == (
        'digraph cluster {\n'
        '  c0 [label="cell 0\\ntheta=0.5\\nfootprints=0"];\n'
        '}\n')


def test_export_dot_spawn_fixture():
    c = Cluster(4, SPAWN)
    for _ in range(3):
        c.process([1, 1, 0, 0])
    expected = (
        'digraph cluster {\n'
        '  c0 [label="cell 0\\ntheta=0.6\\nfootprints=1"];\n'
        '  c1 [label="cell 1\\ntheta=0.8\\nfootprints=1"];\n'
        '  c0 -> c1 [label="fp 0"];\n'
        '}\n')
    assert c.export_dot() == expected


def test_export_dot_parses():
    pydot = pytest.importorskip("pydot")
    c = Cluster(16, ClusterPolicy(0.3, 0.2, 1.0, 3, 4))
    for x in random_sdrs(np.random.default_rng(2), 200, 16):
        c.process(x)
    (graph,) = pydot.graph_from_dot_data(c.export_dot())
    assert len(graph.get_nodes()) == len(c.cells)
    assert len(graph.get_edges()) == len(c.cells) - 1
    for e in graph.get_edges():
        child = int(e.get_destination()[1:])
        fid = int(re.search(r"fp (\d+)", e.get("label")).group(1))
        assert c.parents[child] == (int(e.get_source()[1:]), fid)
