import json
import math

import numpy as np
import pytest

from routerisk.graph import (
    DeltaEstimate,
    EmptyGraphError,
    FailureEvent,
    GraphSnapshot,
    InvalidRouteError,
    Route,
    bfs_shells,
    cycle_rank_norm,
    gromov_delta,
    reciprocal_ratio,
    route_subgraph,
    shell_growth_slope,
    triangle_density,
)

from .helpers import (
    binary_tree,
    gromov_delta_oracle,
    ols_slope_oracle,
    random_digraph,
    random_tree_edges,
    relabel,
    snap,
)


# construction invariants ----------------------------------------------------

def test_snapshot_rejects_self_loops():
    with pytest.raises(ValueError):
        snap([(0, 0)])


def test_snapshot_rejects_duplicate_edges():
    with pytest.raises(ValueError):
        GraphSnapshot(timestamp=0.0, nodes=(0, 1), edges=((0, 1), (0, 1)))


def test_snapshot_rejects_undeclared_endpoint():
    with pytest.raises(ValueError):
        GraphSnapshot(timestamp=0.0, nodes=(0,), edges=((0, 1),))


def test_snapshot_rejects_out_of_range_values():
    with pytest.raises(ValueError):
        snap([(0, 1)], loads={0: 1.5})
    with pytest.raises(ValueError):
        snap([(0, 1)], reliability={(0, 1): -0.1})


def test_event_validation():
    with pytest.raises(ValueError):
        FailureEvent(time=1.0, node=0, severity=1.2)
    with pytest.raises(ValueError):
        FailureEvent(time=-1.0, node=0, severity=0.5)
    with pytest.raises(ValueError):
        FailureEvent(time=math.inf, node=0, severity=0.5)


def test_route_validation():
    with pytest.raises(ValueError):
        Route(())
    with pytest.raises(ValueError):
        Route((1, 2, 1))


# bfs_shells -----------------------------------------------------------------

def test_shells_binary_tree_depth2():
    assert bfs_shells(binary_tree(2)).shell_sizes == (1, 2, 4)
    assert bfs_shells(binary_tree(2)).fallback_count == 0


def test_shells_with_unreachable_cycle():
    # r -> x plus the 2-cycle c1 <-> c2: hand BFS gives [1, 1] reached, the
    # cycle lands in the fallback layer at depth 2.
    g = snap([(0, 1), (2, 3), (3, 2)])
    p = bfs_shells(g)
    assert p.shell_sizes == (1, 1, 2)
    assert p.fallback_count == 2


def test_shells_single_node():
    g = snap([], n=1)
    assert bfs_shells(g).shell_sizes == (1,)


def test_shells_rootless_falls_back_to_smallest_id():
    g = snap([(0, 1), (1, 2), (2, 0)])  # directed 3-cycle, no in-degree-0 node
    p = bfs_shells(g)
    assert p.shell_sizes == (1, 1, 1)
    assert p.fallback_count == 0


def test_shells_empty_graph_raises():
    with pytest.raises(EmptyGraphError):
        bfs_shells(GraphSnapshot(timestamp=0.0, nodes=(), edges=()))


def test_shells_sum_matches_node_count_fuzz():
    rng = np.random.default_rng(7)
    for _ in range(200):
        g = random_digraph(rng, int(rng.integers(1, 25)), p=float(rng.uniform(0, 0.4)))
        p = bfs_shells(g)
        assert sum(p.shell_sizes) == g.n_nodes


# shell_growth_slope ---------------------------------------------------------

def test_slope_powers_of_two():
    gamma, phi7 = shell_growth_slope(bfs_shells(binary_tree(3)))
    # independent least-squares oracle on ln(2), ln(3), ln(5), ln(9)
    expected = ols_slope_oracle([0, 1, 2, 3], np.log([2, 3, 5, 9]))
    assert gamma == pytest.approx(expected, abs=1e-12)
    assert gamma == pytest.approx(0.502, abs=1e-3)
    assert phi7 == pytest.approx(math.tanh(expected), abs=1e-12)
    assert phi7 == pytest.approx(0.464, abs=1e-3)


def test_slope_constant_shells_is_zero():
    from routerisk.graph import ShellProfile

    gamma, phi7 = shell_growth_slope(ShellProfile((1, 1, 1)))
    assert gamma == 0.0
    assert phi7 == 0.0


def test_slope_decreasing_clamps_phi7():
    from routerisk.graph import ShellProfile

    gamma, phi7 = shell_growth_slope(ShellProfile((4, 2, 1)))
    assert gamma < 0
    assert phi7 == 0.0


def test_slope_single_shell_is_zero():
    from routerisk.graph import ShellProfile

    assert shell_growth_slope(ShellProfile((5,))) == (0.0, 0.0)


def test_slope_invariant_under_proportional_scaling():
    # scaling all |V_k|+1 by a constant shifts the intercept only
    from routerisk.graph import ShellProfile

    rng = np.random.default_rng(3)
    for _ in range(50):
        sizes = tuple(int(s) for s in rng.integers(1, 40, size=rng.integers(2, 8)))
        gamma, _ = shell_growth_slope(ShellProfile(sizes))
        scaled = tuple(7 * (s + 1) - 1 for s in sizes)  # (|V_k|+1) -> 7(|V_k|+1)
        gamma_scaled, _ = shell_growth_slope(ShellProfile(scaled))
        assert abs(gamma_scaled - gamma) < 1e-9


# cycle_rank_norm ------------------------------------------------------------

def test_cycle_rank_tree_is_zero():
    rng = np.random.default_rng(11)
    for n in (2, 5, 17, 40):
        g = snap(random_tree_edges(rng, n))
        assert cycle_rank_norm(g) == 0.0


def test_cycle_rank_directed_triangle():
    g = snap([(0, 1), (1, 2), (2, 0)])
    assert cycle_rank_norm(g) == pytest.approx(1 / 3)


def test_cycle_rank_two_disjoint_triangles():
    g = snap([(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)])
    assert cycle_rank_norm(g) == pytest.approx(1 / 3)


def test_cycle_rank_zero_iff_forest_fuzz():
    rng = np.random.default_rng(13)
    for _ in range(100):
        g = random_digraph(rng, int(rng.integers(2, 15)), p=float(rng.uniform(0, 0.3)))
        und = {frozenset(e) for e in g.edges}
        comps = len(_components_oracle(g))
        is_forest = len(und) == g.n_nodes - comps
        assert (cycle_rank_norm(g) == 0.0) == is_forest


def _components_oracle(g):
    from .helpers import undirected_distances_oracle

    dist = undirected_distances_oracle(g)
    comps = []
    seen = set()
    for v in g.nodes:
        if v in seen:
            continue
        comp = set(dist[v])
        seen |= comp
        comps.append(comp)
    return comps


# triangle_density -----------------------------------------------------------

def test_triangle_density_triangle():
    assert triangle_density(snap([(0, 1), (1, 2), (2, 0)])) == 1.0


def test_triangle_density_star():
    assert triangle_density(snap([(0, 1), (0, 2), (0, 3)])) == 0.0


def test_triangle_density_triangle_with_pendant():
    # triangle a,b,c plus pendant c-d: 5 connected triplets, 3 closed
    g = snap([(0, 1), (1, 2), (2, 0), (2, 3)])
    assert triangle_density(g) == pytest.approx(0.6)


# reciprocal_ratio -----------------------------------------------------------

def test_reciprocal_all_paired():
    g = snap([(0, 1), (1, 0), (1, 2), (2, 1)])
    assert reciprocal_ratio(g) == 1.0


def test_reciprocal_dag_is_zero():
    assert reciprocal_ratio(binary_tree(3)) == 0.0


def test_reciprocal_two_of_three():
    g = snap([(0, 1), (1, 0), (0, 2)])
    assert reciprocal_ratio(g) == pytest.approx(2 / 3)


# route_subgraph -------------------------------------------------------------

def test_route_subgraph_full_route_identity():
    rng = np.random.default_rng(5)
    g = random_digraph(rng, 8, 0.3)
    sub = route_subgraph(g, Route(tuple(g.nodes)))
    assert sub == g


def test_route_subgraph_single_node():
    g = snap([(0, 1), (1, 2)])
    sub = route_subgraph(g, Route((1,)))
    assert sub.nodes == (1,)
    assert sub.edges == ()


def test_route_subgraph_chain_with_crosslink():
    g = snap([(0, 1), (1, 2), (0, 2), (2, 3)])
    sub = route_subgraph(g, Route((0, 1, 2)))
    assert sub.nodes == (0, 1, 2)
    assert set(sub.edges) == {(0, 1), (1, 2), (0, 2)}


def test_route_subgraph_missing_node():
    g = snap([(0, 1)])
    with pytest.raises(InvalidRouteError):
        route_subgraph(g, Route((0, 7)))


def test_route_subgraph_carries_values():
    g = snap([(0, 1)], loads={0: 0.5, 1: 0.25}, reliability={(0, 1): 0.9})
    sub = route_subgraph(g, Route((0, 1)))
    assert sub.edge_reliability[(0, 1)] == 0.9
    assert sub.node_load[0] == 0.5
    assert sub.timestamp == g.timestamp


# gromov_delta ---------------------------------------------------------------

def test_delta_trees_are_zero():
    rng = np.random.default_rng(23)
    for n in (4, 8, 16):
        g = snap(random_tree_edges(rng, n))
        est = gromov_delta(g)
        assert est.value == 0.0


def test_delta_k4_brute_force():
    g = snap([(u, v) for u in range(4) for v in range(4) if u < v])
    est = gromov_delta(g)
    assert est.exact and est.value == 0.0


def test_delta_c6_brute_force():
    g = snap([(i, (i + 1) % 6) for i in range(6)])
    est = gromov_delta(g)
    assert est.exact
    assert est.value == 1.0
    assert est.value == gromov_delta_oracle(g)


def test_delta_degenerate_small_graph():
    est = gromov_delta(snap([(0, 1), (1, 2)]))
    assert est.degenerate and est.value == 0.0


def test_delta_disconnected_flagged():
    g = snap([(0, 1), (1, 2), (2, 3), (4, 5)])
    est = gromov_delta(g)
    assert not est.connected
    assert est.value == gromov_delta_oracle(g)


def test_delta_sampled_never_exceeds_exhaustive():
    rng = np.random.default_rng(31)
    for _ in range(20):
        g = random_digraph(rng, 12, 0.25)
        exact = gromov_delta(g, samples=10**9).value
        sampled = gromov_delta(g, samples=60, seed=int(rng.integers(1000))).value
        assert sampled <= exact + 1e-12


def test_delta_matches_oracle_on_random_graphs():
    rng = np.random.default_rng(37)
    for _ in range(15):
        g = random_digraph(rng, int(rng.integers(4, 10)), 0.35)
        assert gromov_delta(g, samples=10**9).value == gromov_delta_oracle(g)


# relabeling invariance ------------------------------------------------------

def test_topology_invariant_under_relabeling():
    rng = np.random.default_rng(41)
    for _ in range(30):
        n = int(rng.integers(3, 14))
        g = random_digraph(rng, n, 0.3)
        perm_values = rng.permutation(100)[:n]
        perm = {v: int(perm_values[i]) for i, v in enumerate(g.nodes)}
        h = relabel(g, perm)
        assert cycle_rank_norm(g) == pytest.approx(cycle_rank_norm(h))
        assert triangle_density(g) == pytest.approx(triangle_density(h))
        assert reciprocal_ratio(g) == pytest.approx(reciprocal_ratio(h))
        assert gromov_delta(g, samples=10**9).value == pytest.approx(
            gromov_delta(h, samples=10**9).value
        )
        # shell sizes are label-free whenever real roots exist; the rootless
        # fallback is pinned to the smallest id and so depends on labels
        if any(d == 0 for d in g.in_degree().values()):
            assert bfs_shells(g).shell_sizes == bfs_shells(h).shell_sizes


# serialization --------------------------------------------------------------

def test_snapshot_json_round_trip():
    g = snap(
        [(0, 1), (1, 2)],
        loads={0: 0.25, 1: 0.5, 2: 0.75},
        fitness={0: 0.9, 1: 0.8, 2: 0.7},
        reliability={(0, 1): 0.95, (1, 2): 0.85},
        timestamp=12.5,
    )
    data = json.loads(json.dumps(g.to_dict()))
    assert GraphSnapshot.from_dict(data) == g


def test_snapshot_reader_ignores_unknown_fields():
    g = snap([(0, 1)])
    data = g.to_dict()
    data["extra"] = "ignored"
    data["nodes"][0]["weird"] = 42
    assert GraphSnapshot.from_dict(data) == g


def test_content_hash_stable_and_sensitive():
    g1 = snap([(0, 1)], loads={0: 0.5})
    g2 = snap([(0, 1)], loads={0: 0.5})
    g3 = snap([(0, 1)], loads={0: 0.6})
    assert g1.content_hash() == g2.content_hash()
    assert g1.content_hash() != g3.content_hash()
