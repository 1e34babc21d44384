"""Transition graph: valid cells, outer-approximation edges, stats, determinism."""

import numpy as np
import pytest

from latentroa import (
    DynamicsNet,
    LatentGrid,
    Layer,
    NetworkDynamics,
    Trajectory,
    TrajectoryDataset,
    ValidCellSet,
    all_cells,
    build_transition_graph,
    graph_stats,
    make_analytic,
    valid_cells,
)
from latentroa import io as lio


def dataset_from_points(points, dim, label=1):
    pts = np.asarray(points, dtype=float).reshape(-1, dim)
    # a dataset needs >= 2 points per trajectory; duplicate each point
    trajs = tuple(
        Trajectory(id=f"t{i}", label=label, points=np.stack([p, p]))
        for i, p in enumerate(pts)
    )
    return TrajectoryDataset(dim=dim, split="train", trajectories=trajs)


def identity_dynamics(d):
    return NetworkDynamics(
        DynamicsNet(
            input_dim=d,
            layers=(Layer(weights=np.eye(d), bias=np.zeros(d), activation="identity"),),
        )
    )


def edge_set(graph):
    return {
        (int(graph.node_ids[s]), int(graph.node_ids[t]))
        for s in range(graph.n_nodes)
        for t in graph.successors(s)
    }


# ----------------------------------------------------------------------
# valid cells
# ----------------------------------------------------------------------


def test_valid_cells_single_interior_point():
    g = LatentGrid((4, 4))
    ds = dataset_from_points([[0.1, 0.1]], 2)
    cells = valid_cells(ds, g)
    assert cells.data_ids.size == 1
    assert cells.neighbor_ids.size == 8  # interior cell: full Moore ring
    data_cell = g.cell_of_flat(int(cells.data_ids[0]))
    assert data_cell == (2, 2)
    neigh = {g.cell_of_flat(int(i)) for i in cells.neighbor_ids}
    assert neigh == g.neighbors(data_cell)


def test_valid_cells_cover_everything():
    g = LatentGrid((3, 3))
    centers = [g.cell_center(g.cell_of_flat(i)) for i in range(g.n_cells)]
    cells = valid_cells(dataset_from_points(centers, 2), g)
    assert len(cells) == g.n_cells
    assert cells.neighbor_ids.size == 0


def test_valid_cells_two_distant_points():
    # enumerated by hand: (-0.7, -0.7) sits in cell (1, 1) of the 8x8 grid,
    # (0.6, 0.6) in cell (6, 6); their 3x3 patches do not overlap
    g = LatentGrid((8, 8))
    cells = valid_cells(dataset_from_points([[-0.7, -0.7], [0.6, 0.6]], 2), g)
    data = {g.cell_of_flat(int(i)) for i in cells.data_ids}
    assert data == {(1, 1), (6, 6)}
    expected_patches = {
        (i, j) for ci, cj in [(1, 1), (6, 6)] for i in range(ci - 1, ci + 2) for j in range(cj - 1, cj + 2)
    }
    got = data | {g.cell_of_flat(int(i)) for i in cells.neighbor_ids}
    assert got == expected_patches
    assert len(got) == 18


def test_valid_cells_rejects_empty_dataset():
    with pytest.raises(ValueError):
        TrajectoryDataset(dim=2, split="train", trajectories=())


def test_valid_cell_set_provenance():
    g = LatentGrid((4, 4))
    cells = valid_cells(dataset_from_points([[0.1, 0.1]], 2), g)
    data_flat = int(cells.data_ids[0])
    assert cells.provenance(data_flat) == "data"
    assert cells.provenance(int(cells.neighbor_ids[0])) == "neighbor"
    assert data_flat in cells
    with pytest.raises(KeyError):
        cells.provenance(0)
    with pytest.raises(ValueError):
        ValidCellSet(grid=g, data_ids=np.array([3]), neighbor_ids=np.array([3]))


# ----------------------------------------------------------------------
# graph construction
# ----------------------------------------------------------------------


def test_identity_map_delta_zero_self_edges():
    g = LatentGrid((4, 4))
    graph = build_transition_graph(identity_dynamics(2), all_cells(g), g, 1, delta=0.0)
    edges = edge_set(graph)
    for flat in range(g.n_cells):
        assert (flat, flat) in edges
        # corners sit on shared boundaries, so boundary-sharing cells appear too
        for t in graph.successors_of_flat(flat):
            cell = g.cell_of_flat(flat)
            other = g.cell_of_flat(int(t))
            assert other == cell or other in g.neighbors(cell)


def test_huge_delta_gives_complete_graph():
    g = LatentGrid((4, 4))
    m = make_analytic("contraction", 2)
    graph = build_transition_graph(m, all_cells(g), g, 1, delta=3.0)
    assert graph.n_edges == g.n_cells**2


def test_contraction_1d_derived_adjacency():
    g = LatentGrid((4,))
    m = make_analytic("contraction", 1)
    delta = 0.125
    graph = build_transition_graph(m, all_cells(g), g, 1, delta=delta)
    edges = edge_set(graph)

    rng = np.random.default_rng(0)
    for flat in range(4):
        got = {t for s, t in edges if s == flat}

        # sampling oracle: 10^4 points per cell through the map; each image's
        # cell must appear among the successors
        box = g.cell_box((flat,))
        pts = rng.uniform(box.lo[0], box.hi[0], size=(10_000, 1))
        sampled = {int(c[0]) for c in g.points_to_cells(0.5 * pts)}
        assert sampled <= got

        # exact expected adjacency: dense 1e-4 sweep over the delta-balls of
        # the two corner images (independent of the ball-query implementation)
        expected = set()
        for corner in (box.lo[0], box.hi[0]):
            img = 0.5 * corner
            ys = np.clip(np.arange(img - delta, img + delta + 1e-12, 1e-4), -1.0, 1.0)
            ys = np.append(ys, np.clip([img - delta, img + delta], -1.0, 1.0))
            expected |= {int(c[0]) for c in g.points_to_cells(ys.reshape(-1, 1))}
        assert got == expected

        # every cell flows into a cell flanking the origin
        assert got & {1, 2}

    # the two central cells edge into each other's neighborhood of 0
    assert {t for s, t in edges if s == 1} >= {1, 2}
    assert {t for s, t in edges if s == 2} >= {1, 2}


def test_escaped_mass_and_exit_cells():
    # a single valid cell far from the origin: the contraction image leaves
    # the valid set entirely, so the cell has no out-edges and all targets
    # count as escaped
    g = LatentGrid((8, 8))
    m = make_analytic("contraction", 2)
    cells = ValidCellSet(
        grid=g, data_ids=np.array([g.flat_id((7, 7))]), neighbor_ids=np.array([], dtype=int)
    )
    graph = build_transition_graph(m, cells, g, 1, delta=0.05)
    stats = graph_stats(graph)
    assert stats.edge_count == 0
    assert stats.exit_cell_count == 1
    assert stats.escaped_mass_fraction == 1.0
    assert stats.max_out_degree == 0


def test_graph_stats_complete_graph():
    g = LatentGrid((3, 3))
    m = make_analytic("contraction", 2)
    graph = build_transition_graph(m, all_cells(g), g, 1, delta=5.0)
    stats = graph_stats(graph)
    assert stats.node_count == 9
    assert stats.edge_count == 81
    assert stats.max_out_degree == 9
    assert stats.exit_cell_count == 0

    # independent recount via adjacency scan
    recount = sum(graph.successors(pos).size for pos in range(graph.n_nodes))
    assert recount == stats.edge_count


def test_soundness_small_scale():
    # exact Lipschitz constant, safety 1: every sampled point's image cell
    # must be among its cell's successors
    g = LatentGrid((8, 8))
    m = make_analytic("contraction", 2)
    rng = np.random.default_rng(1)
    for r in (1, 3):
        delta = (0.5**r) * g.half_diagonal
        graph = build_transition_graph(m, all_cells(g), g, r, delta=delta)
        for flat in range(g.n_cells):
            box = g.cell_box(g.cell_of_flat(flat))
            pts = rng.uniform(box.lo, box.hi, size=(200, 2))
            img = m.rollout_batch(pts, r)
            succ = set(int(t) for t in graph.successors_of_flat(flat))
            flats = np.ravel_multi_index(g.points_to_cells(img).T, g.subdivisions)
            assert set(int(f) for f in flats) <= succ


def test_delta_monotonicity():
    g = LatentGrid((16,))
    m = make_analytic("bistable_1d")
    small = build_transition_graph(m, all_cells(g), g, 3, delta=0.05)
    large = build_transition_graph(m, all_cells(g), g, 3, delta=0.15)
    assert edge_set(small) <= edge_set(large)


def test_extra_samples_only_add_edges():
    g = LatentGrid((8, 8))
    m = make_analytic("bistable_2d")
    base = build_transition_graph(m, all_cells(g), g, 2, delta=0.05)
    extra = build_transition_graph(
        m, all_cells(g), g, 2, delta=0.05, extra_samples_per_cell=16, seed=4
    )
    assert edge_set(base) <= edge_set(extra)


def test_determinism_and_worker_independence(tmp_path):
    g = LatentGrid((16, 16))
    m = make_analytic("bistable_2d")
    ds = dataset_from_points(np.random.default_rng(2).uniform(-1, 1, (60, 2)), 2)
    cells = valid_cells(ds, g)
    a = build_transition_graph(m, cells, g, 4, delta=0.07, workers=1)
    b = build_transition_graph(m, cells, g, 4, delta=0.07, workers=4)
    assert np.array_equal(a.node_ids, b.node_ids)
    assert np.array_equal(a.indptr, b.indptr)
    assert np.array_equal(a.targets, b.targets)

    pa, pb = tmp_path / "a.json", tmp_path / "b.json"
    lio.save_graph(a, str(pa))
    lio.save_graph(b, str(pb))
    assert pa.read_bytes() == pb.read_bytes()


def test_every_data_cell_in_nodes_and_edges_stay_inside():
    g = LatentGrid((12, 12))
    m = make_analytic("bistable_2d")
    ds = dataset_from_points(np.random.default_rng(3).uniform(-1, 1, (40, 2)), 2)
    cells = valid_cells(ds, g)
    graph = build_transition_graph(m, cells, g, 2, delta=0.1)
    node_set = set(int(i) for i in graph.node_ids)
    assert set(int(i) for i in cells.data_ids) <= node_set
    for s, t in edge_set(graph):
        assert s in node_set and t in node_set


def test_build_validation():
    g = LatentGrid((4,))
    m = make_analytic("bistable_1d")
    with pytest.raises(ValueError):
        build_transition_graph(m, all_cells(g), g, 1, delta=-0.1)
    g2 = LatentGrid((4, 4))
    with pytest.raises(ValueError):
        build_transition_graph(m, all_cells(g2), g2, 1, delta=0.1)
