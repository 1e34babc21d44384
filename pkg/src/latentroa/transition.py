"""Outer-approximation transition graph over the valid cells.

The graph F is the combinatorial stand-in for the latent dynamics: nodes are
the valid cells (cells containing encoded data points plus their Moore
neighbors), and an edge c_i -> c_j exists when the union of closed balls of
radius delta around the r-step images of c_i's corners intersects c_j's box.
With delta chosen from a Lipschitz bound of the r-step composed map, every
true transition out of c_i is covered by some edge, which is the property the
downstream Morse/ROA analysis relies on.

Edges whose target cell is not valid are dropped from the graph but tallied
("escaped mass"), so the loss of flow at the boundary of the analysis domain
stays observable. Cells left with no out-edges after the restriction are exit
cells.

Construction is deterministic: cells are processed in flat-id order, targets
are stored sorted, and the optional extra sample points per cell are drawn
from a per-cell seeded stream, so chunking the work across workers cannot
change the result.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .data import TrajectoryDataset
from .dynamics import DynamicsMap, RolloutSpec
from .grid import LatentGrid


@dataclass(frozen=True, eq=False)
class ValidCellSet:
    """Cells the analysis is restricted to, with their provenance.

    ``data_ids`` hold at least one dataset point; ``neighbor_ids`` are Moore
    neighbors of data cells that contain no point themselves. Both arrays are
    sorted flat ids and disjoint.
    """

    grid: LatentGrid
    data_ids: np.ndarray
    neighbor_ids: np.ndarray

    def __post_init__(self) -> None:
        data = np.unique(np.asarray(self.data_ids, dtype=np.int64))
        neigh = np.unique(np.asarray(self.neighbor_ids, dtype=np.int64))
        if np.intersect1d(data, neigh).size:
            raise ValueError("data and neighbor cell sets must be disjoint")
        object.__setattr__(self, "data_ids", data)
        object.__setattr__(self, "neighbor_ids", neigh)

    @property
    def all_ids(self) -> np.ndarray:
        """Sorted flat ids of every valid cell."""
        return np.union1d(self.data_ids, self.neighbor_ids)

    def __len__(self) -> int:
        return self.data_ids.size + self.neighbor_ids.size

    def __contains__(self, flat_id: int) -> bool:
        return bool(
            np.isin(flat_id, self.data_ids) or np.isin(flat_id, self.neighbor_ids)
        )

    def provenance(self, flat_id: int) -> str:
        if np.isin(flat_id, self.data_ids):
            return "data"
        if np.isin(flat_id, self.neighbor_ids):
            return "neighbor"
        raise KeyError(f"cell {flat_id} is not valid")


def valid_cells(dataset: TrajectoryDataset, g: LatentGrid) -> ValidCellSet:
    """Cells containing at least one dataset point, plus their Moore neighbors."""
    if dataset.dim != g.dim:
        raise ValueError(f"dataset dimension {dataset.dim} != grid dimension {g.dim}")
    points = dataset.all_points()
    idx = g.points_to_cells(points)  # (N, d)
    data_idx = np.unique(idx, axis=0)

    offsets = np.array(list(itertools.product((-1, 0, 1), repeat=g.dim)), dtype=np.int64)
    cand = (data_idx[:, np.newaxis, :] + offsets[np.newaxis, :, :]).reshape(-1, g.dim)
    subs = np.asarray(g.subdivisions)
    in_range = np.all((cand >= 0) & (cand < subs), axis=1)
    cand = cand[in_range]

    data_ids = np.unique(np.ravel_multi_index(data_idx.T, g.subdivisions))
    around_ids = np.unique(np.ravel_multi_index(cand.T, g.subdivisions))
    neighbor_ids = np.setdiff1d(around_ids, data_ids)
    return ValidCellSet(grid=g, data_ids=data_ids, neighbor_ids=neighbor_ids)


def all_cells(g: LatentGrid) -> ValidCellSet:
    """Every cell of the grid marked as a data cell (whole-domain analysis)."""
    return ValidCellSet(
        grid=g,
        data_ids=np.arange(g.n_cells, dtype=np.int64),
        neighbor_ids=np.empty(0, dtype=np.int64),
    )


@dataclass(eq=False)
class TransitionGraph:
    """Directed graph F over the valid cells, stored in CSR form.

    ``node_ids`` are the sorted flat cell ids; edges are stored as positions
    into that array (``targets[indptr[i]:indptr[i+1]]`` are the successors of
    node i, sorted). ``meta`` carries the build parameters and provenance
    digests so cached graphs can be validated before reuse.
    """

    grid: LatentGrid
    node_ids: np.ndarray  # (n,) sorted flat ids
    data_mask: np.ndarray  # (n,) True where the cell is a data cell
    indptr: np.ndarray  # (n + 1,)
    targets: np.ndarray  # (n_edges,) positions into node_ids
    escaped_targets: int
    total_targets: int
    meta: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return int(self.node_ids.size)

    @property
    def n_edges(self) -> int:
        return int(self.targets.size)

    @property
    def out_degrees(self) -> np.ndarray:
        return np.diff(self.indptr)

    @property
    def exit_cell_count(self) -> int:
        """Cells whose entire image escaped the valid set (no out-edges)."""
        return int(np.sum(self.out_degrees == 0))

    @property
    def escaped_mass(self) -> float:
        """Fraction of computed targets that fell outside the valid set."""
        if self.total_targets == 0:
            return 0.0
        return self.escaped_targets / self.total_targets

    def successors(self, pos: int) -> np.ndarray:
        return self.targets[self.indptr[pos] : self.indptr[pos + 1]]

    def pos_of_flat(self, flat_id: int) -> int:
        pos = int(np.searchsorted(self.node_ids, flat_id))
        if pos >= self.n_nodes or self.node_ids[pos] != flat_id:
            raise KeyError(f"cell {flat_id} is not a node of the graph")
        return pos

    def successors_of_flat(self, flat_id: int) -> np.ndarray:
        """Successor flat ids of a cell given by flat id."""
        return self.node_ids[self.successors(self.pos_of_flat(flat_id))]

    def reverse_csr(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, sources) of the reversed graph, sources sorted per node."""
        n = self.n_nodes
        counts = np.bincount(self.targets, minlength=n)
        rindptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(counts, out=rindptr[1:])
        rsources = np.empty(self.n_edges, dtype=np.int64)
        cursor = rindptr[:-1].copy()
        src = np.repeat(np.arange(n), self.out_degrees)
        for s, t in zip(src, self.targets):
            rsources[cursor[t]] = s
            cursor[t] += 1
        return rindptr, rsources


@dataclass(frozen=True)
class GraphStats:
    node_count: int
    edge_count: int
    exit_cell_count: int
    max_out_degree: int
    escaped_mass_fraction: float

    def to_dict(self) -> dict:
        return {
            "node_count": self.node_count,
            "edge_count": self.edge_count,
            "exit_cell_count": self.exit_cell_count,
            "max_out_degree": self.max_out_degree,
            "escaped_mass_fraction": self.escaped_mass_fraction,
        }


def graph_stats(graph: TransitionGraph) -> GraphStats:
    """Summary counts of a built transition graph."""
    degrees = graph.out_degrees
    return GraphStats(
        node_count=graph.n_nodes,
        edge_count=graph.n_edges,
        exit_cell_count=graph.exit_cell_count,
        max_out_degree=int(degrees.max()) if degrees.size else 0,
        escaped_mass_fraction=graph.escaped_mass,
    )


def _cell_rows(
    m: DynamicsMap,
    g: LatentGrid,
    node_ids: np.ndarray,
    chunk: np.ndarray,
    steps: RolloutSpec,
    delta: float,
    extra_samples: int,
    seed: int,
) -> tuple[list[np.ndarray], int, int]:
    """Successor rows for one contiguous chunk of cells (positions into node_ids)."""
    flats = node_ids[chunk]
    corners = g.corners_of_flat_ids(flats)  # (m, 2^d, d)
    n_pts = corners.shape[1]
    images = m.rollout_batch(corners.reshape(-1, g.dim), steps).reshape(
        len(flats), n_pts, g.dim
    )

    rows: list[np.ndarray] = []
    escaped = 0
    total = 0
    for i, flat in enumerate(flats):
        pts = images[i]
        if extra_samples:
            rng = np.random.default_rng([seed, int(flat)])
            box = g.cell_box(g.cell_of_flat(int(flat)))
            inner = rng.uniform(box.lo, box.hi, size=(extra_samples, g.dim))
            pts = np.concatenate([pts, m.rollout_batch(inner, steps)], axis=0)
        hit: np.ndarray = np.unique(
            np.concatenate([g.ball_flat_ids(p, delta) for p in pts])
        )
        # membership: a hit is kept when node_ids[pos] matches it
        pos_all = np.searchsorted(node_ids, hit)
        valid = pos_all < node_ids.size
        valid[valid] &= node_ids[pos_all[valid]] == hit[valid]
        kept = pos_all[valid].astype(np.int64)
        total += hit.size
        escaped += hit.size - kept.size
        rows.append(kept)
    return rows, escaped, total


def build_transition_graph(
    m: DynamicsMap,
    cells: ValidCellSet,
    g: LatentGrid,
    spec: RolloutSpec | int,
    delta: float,
    extra_samples_per_cell: int = 0,
    seed: int = 0,
    workers: int = 1,
    meta: dict | None = None,
) -> TransitionGraph:
    """Build F: corner rollout, delta-ball targets, restriction to valid cells.

    The optional ``extra_samples_per_cell`` adds seeded interior sample points
    per cell; extra points can only add edges, so the outer-approximation
    direction is preserved.
    """
    if delta < 0:
        raise ValueError("delta must be non-negative")
    if m.dim != g.dim:
        raise ValueError(f"dynamics dimension {m.dim} != grid dimension {g.dim}")
    steps = spec if isinstance(spec, RolloutSpec) else RolloutSpec(spec)
    node_ids = cells.all_ids
    n = node_ids.size
    if n == 0:
        raise ValueError("no valid cells")

    chunk_size = max(1, min(4096, (n + max(workers, 1) - 1) // max(workers, 1)))
    chunks = [np.arange(s, min(s + chunk_size, n)) for s in range(0, n, chunk_size)]

    def job(chunk: np.ndarray) -> tuple[list[np.ndarray], int, int]:
        return _cell_rows(
            m, g, node_ids, chunk, steps, delta, extra_samples_per_cell, seed
        )

    if workers > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, chunks))
    else:
        results = [job(c) for c in chunks]

    rows: list[np.ndarray] = []
    escaped = 0
    total = 0
    for chunk_rows_, chunk_escaped, chunk_total in results:
        rows.extend(chunk_rows_)
        escaped += chunk_escaped
        total += chunk_total

    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum([row.size for row in rows], out=indptr[1:])
    targets = (
        np.concatenate(rows) if rows and indptr[-1] > 0 else np.empty(0, dtype=np.int64)
    )

    data_mask = np.isin(node_ids, cells.data_ids)
    build_meta = dict(meta or {})
    build_meta.update(
        {
            "rollout_steps": steps.steps,
            "delta": float(delta),
            "subdivisions": list(g.subdivisions),
            "extra_samples_per_cell": int(extra_samples_per_cell),
            "seed": int(seed),
        }
    )
    return TransitionGraph(
        grid=g,
        node_ids=node_ids,
        data_mask=data_mask,
        indptr=indptr,
        targets=targets.astype(np.int64),
        escaped_targets=escaped,
        total_targets=total,
        meta=build_meta,
    )
