"""Shared test utilities: hand-built graphs and brute-force oracles."""

import numpy as np

from latentroa import LatentGrid, TransitionGraph


def graph_from_adjacency(adj: dict[int, list[int]], n: int) -> TransitionGraph:
    """A TransitionGraph over n abstract nodes (cells of a 1-d grid)."""
    indptr = np.zeros(n + 1, dtype=np.int64)
    rows = []
    for v in range(n):
        targets = np.asarray(sorted(adj.get(v, [])), dtype=np.int64)
        rows.append(targets)
        indptr[v + 1] = indptr[v] + targets.size
    return TransitionGraph(
        grid=LatentGrid((max(n, 2),)),
        node_ids=np.arange(n, dtype=np.int64),
        data_mask=np.ones(n, dtype=bool),
        indptr=indptr,
        targets=np.concatenate(rows) if rows else np.empty(0, dtype=np.int64),
        escaped_targets=0,
        total_targets=int(indptr[-1]),
    )


def scc_partition_oracle(adj: dict[int, list[int]], n: int) -> set[frozenset[int]]:
    """SCC partition via boolean transitive closure (repeated matrix squaring)."""
    reach = np.zeros((n, n), dtype=bool)
    for v, targets in adj.items():
        reach[v, targets] = True
    np.fill_diagonal(reach, True)
    for _ in range(int(np.ceil(np.log2(max(n, 2)))) + 1):
        reach = reach | (reach @ reach)
    mutual = reach & reach.T
    return {frozenset(np.flatnonzero(mutual[v])) for v in range(n)}


def random_digraph(rng: np.random.Generator, n: int, p: float) -> dict[int, list[int]]:
    mask = rng.random((n, n)) < p
    return {v: list(np.flatnonzero(mask[v])) for v in range(n)}


def simulate_limit(m, point: np.ndarray, steps: int = 500) -> np.ndarray:
    """Long-horizon simulation endpoint of a single point."""
    x = point[np.newaxis, :]
    for _ in range(steps):
        x = m.map_batch(x)
    return x[0]
