"""Seeded synthetic trajectory generation from the built-in analytic systems.

Initial states are drawn uniformly from the cube and simulated forward;
each trajectory is labeled by which attractor of the system its final point
is closest to (success when that is the system's designated success
attractor). This gives the analysis pipeline labeled datasets with exact,
simulation-checkable ground truth and no trained model anywhere.
"""

from __future__ import annotations

import numpy as np

from .data import Trajectory, TrajectoryDataset
from .dynamics import AnalyticMap, make_analytic
from .grid import DOMAIN_HI, DOMAIN_LO


def label_by_attractor(final_points: np.ndarray, system: AnalyticMap) -> np.ndarray:
    """1 where the point is strictly closest to the designated success attractor.

    With a single attractor every trajectory is a success. Ties with another
    attractor count as failure.
    """
    attractors = np.asarray(system.attractors, dtype=float)
    d2 = np.sum(
        (final_points[:, np.newaxis, :] - attractors[np.newaxis, :, :]) ** 2, axis=2
    )
    if attractors.shape[0] == 1:
        return np.ones(final_points.shape[0], dtype=np.int64)
    win = d2[:, system.success_attractor]
    others = np.delete(d2, system.success_attractor, axis=1).min(axis=1)
    return (win < others).astype(np.int64)


def generate_trajectories(
    system: str | AnalyticMap,
    n_trajectories: int,
    steps: int,
    seed: int = 0,
    dim: int | None = None,
    split: str = "validation",
) -> TrajectoryDataset:
    """Simulate ``n_trajectories`` labeled trajectories of ``steps`` map steps.

    Each trajectory records steps + 1 points (the uniform random initial
    state plus every image). Deterministic for a given seed.
    """
    if n_trajectories < 1:
        raise ValueError("need at least one trajectory")
    if steps < 1:
        raise ValueError("need at least one step")
    amap = system if isinstance(system, AnalyticMap) else make_analytic(system, dim)

    rng = np.random.default_rng(seed)
    state = rng.uniform(DOMAIN_LO, DOMAIN_HI, size=(n_trajectories, amap.dim))
    track = [state]
    for _ in range(steps):
        state = amap.map_batch(state)
        track.append(state)
    points = np.stack(track, axis=1)  # (n, steps + 1, d)

    labels = label_by_attractor(points[:, -1, :], amap)
    width = max(4, len(str(n_trajectories - 1)))
    trajectories = tuple(
        Trajectory(id=f"{amap.name}-{i:0{width}d}", label=int(labels[i]), points=points[i])
        for i in range(n_trajectories)
    )
    return TrajectoryDataset(dim=amap.dim, split=split, trajectories=trajectories)
