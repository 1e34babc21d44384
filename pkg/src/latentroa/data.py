"""Labeled latent trajectory data and the endpoint sets derived from it.

A trajectory is an ordered sequence of latent points with a binary outcome
label (1 = success, 0 = failure). Datasets are the source of both the valid
cell set (which cells the analysis is grounded in) and the endpoint sets used
to label attractors and score outcome prediction: per trajectory, the first
point joins the initial set of its outcome class and the last point joins the
terminal set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import DOMAIN_HI, DOMAIN_LO

SPLITS = ("train", "validation")


@dataclass(frozen=True, eq=False)
class Trajectory:
    """One labeled latent trajectory."""

    id: str
    label: int
    points: np.ndarray  # (T, d)

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"trajectory {self.id!r}: label must be 0 or 1, got {self.label}")
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValueError(f"trajectory {self.id!r}: points must be a (T, d) array")
        if pts.shape[0] < 2:
            raise ValueError(f"trajectory {self.id!r}: needs at least 2 points")
        if not np.all(np.isfinite(pts)):
            raise ValueError(f"trajectory {self.id!r}: non-finite coordinate")
        if np.any(pts < DOMAIN_LO) or np.any(pts > DOMAIN_HI):
            bad = int(np.argwhere((pts < DOMAIN_LO) | (pts > DOMAIN_HI))[0][0])
            raise ValueError(
                f"trajectory {self.id!r}: point {bad} outside [-1, 1]^d"
            )
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def initial(self) -> np.ndarray:
        return self.points[0]

    @property
    def final(self) -> np.ndarray:
        return self.points[-1]


@dataclass(frozen=True, eq=False)
class TrajectoryDataset:
    """A labeled set of latent trajectories with a common dimension."""

    dim: int
    split: str
    trajectories: tuple[Trajectory, ...]

    def __post_init__(self) -> None:
        if self.split not in SPLITS:
            raise ValueError(f"split must be one of {SPLITS}, got {self.split!r}")
        trajs = tuple(self.trajectories)
        if not trajs:
            raise ValueError("dataset has no trajectories")
        for t in trajs:
            if t.dim != self.dim:
                raise ValueError(
                    f"trajectory {t.id!r} has dimension {t.dim}, dataset declares {self.dim}"
                )
        object.__setattr__(self, "trajectories", trajs)

    def __len__(self) -> int:
        return len(self.trajectories)

    def all_points(self) -> np.ndarray:
        """All points of all trajectories stacked into one (N, d) array."""
        return np.concatenate([t.points for t in self.trajectories], axis=0)

    def label_counts(self) -> tuple[int, int]:
        """(n_success, n_failure) over trajectories."""
        n_s = sum(1 for t in self.trajectories if t.label == 1)
        return n_s, len(self.trajectories) - n_s


@dataclass(frozen=True, eq=False)
class EndpointSets:
    """Initial and terminal latent vectors split by trajectory outcome.

    One initial and one terminal vector per trajectory, so the initial and
    terminal sets of each class have equal cardinality. Ids are kept aligned
    with the rows so reports can name trajectories.
    """

    b_success: np.ndarray  # (n_s, d) initial points of successful trajectories
    b_failure: np.ndarray  # (n_f, d)
    l_success: np.ndarray  # (n_s, d) terminal points of successful trajectories
    l_failure: np.ndarray  # (n_f, d)
    success_ids: tuple[str, ...]
    failure_ids: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.b_success.shape != self.l_success.shape:
            raise ValueError("success initial/terminal sets differ in shape")
        if self.b_failure.shape != self.l_failure.shape:
            raise ValueError("failure initial/terminal sets differ in shape")
        if len(self.success_ids) != self.b_success.shape[0]:
            raise ValueError("success ids misaligned")
        if len(self.failure_ids) != self.b_failure.shape[0]:
            raise ValueError("failure ids misaligned")


def endpoint_sets(dataset: TrajectoryDataset) -> EndpointSets:
    """Collect first/last points of every trajectory, split by outcome label."""
    d = dataset.dim
    succ = [t for t in dataset.trajectories if t.label == 1]
    fail = [t for t in dataset.trajectories if t.label == 0]

    def stack(trajs: list[Trajectory], which: str) -> np.ndarray:
        if not trajs:
            return np.empty((0, d))
        return np.stack([t.initial if which == "first" else t.final for t in trajs])

    return EndpointSets(
        b_success=stack(succ, "first"),
        b_failure=stack(fail, "first"),
        l_success=stack(succ, "last"),
        l_failure=stack(fail, "last"),
        success_ids=tuple(t.id for t in succ),
        failure_ids=tuple(t.id for t in fail),
    )
