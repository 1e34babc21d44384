"""Uniform cell decomposition of the latent cube [-1, 1]^d.

The analysis domain is always the standard cube: latent coordinates produced
by a tanh head live in (-1, 1), and corner arithmetic may touch +/-1 exactly.
A :class:`LatentGrid` splits each axis into a configurable number of equal
cells and provides all point<->cell geometry the transition-graph builder
needs: point location, cell boxes and corners, Moore neighborhoods, and
closed-ball/box intersection queries.

Cell membership follows a half-open convention [lo, hi) per axis, with the
top cell of each axis closed at +1, so every point of the cube belongs to
exactly one cell. Flat ids are row-major over the per-axis indices, which
fixes a deterministic iteration order for everything built on top.

All objects here are immutable values and all operations are pure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

Cell = tuple[int, ...]

DOMAIN_LO = -1.0
DOMAIN_HI = 1.0


def clamp_to_domain(p: np.ndarray) -> np.ndarray:
    """Clamp every coordinate of ``p`` into [-1, 1]. Rejects non-finite input."""
    p = np.asarray(p, dtype=float)
    if not np.all(np.isfinite(p)):
        raise ValueError("point has non-finite coordinates")
    return np.clip(p, DOMAIN_LO, DOMAIN_HI)


@dataclass(frozen=True)
class CellBox:
    """Axis-aligned box of one cell, given by its lo/hi corners."""

    lo: np.ndarray
    hi: np.ndarray

    def contains(self, p: np.ndarray) -> bool:
        """Closed-box membership test."""
        return bool(np.all(p >= self.lo) and np.all(p <= self.hi))


@dataclass(frozen=True)
class LatentGrid:
    """Uniform decomposition of [-1, 1]^d with ``subdivisions[a]`` cells per axis."""

    subdivisions: tuple[int, ...]

    def __post_init__(self) -> None:
        subs = tuple(int(n) for n in self.subdivisions)
        if len(subs) == 0:
            raise ValueError("grid needs at least one axis")
        if any(n < 1 for n in subs):
            raise ValueError(f"subdivision counts must be positive, got {subs}")
        object.__setattr__(self, "subdivisions", subs)

    @classmethod
    def uniform(cls, dim: int, cells_per_axis: int) -> "LatentGrid":
        return cls((cells_per_axis,) * dim)

    @property
    def dim(self) -> int:
        return len(self.subdivisions)

    @property
    def widths(self) -> np.ndarray:
        return (DOMAIN_HI - DOMAIN_LO) / np.asarray(self.subdivisions, dtype=float)

    @property
    def n_cells(self) -> int:
        return int(np.prod(self.subdivisions))

    @property
    def half_diagonal(self) -> float:
        """Half the diagonal of one cell: max distance of an interior point to its nearest corner."""
        return 0.5 * float(np.sqrt(np.sum(self.widths**2)))

    # ------------------------------------------------------------------
    # indexing
    # ------------------------------------------------------------------

    def flat_id(self, cell: Cell) -> int:
        """Row-major flat id of a cell index."""
        return int(np.ravel_multi_index(cell, self.subdivisions))

    def cell_of_flat(self, flat: int) -> Cell:
        return tuple(int(i) for i in np.unravel_index(flat, self.subdivisions))

    def _check_cell(self, cell: Cell) -> Cell:
        cell = tuple(int(i) for i in cell)
        if len(cell) != self.dim:
            raise ValueError(f"cell index has dimension {len(cell)}, grid has {self.dim}")
        for a, (i, n) in enumerate(zip(cell, self.subdivisions)):
            if not 0 <= i < n:
                raise ValueError(f"cell index {cell} out of range on axis {a}")
        return cell

    # ------------------------------------------------------------------
    # point <-> cell
    # ------------------------------------------------------------------

    def point_to_cell(self, p: np.ndarray) -> Cell:
        """Cell containing ``p`` under the half-open convention (top cells closed at +1)."""
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,):
            raise ValueError(f"point has shape {p.shape}, expected ({self.dim},)")
        if np.any(p < DOMAIN_LO) or np.any(p > DOMAIN_HI):
            raise ValueError(f"point {p} outside [-1, 1]^{self.dim}; clamp_to_domain first")
        return tuple(int(i) for i in self._locate(p[np.newaxis, :])[0])

    def points_to_cells(self, points: np.ndarray) -> np.ndarray:
        """Vectorized point location: (N, d) points -> (N, d) int cell indices."""
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.dim:
            raise ValueError(f"expected (N, {self.dim}) points, got {points.shape}")
        if np.any(points < DOMAIN_LO) or np.any(points > DOMAIN_HI):
            raise ValueError("points outside [-1, 1]^d; clamp_to_domain first")
        return self._locate(points)

    def _bounds(self, idx: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """lo/hi box bounds per axis for integer index arrays; top cells end at +1 exactly."""
        subs = np.asarray(self.subdivisions)
        w = self.widths
        lo = DOMAIN_LO + idx * w
        hi = np.where(idx + 1 == subs, DOMAIN_HI, DOMAIN_LO + (idx + 1) * w)
        return lo, hi

    def _locate(self, points: np.ndarray) -> np.ndarray:
        subs = np.asarray(self.subdivisions)
        # (p + 1) / width == (p + 1) * n / 2; floor gives the half-open cell,
        # clipping makes the top cell closed at +1. Rounding of the product can
        # be off by one cell at exact boundaries, so step once against the
        # actual box bounds to keep location and boxes consistent.
        idx = np.floor((points - DOMAIN_LO) * subs / (DOMAIN_HI - DOMAIN_LO)).astype(np.int64)
        idx = np.clip(idx, 0, subs - 1)
        lo, _ = self._bounds(idx)
        idx = np.clip(idx - (points < lo), 0, subs - 1)
        lo, hi = self._bounds(idx)
        idx += (points >= hi) & (idx < subs - 1)
        return idx

    def cell_box(self, cell: Cell) -> CellBox:
        """Axis-aligned box [lo, hi] of a cell."""
        cell = self._check_cell(cell)
        lo, hi = self._bounds(np.asarray(cell, dtype=np.int64))
        return CellBox(lo=lo, hi=hi)

    def cell_center(self, cell: Cell) -> np.ndarray:
        box = self.cell_box(cell)
        return 0.5 * (box.lo + box.hi)

    def cell_corners(self, cell: Cell) -> np.ndarray:
        """The 2^d vertices of a cell's box, as a (2^d, d) array in binary order."""
        box = self.cell_box(cell)
        cols = [(box.lo[a], box.hi[a]) for a in range(self.dim)]
        return np.array(list(itertools.product(*cols)), dtype=float)

    def corners_of_flat_ids(self, flat_ids: np.ndarray) -> np.ndarray:
        """Vectorized corner enumeration: (m,) flat ids -> (m, 2^d, d) corner array."""
        flat_ids = np.asarray(flat_ids, dtype=np.int64)
        idx = np.stack(np.unravel_index(flat_ids, self.subdivisions), axis=-1)
        lo, hi = self._bounds(idx)  # (m, d) each
        offsets = np.array(list(itertools.product((False, True), repeat=self.dim)))
        # pick lo or hi per axis according to the corner's binary offset
        return np.where(offsets[np.newaxis, :, :], hi[:, np.newaxis, :], lo[:, np.newaxis, :])

    # ------------------------------------------------------------------
    # neighborhoods and ball queries
    # ------------------------------------------------------------------

    def neighbors(self, cell: Cell) -> set[Cell]:
        """Moore neighborhood of a cell (index differs by <=1 per axis), clipped at the boundary."""
        cell = self._check_cell(cell)
        out: set[Cell] = set()
        for off in itertools.product((-1, 0, 1), repeat=self.dim):
            if all(o == 0 for o in off):
                continue
            cand = tuple(i + o for i, o in zip(cell, off))
            if all(0 <= c < n for c, n in zip(cand, self.subdivisions)):
                out.add(cand)
        return out

    def cells_intersecting_ball(self, center: np.ndarray, radius: float) -> set[Cell]:
        """All cells whose closed box lies within Euclidean distance ``radius`` of ``center``.

        The test is exact: the center is clamped per-axis into each candidate
        box (closest-point projection) and the resulting distance compared to
        ``radius`` with a closed inequality, so boxes merely touching the ball
        count as intersecting.
        """
        if radius < 0:
            raise ValueError("radius must be non-negative")
        center = clamp_to_domain(np.asarray(center, dtype=float))
        if center.shape != (self.dim,):
            raise ValueError(f"center has shape {center.shape}, expected ({self.dim},)")

        axes_idx: list[np.ndarray] = []
        axes_dist2: list[np.ndarray] = []
        subs = self.subdivisions
        w = self.widths
        for a in range(self.dim):
            # Candidate index window, padded by one cell against float fuzz;
            # the exact distance test below filters it.
            lo_i = int(np.floor((center[a] - radius - DOMAIN_LO) / w[a])) - 1
            hi_i = int(np.floor((center[a] + radius - DOMAIN_LO) / w[a])) + 1
            idx = np.arange(max(lo_i, 0), min(hi_i, subs[a] - 1) + 1)
            lo = DOMAIN_LO + idx * w[a]
            hi = np.where(idx + 1 == subs[a], DOMAIN_HI, DOMAIN_LO + (idx + 1) * w[a])
            gap = np.maximum(np.maximum(lo - center[a], center[a] - hi), 0.0)
            axes_idx.append(idx)
            axes_dist2.append(gap**2)

        # Sum per-axis squared gaps over the candidate sub-grid.
        total = axes_dist2[0]
        for a in range(1, self.dim):
            total = total[..., np.newaxis] + axes_dist2[a]
        hits = np.argwhere(total <= radius**2)
        return {tuple(int(axes_idx[a][h[a]]) for a in range(self.dim)) for h in hits}

    def ball_flat_ids(self, center: np.ndarray, radius: float) -> np.ndarray:
        """Sorted flat ids of :meth:`cells_intersecting_ball` (builder fast path)."""
        cells = self.cells_intersecting_ball(center, radius)
        ids = np.fromiter(
            (self.flat_id(c) for c in cells), dtype=np.int64, count=len(cells)
        )
        ids.sort()
        return ids
