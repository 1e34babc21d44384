#!/usr/bin/env python3
"""Regions of attraction of the planar bistable system, rendered to a PNG.

The system pushes the first coordinate toward +1 or -1 (separatrix at 0) and
contracts the second. The Morse graph gets two attractor leaves; the ROA
splits the valid cells into their two basins with a thin ambiguous band along
the separatrix where the outer approximation cannot commit.

Writes bistable_roa.png next to this script if matplotlib is available.
"""

import os

import numpy as np

from latentroa import (
    LatentGrid,
    build_morse_graph,
    build_transition_graph,
    generate_trajectories,
    make_analytic,
    regions_of_attraction,
    valid_cells,
)
from latentroa.io import export_morse_dot
from latentroa.morse import ROA_AMBIGUOUS, ROA_UNREACHABLE

grid = LatentGrid((32, 32))
dyn = make_analytic("bistable_2d")
dataset = generate_trajectories("bistable_2d", 500, 40, seed=7, split="train")

cells = valid_cells(dataset, grid)
graph = build_transition_graph(dyn, cells, grid, spec=12, delta=0.05)
mg = build_morse_graph(graph)
roa = regions_of_attraction(graph, mg)

print(f"valid cells: {len(cells)}, edges: {graph.n_edges}")
print(f"attractors: {[n.id for n in mg.attractors()]}")
print(f"ROA counts: {roa.counts()}")
print("\nMorse graph in DOT form:\n")
print(export_morse_dot(mg))

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("matplotlib not installed; skipping the plot")
    raise SystemExit(0)

# paint each valid cell by its assignment
image = np.full(grid.subdivisions, np.nan)
palette = {ROA_AMBIGUOUS: 0.5, ROA_UNREACHABLE: np.nan}
for k, node in enumerate(mg.attractors()):
    palette[node.id] = float(k)
for pos, flat in enumerate(roa.node_ids):
    idx = grid.cell_of_flat(int(flat))
    image[idx] = palette.get(int(roa.codes[pos]), np.nan)

fig, ax = plt.subplots(figsize=(6, 6))
ax.imshow(
    image.T,
    origin="lower",
    extent=(-1, 1, -1, 1),
    cmap="coolwarm",
    interpolation="nearest",
)
ax.set_xlabel("latent axis 0")
ax.set_ylabel("latent axis 1")
ax.set_title("Regions of attraction (mid tone = ambiguous band)")
out = os.path.join(os.path.dirname(os.path.abspath(__file__)), "bistable_roa.png")
fig.savefig(out, dpi=130, bbox_inches="tight")
print(f"wrote {out}")
