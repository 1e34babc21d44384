"""File formats, digests, and exports: the artifact's interchange surface.

Everything is UTF-8 JSON or CSV, written deterministically (fixed key order,
full round-trip float precision via repr) so that identical inputs always
produce byte-identical artifacts and digests can be compared across runs.

Formats
-------
Trajectory dataset::

    { "dim": d, "split": "train" | "validation",
      "trajectories": [ { "id": str, "label": 0 | 1,
                          "points": [[f, ...d], ...] } ] }

Dynamics network::

    { "input_dim": d,
      "layers": [ { "rows": m, "cols": n,
                    "weights": [m * n reals, row-major],
                    "bias": [m reals],
                    "activation": "tanh" | "relu" | "identity" } ] }

The final layer of a network file must have a tanh activation so the map's
codomain stays inside the cube.

Transition graphs and Morse graphs serialize with a ``provenance`` block
(config digest plus input digests); staged commands refuse to reuse a cached
artifact whose provenance does not match the current configuration.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from .data import Trajectory, TrajectoryDataset
from .dynamics import DynamicsNet, Layer
from .grid import LatentGrid
from .morse import MorseGraph, MorseNode, ROA_AMBIGUOUS, ROA_UNREACHABLE, RoaAssignment
from .transition import TransitionGraph

GRAPH_FORMAT = "latentroa.graph/1"
MORSE_FORMAT = "latentroa.morse/1"
REPORT_FORMAT = "latentroa.report/1"


class FormatError(ValueError):
    """A file failed validation against its declared format."""


class StaleCacheError(RuntimeError):
    """A cached artifact was produced by a different configuration or inputs."""


# ----------------------------------------------------------------------
# digests and canonical JSON
# ----------------------------------------------------------------------


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def digest_of_obj(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for block in iter(lambda: f.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _write_json(obj, path: str, compact: bool = False) -> None:
    text = (
        json.dumps(obj, sort_keys=True, separators=(",", ":"))
        if compact
        else json.dumps(obj, sort_keys=True, indent=2)
    )
    with open(path, "w", encoding="utf-8") as f:
        f.write(text)
        f.write("\n")


def _read_json(path: str):
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise FormatError(f"{path}: not valid JSON ({e})") from e


# ----------------------------------------------------------------------
# trajectory datasets
# ----------------------------------------------------------------------


def dataset_to_obj(ds: TrajectoryDataset) -> dict:
    return {
        "dim": ds.dim,
        "split": ds.split,
        "trajectories": [
            {"id": t.id, "label": t.label, "points": t.points.tolist()}
            for t in ds.trajectories
        ],
    }


def save_trajectories(ds: TrajectoryDataset, path: str) -> None:
    _write_json(dataset_to_obj(ds), path, compact=True)


def parse_trajectories(obj, source: str = "<memory>") -> TrajectoryDataset:
    if not isinstance(obj, dict):
        raise FormatError(f"{source}: dataset must be a JSON object")
    try:
        dim = int(obj["dim"])
        split = obj["split"]
        raw = obj["trajectories"]
    except KeyError as e:
        raise FormatError(f"{source}: missing dataset key {e}") from e
    if not isinstance(raw, list) or not raw:
        raise FormatError(f"{source}: 'trajectories' must be a non-empty list")

    trajectories = []
    for k, entry in enumerate(raw):
        tid = entry.get("id", f"#{k}") if isinstance(entry, dict) else f"#{k}"
        try:
            label = entry["label"]
            points = np.asarray(entry["points"], dtype=float)
            if points.ndim != 2 or points.shape[1] != dim:
                raise ValueError(
                    f"trajectory {tid!r}: points have shape {points.shape}, "
                    f"dataset dimension is {dim}"
                )
            trajectories.append(Trajectory(id=str(tid), label=label, points=points))
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"{source}: {e}") from e
    try:
        return TrajectoryDataset(dim=dim, split=split, trajectories=tuple(trajectories))
    except ValueError as e:
        raise FormatError(f"{source}: {e}") from e


def load_trajectories(path: str) -> TrajectoryDataset:
    return parse_trajectories(_read_json(path), source=path)


# ----------------------------------------------------------------------
# dynamics networks
# ----------------------------------------------------------------------


def net_to_obj(net: DynamicsNet) -> dict:
    return {
        "input_dim": net.input_dim,
        "layers": [
            {
                "rows": layer.weights.shape[0],
                "cols": layer.weights.shape[1],
                "weights": layer.weights.reshape(-1).tolist(),
                "bias": layer.bias.tolist(),
                "activation": layer.activation,
            }
            for layer in net.layers
        ],
    }


def save_dynamics_net(net: DynamicsNet, path: str) -> None:
    _write_json(net_to_obj(net), path, compact=True)


def parse_dynamics_net(obj, source: str = "<memory>") -> DynamicsNet:
    if not isinstance(obj, dict):
        raise FormatError(f"{source}: network must be a JSON object")
    try:
        input_dim = int(obj["input_dim"])
        raw_layers = obj["layers"]
    except KeyError as e:
        raise FormatError(f"{source}: missing network key {e}") from e
    if not isinstance(raw_layers, list) or not raw_layers:
        raise FormatError(f"{source}: 'layers' must be a non-empty list")

    layers = []
    for i, entry in enumerate(raw_layers):
        try:
            rows = int(entry["rows"])
            cols = int(entry["cols"])
            weights = np.asarray(entry["weights"], dtype=float)
            bias = np.asarray(entry["bias"], dtype=float)
            activation = entry["activation"]
        except (KeyError, TypeError, ValueError) as e:
            raise FormatError(f"{source}: layer {i}: {e}") from e
        if weights.size != rows * cols:
            raise FormatError(
                f"{source}: layer {i}: expected {rows * cols} weights, got {weights.size}"
            )
        try:
            layers.append(
                Layer(weights=weights.reshape(rows, cols), bias=bias, activation=activation)
            )
        except ValueError as e:
            raise FormatError(f"{source}: layer {i}: {e}") from e
    if layers[-1].activation != "tanh":
        raise FormatError(
            f"{source}: final layer activation must be 'tanh' to keep outputs in (-1, 1), "
            f"got {layers[-1].activation!r}"
        )
    try:
        return DynamicsNet(input_dim=input_dim, layers=tuple(layers))
    except ValueError as e:
        raise FormatError(f"{source}: {e}") from e


def load_dynamics_net(path: str) -> DynamicsNet:
    return parse_dynamics_net(_read_json(path), source=path)


# ----------------------------------------------------------------------
# transition graph cache
# ----------------------------------------------------------------------


def graph_to_obj(graph: TransitionGraph) -> dict:
    nodes = [
        [int(flat), "data" if bool(is_data) else "neighbor"]
        for flat, is_data in zip(graph.node_ids, graph.data_mask)
    ]
    edges = [
        [int(graph.node_ids[pos]), [int(t) for t in graph.node_ids[graph.successors(pos)]]]
        for pos in range(graph.n_nodes)
    ]
    return {
        "format": GRAPH_FORMAT,
        "meta": graph.meta,
        "subdivisions": list(graph.grid.subdivisions),
        "nodes": nodes,
        "edges": edges,
        "escaped_targets": graph.escaped_targets,
        "total_targets": graph.total_targets,
    }


def save_graph(graph: TransitionGraph, path: str) -> None:
    _write_json(graph_to_obj(graph), path, compact=True)


def load_graph(path: str) -> TransitionGraph:
    obj = _read_json(path)
    if not isinstance(obj, dict) or obj.get("format") != GRAPH_FORMAT:
        raise FormatError(f"{path}: not a {GRAPH_FORMAT} file")
    grid = LatentGrid(tuple(int(n) for n in obj["subdivisions"]))
    nodes = obj["nodes"]
    node_ids = np.asarray([n[0] for n in nodes], dtype=np.int64)
    if np.any(np.diff(node_ids) <= 0):
        raise FormatError(f"{path}: node ids must be strictly increasing")
    data_mask = np.asarray([n[1] == "data" for n in nodes], dtype=bool)

    rows: dict[int, list[int]] = {int(src): list(map(int, dsts)) for src, dsts in obj["edges"]}
    indptr = np.zeros(node_ids.size + 1, dtype=np.int64)
    target_rows: list[np.ndarray] = []
    for pos, flat in enumerate(node_ids):
        dsts = np.asarray(rows.get(int(flat), []), dtype=np.int64)
        tpos = np.searchsorted(node_ids, dsts)
        if np.any(tpos >= node_ids.size) or np.any(node_ids[tpos] != dsts):
            raise FormatError(f"{path}: edge of cell {flat} leaves the node set")
        target_rows.append(tpos)
        indptr[pos + 1] = indptr[pos] + tpos.size
    targets = (
        np.concatenate(target_rows) if target_rows else np.empty(0, dtype=np.int64)
    )
    return TransitionGraph(
        grid=grid,
        node_ids=node_ids,
        data_mask=data_mask,
        indptr=indptr,
        targets=targets,
        escaped_targets=int(obj.get("escaped_targets", 0)),
        total_targets=int(obj.get("total_targets", 0)),
        meta=dict(obj.get("meta", {})),
    )


# ----------------------------------------------------------------------
# Morse graph
# ----------------------------------------------------------------------


def morse_to_obj(mg: MorseGraph, meta: dict | None = None) -> dict:
    return {
        "format": MORSE_FORMAT,
        "meta": dict(meta or {}),
        "nodes": [
            {
                "id": n.id,
                "cells": [int(c) for c in n.cells],
                "is_attractor": n.is_attractor,
                "label": n.label,
            }
            for n in mg.nodes
        ],
        "edges": [[a, b] for a in sorted(mg.edges) for b in mg.edges[a]],
    }


def save_morse(mg: MorseGraph, path: str, meta: dict | None = None) -> None:
    _write_json(morse_to_obj(mg, meta), path)


def load_morse(path: str, graph: TransitionGraph) -> tuple[MorseGraph, dict]:
    obj = _read_json(path)
    if not isinstance(obj, dict) or obj.get("format") != MORSE_FORMAT:
        raise FormatError(f"{path}: not a {MORSE_FORMAT} file")
    edges: dict[int, list[int]] = {}
    for a, b in obj["edges"]:
        edges.setdefault(int(a), []).append(int(b))
    nodes = []
    for raw in sorted(obj["nodes"], key=lambda r: r["id"]):
        cells = np.asarray(sorted(raw["cells"]), dtype=np.int64)
        positions = np.asarray([graph.pos_of_flat(int(c)) for c in cells], dtype=np.int64)
        nodes.append(
            MorseNode(
                id=int(raw["id"]),
                cells=cells,
                positions=positions,
                is_attractor=bool(raw["is_attractor"]),
                label=str(raw["label"]),
            )
        )
    mg = MorseGraph(
        nodes=tuple(nodes),
        edges={n.id: tuple(sorted(edges.get(n.id, []))) for n in nodes},
    )
    return mg, dict(obj.get("meta", {}))


def export_morse_dot(mg: MorseGraph) -> str:
    """Deterministic DOT rendering of the Morse graph."""
    lines = ["digraph morse_graph {", "  rankdir=TB;", "  node [shape=box];"]
    for n in mg.nodes:
        attr = "yes" if n.is_attractor else "no"
        lines.append(
            f'  m{n.id} [label="M{n.id}\\ncells={n.cells.size}'
            f'\\nattractor={attr}\\noutcome={n.label}"];'
        )
    for a in sorted(mg.edges):
        for b in mg.edges[a]:
            lines.append(f"  m{a} -> m{b};")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# ROA table
# ----------------------------------------------------------------------


def export_roa_csv(roa: RoaAssignment, g: LatentGrid) -> str:
    """CSV of the per-cell assignment, rows in flat-id order over the valid cells."""
    d = g.dim
    header = (
        ["cell_id"]
        + [f"idx_{a}" for a in range(d)]
        + [f"center_{a}" for a in range(d)]
        + ["assignment"]
    )
    lines = [",".join(header)]
    for pos, flat in enumerate(roa.node_ids):
        cell = g.cell_of_flat(int(flat))
        center = g.cell_center(cell)
        code = int(roa.codes[pos])
        if code == ROA_AMBIGUOUS:
            assignment = "ambiguous"
        elif code == ROA_UNREACHABLE:
            assignment = "unreachable"
        else:
            assignment = f"attractor:{code}"
        row = (
            [str(int(flat))]
            + [str(i) for i in cell]
            + [repr(float(c)) for c in center]
            + [assignment]
        )
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------------------
# analysis configuration
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class AnalysisConfig:
    """Configuration of one analysis run.

    Exactly one of ``dynamics_weights`` (path to a network file) or
    ``dynamics_system`` (name of a built-in analytic system) selects the
    dynamics. ``delta`` overrides the Lipschitz-derived ball radius when set.
    Relative paths are resolved against the config file's directory.
    """

    subdivisions: tuple[int, ...]
    dataset: str
    output_dir: str
    dynamics_weights: str | None = None
    dynamics_system: str | None = None
    rollout_steps: int = 12
    delta: float | None = None
    safety_factor: float = 1.5
    lipschitz_samples: int = 10_000
    lipschitz_pair_scale: float = 1e-2
    seed: int = 0
    workers: int | None = None
    extra_samples_per_cell: int = 0
    base_dir: str = "."

    def __post_init__(self) -> None:
        if self.rollout_steps < 1:
            raise FormatError("rollout_steps must be >= 1")
        if self.safety_factor < 1:
            raise FormatError("safety_factor must be >= 1")
        if any(n < 2 for n in self.subdivisions):
            raise FormatError("subdivisions must be >= 2 per axis")
        if (self.dynamics_weights is None) == (self.dynamics_system is None):
            raise FormatError(
                "config must set exactly one of dynamics.weights or dynamics.system"
            )
        if self.delta is not None and self.delta < 0:
            raise FormatError("delta override must be non-negative")
        if self.extra_samples_per_cell < 0:
            raise FormatError("extra_samples_per_cell must be >= 0")

    def to_obj(self) -> dict:
        """Normalized content used for the config digest (paths as written)."""
        return {
            "subdivisions": list(self.subdivisions),
            "dataset": self.dataset,
            "output_dir": self.output_dir,
            "dynamics": (
                {"weights": self.dynamics_weights}
                if self.dynamics_weights is not None
                else {"system": self.dynamics_system}
            ),
            "rollout_steps": self.rollout_steps,
            "delta": self.delta,
            "safety_factor": self.safety_factor,
            "lipschitz_samples": self.lipschitz_samples,
            "lipschitz_pair_scale": self.lipschitz_pair_scale,
            "seed": self.seed,
            "extra_samples_per_cell": self.extra_samples_per_cell,
        }

    def digest(self) -> str:
        return digest_of_obj(self.to_obj())

    def resolve(self, path: str) -> str:
        return path if os.path.isabs(path) else os.path.join(self.base_dir, path)

    @property
    def dataset_path(self) -> str:
        return self.resolve(self.dataset)

    @property
    def weights_path(self) -> str | None:
        return None if self.dynamics_weights is None else self.resolve(self.dynamics_weights)

    @property
    def output_path(self) -> str:
        return self.resolve(self.output_dir)


def parse_config(obj, source: str = "<memory>", base_dir: str = ".") -> AnalysisConfig:
    if not isinstance(obj, dict):
        raise FormatError(f"{source}: config must be a JSON object")
    dynamics = obj.get("dynamics", {})
    if not isinstance(dynamics, dict):
        raise FormatError(f"{source}: 'dynamics' must be an object")
    try:
        return AnalysisConfig(
            subdivisions=tuple(int(n) for n in obj["subdivisions"]),
            dataset=str(obj["dataset"]),
            output_dir=str(obj["output_dir"]),
            dynamics_weights=dynamics.get("weights"),
            dynamics_system=dynamics.get("system"),
            rollout_steps=int(obj.get("rollout_steps", 12)),
            delta=None if obj.get("delta") is None else float(obj["delta"]),
            safety_factor=float(obj.get("safety_factor", 1.5)),
            lipschitz_samples=int(obj.get("lipschitz_samples", 10_000)),
            lipschitz_pair_scale=float(obj.get("lipschitz_pair_scale", 1e-2)),
            seed=int(obj.get("seed", 0)),
            workers=None if obj.get("workers") is None else int(obj["workers"]),
            extra_samples_per_cell=int(obj.get("extra_samples_per_cell", 0)),
            base_dir=base_dir,
        )
    except KeyError as e:
        raise FormatError(f"{source}: missing config key {e}") from e
    except (TypeError, ValueError) as e:
        raise FormatError(f"{source}: {e}") from e


def load_config(path: str) -> AnalysisConfig:
    return parse_config(
        _read_json(path), source=path, base_dir=os.path.dirname(os.path.abspath(path))
    )


def provenance_of(config: AnalysisConfig) -> dict:
    """Digests of the configuration and its input files."""
    out = {
        "config_digest": config.digest(),
        "dataset_digest": file_digest(config.dataset_path),
    }
    if config.weights_path is not None:
        out["weights_digest"] = file_digest(config.weights_path)
    return out


def check_provenance(artifact_meta: dict, expected: dict, path: str) -> None:
    """Refuse to reuse a cached artifact built from different config or inputs."""
    found = artifact_meta.get("provenance", {})
    for key, value in expected.items():
        if found.get(key) != value:
            raise StaleCacheError(
                f"{path}: stale cache; {key} is {found.get(key)!r}, current inputs "
                f"give {value!r}. Re-run the producing stage."
            )
