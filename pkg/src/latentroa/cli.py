"""Command line: full-pipeline analysis, staged execution, synthesis, stats.

Subcommands
-----------
``analyze``      run the whole pipeline from a config file and export all
                 artifacts (graph cache, Morse DOT, ROA table, report).
``build-graph``  build and cache only the transition graph.
``morse``        condense a cached graph into the Morse graph (JSON + DOT).
``roa``          compute the ROA table from cached graph + Morse graph.
``evaluate``     label attractors and classify initial states against a
                 cached graph/Morse pair; ``--dataset`` evaluates a different
                 dataset than the one the graph was built from.
``synth``        generate a labeled trajectory dataset from a built-in
                 analytic system.
``stats``        print summary statistics of a cached transition graph.
``forward``      evaluate rollout images of a dynamics map on a points file
                 (cross-implementation checking hook).

Staged commands verify the cached artifact's provenance digests (config plus
input files) and refuse stale caches instead of silently rebuilding. Progress
goes to stderr; machine output of ``stats``/``forward`` goes to stdout.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from . import __version__
from . import io as lio
from .data import TrajectoryDataset, endpoint_sets
from .dynamics import (
    ANALYTIC_SYSTEMS,
    DynamicsMap,
    NetworkDynamics,
    RolloutSpec,
    delta_radius,
    estimate_lipschitz,
    make_analytic,
)
from .evaluate import NoSuccessRegionError, classify_initial_states, label_attractors
from .grid import LatentGrid
from .morse import build_morse_graph, regions_of_attraction, validate_build
from .synth import generate_trajectories
from .transition import build_transition_graph, graph_stats, valid_cells

WORKERS_ENV = "LATENTROA_WORKERS"

GRAPH_FILE = "graph.json"
MORSE_FILE = "morse.json"
DOT_FILE = "morse.dot"
ROA_FILE = "roa.csv"
REPORT_FILE = "report.json"
RUN_META_FILE = "run_meta.json"


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


def _worker_count(config: lio.AnalysisConfig) -> int:
    env = os.environ.get(WORKERS_ENV)
    if env:
        return max(1, int(env))
    if config.workers is not None:
        return max(1, config.workers)
    return os.cpu_count() or 1


def _load_dynamics(config: lio.AnalysisConfig, grid: LatentGrid) -> DynamicsMap:
    if config.dynamics_weights is not None:
        net = lio.load_dynamics_net(config.weights_path)
        if net.input_dim != grid.dim:
            raise lio.FormatError(
                f"network dimension {net.input_dim} != grid dimension {grid.dim}"
            )
        return NetworkDynamics(net)
    return make_analytic(config.dynamics_system, dim=grid.dim)


def _load_dataset(config: lio.AnalysisConfig, grid: LatentGrid) -> TrajectoryDataset:
    dataset = lio.load_trajectories(config.dataset_path)
    if dataset.dim != grid.dim:
        raise lio.FormatError(
            f"dataset dimension {dataset.dim} != grid dimension {grid.dim}"
        )
    return dataset


# ----------------------------------------------------------------------
# stages
# ----------------------------------------------------------------------


def stage_build_graph(config: lio.AnalysisConfig):
    grid = LatentGrid(config.subdivisions)
    dataset = _load_dataset(config, grid)
    dyn = _load_dynamics(config, grid)
    provenance = lio.provenance_of(config)

    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    if config.delta is not None:
        l_hat = None
        delta = config.delta
        _log(f"delta override: {delta}")
    else:
        l_hat = estimate_lipschitz(
            dyn,
            RolloutSpec(config.rollout_steps),
            domain_samples=config.lipschitz_samples,
            pair_scale=config.lipschitz_pair_scale,
            seed=config.seed,
        )
        delta = delta_radius(l_hat, grid, config.safety_factor)
        _log(
            f"estimated r-step Lipschitz constant {l_hat:.6g}; "
            f"delta = {delta:.6g} (safety {config.safety_factor})"
        )
    timings["lipschitz_s"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    cells = valid_cells(dataset, grid)
    meta = {
        "provenance": provenance,
        "lipschitz_estimate": l_hat,
        "delta_source": "override" if config.delta is not None else "estimated",
    }
    graph = build_transition_graph(
        dyn,
        cells,
        grid,
        config.rollout_steps,
        delta,
        extra_samples_per_cell=config.extra_samples_per_cell,
        seed=config.seed,
        workers=_worker_count(config),
        meta=meta,
    )
    timings["build_graph_s"] = time.perf_counter() - t0
    stats = graph_stats(graph)
    _log(
        f"transition graph: {stats.node_count} cells, {stats.edge_count} edges, "
        f"{stats.exit_cell_count} exit cells, escaped mass {stats.escaped_mass_fraction:.4f}"
    )
    return grid, dataset, dyn, graph, timings


def cmd_build_graph(config: lio.AnalysisConfig) -> int:
    _, _, _, graph, timings = stage_build_graph(config)
    os.makedirs(config.output_path, exist_ok=True)
    lio.save_graph(graph, os.path.join(config.output_path, GRAPH_FILE))
    _write_run_meta(config, graph, timings)
    _log(f"wrote {os.path.join(config.output_path, GRAPH_FILE)}")
    return 0


def _load_cached_graph(config: lio.AnalysisConfig):
    path = os.path.join(config.output_path, GRAPH_FILE)
    if not os.path.exists(path):
        raise lio.StaleCacheError(f"{path}: missing; run build-graph (or analyze) first")
    graph = lio.load_graph(path)
    lio.check_provenance(graph.meta, lio.provenance_of(config), path)
    return graph


def cmd_morse(config: lio.AnalysisConfig) -> int:
    graph = _load_cached_graph(config)
    mg = build_morse_graph(graph)
    roa = regions_of_attraction(graph, mg)
    validate_build(graph, mg, roa)
    meta = {"provenance": lio.provenance_of(config)}
    lio.save_morse(mg, os.path.join(config.output_path, MORSE_FILE), meta)
    with open(os.path.join(config.output_path, DOT_FILE), "w", encoding="utf-8") as f:
        f.write(lio.export_morse_dot(mg))
    _log(
        f"Morse graph: {len(mg)} nodes, {len(mg.attractors())} attractors; "
        f"wrote {MORSE_FILE}, {DOT_FILE}"
    )
    return 0


def _load_cached_morse(config: lio.AnalysisConfig, graph):
    path = os.path.join(config.output_path, MORSE_FILE)
    if not os.path.exists(path):
        raise lio.StaleCacheError(f"{path}: missing; run morse (or analyze) first")
    mg, meta = lio.load_morse(path, graph)
    lio.check_provenance(meta, lio.provenance_of(config), path)
    return mg


def cmd_roa(config: lio.AnalysisConfig) -> int:
    graph = _load_cached_graph(config)
    mg = _load_cached_morse(config, graph)
    roa = regions_of_attraction(graph, mg)
    validate_build(graph, mg, roa)
    with open(os.path.join(config.output_path, ROA_FILE), "w", encoding="utf-8") as f:
        f.write(lio.export_roa_csv(roa, graph.grid))
    _log(f"wrote {ROA_FILE} ({roa.node_ids.size} cells)")
    return 0


def _evaluate(config: lio.AnalysisConfig, graph, mg, roa, eval_path: str):
    eval_dataset = lio.load_trajectories(eval_path)
    if eval_dataset.dim != graph.grid.dim:
        raise lio.FormatError(
            f"evaluation dataset dimension {eval_dataset.dim} != grid dimension {graph.grid.dim}"
        )
    endpoints = endpoint_sets(eval_dataset)
    labeled, votes = label_attractors(mg, roa, endpoints, graph.grid)
    report = classify_initial_states(endpoints, roa, labeled, graph.grid)
    return eval_dataset, labeled, votes, report


def _report_obj(config, eval_path, labeled, votes, report) -> dict:
    attractors = [
        {
            "id": n.id,
            "label": n.label,
            "cell_count": int(n.cells.size),
            "success_votes": votes.success_votes.get(n.id, 0),
            "failure_votes": votes.failure_votes.get(n.id, 0),
        }
        for n in labeled.attractors()
    ]
    return {
        "format": lio.REPORT_FORMAT,
        "meta": {
            "provenance": lio.provenance_of(config),
            "eval_dataset": eval_path,
            "eval_dataset_digest": lio.file_digest(eval_path),
        },
        "task": os.path.splitext(os.path.basename(eval_path))[0],
        "latent_dim": len(config.subdivisions),
        "attractors": attractors,
        "confusion": {"tp": report.tp, "fp": report.fp, "tn": report.tn, "fn": report.fn},
        "precision": report.precision,
        "recall": report.recall,
        "f_score": report.f_score,
        "counts": {
            "ambiguous_initial": report.ambiguous_initial,
            "unreachable_initial": report.unreachable_initial,
            "outside_valid_initial": report.outside_valid_initial,
            "clamped_initial": report.clamped_initial,
            "excluded_success_votes": votes.excluded_success,
            "excluded_failure_votes": votes.excluded_failure,
        },
        "predictions": {
            "success": [[i, p] for i, p in zip(report.success_ids, report.success_predictions)],
            "failure": [[i, p] for i, p in zip(report.failure_ids, report.failure_predictions)],
        },
    }


def _print_summary(task: str, dim: int, report) -> None:
    print(f"{'Task':<24}{'Latent Dim':>12}{'Precision':>12}{'Recall':>10}{'F-score':>10}")
    print(
        f"{task:<24}{dim:>12}{report.precision:>12.4f}"
        f"{report.recall:>10.4f}{report.f_score:>10.4f}"
    )


def cmd_evaluate(config: lio.AnalysisConfig, dataset_override: str | None) -> int:
    graph = _load_cached_graph(config)
    mg = _load_cached_morse(config, graph)
    roa = regions_of_attraction(graph, mg)
    validate_build(graph, mg, roa)
    eval_path = dataset_override or config.dataset_path
    _, labeled, votes, report = _evaluate(config, graph, mg, roa, eval_path)

    obj = _report_obj(config, eval_path, labeled, votes, report)
    lio._write_json(obj, os.path.join(config.output_path, REPORT_FILE))
    with open(os.path.join(config.output_path, DOT_FILE), "w", encoding="utf-8") as f:
        f.write(lio.export_morse_dot(labeled))
    _print_summary(obj["task"], obj["latent_dim"], report)
    return 0


def cmd_analyze(config: lio.AnalysisConfig) -> int:
    grid, dataset, dyn, graph, timings = stage_build_graph(config)
    os.makedirs(config.output_path, exist_ok=True)
    lio.save_graph(graph, os.path.join(config.output_path, GRAPH_FILE))

    t0 = time.perf_counter()
    mg = build_morse_graph(graph)
    roa = regions_of_attraction(graph, mg)
    validate_build(graph, mg, roa)
    timings["morse_roa_s"] = time.perf_counter() - t0
    _log(f"Morse graph: {len(mg)} nodes, {len(mg.attractors())} attractors")

    t0 = time.perf_counter()
    _, labeled, votes, report = _evaluate(
        config, graph, mg, roa, config.dataset_path
    )
    timings["evaluate_s"] = time.perf_counter() - t0

    meta = {"provenance": lio.provenance_of(config)}
    lio.save_morse(labeled, os.path.join(config.output_path, MORSE_FILE), meta)
    with open(os.path.join(config.output_path, DOT_FILE), "w", encoding="utf-8") as f:
        f.write(lio.export_morse_dot(labeled))
    with open(os.path.join(config.output_path, ROA_FILE), "w", encoding="utf-8") as f:
        f.write(lio.export_roa_csv(roa, grid))
    obj = _report_obj(config, config.dataset_path, labeled, votes, report)
    lio._write_json(obj, os.path.join(config.output_path, REPORT_FILE))
    _write_run_meta(config, graph, timings)

    _print_summary(obj["task"], obj["latent_dim"], report)
    return 0


def _write_run_meta(config: lio.AnalysisConfig, graph, timings: dict) -> None:
    import numpy

    obj = {
        "provenance": lio.provenance_of(config),
        "graph_stats": graph_stats(graph).to_dict(),
        "delta": graph.meta.get("delta"),
        "lipschitz_estimate": graph.meta.get("lipschitz_estimate"),
        "timings": timings,
        "versions": {"latentroa": __version__, "numpy": numpy.__version__},
        "workers": _worker_count(config),
    }
    lio._write_json(obj, os.path.join(config.output_path, RUN_META_FILE))


def cmd_stats(config: lio.AnalysisConfig) -> int:
    graph = _load_cached_graph(config)
    print(json.dumps(graph_stats(graph).to_dict(), sort_keys=True, indent=2))
    return 0


def cmd_synth(args) -> int:
    dataset = generate_trajectories(
        args.system,
        n_trajectories=args.trajectories,
        steps=args.steps,
        seed=args.seed,
        dim=args.dim,
        split=args.split,
    )
    lio.save_trajectories(dataset, args.out)
    n_s, n_f = dataset.label_counts()
    _log(
        f"wrote {args.out}: {len(dataset)} trajectories "
        f"({n_s} success / {n_f} failure), dim {dataset.dim}"
    )
    return 0


def cmd_forward(args) -> int:
    if (args.weights is None) == (args.system is None):
        raise lio.FormatError("forward needs exactly one of --weights or --system")
    obj = lio._read_json(args.points)
    points = obj["points"] if isinstance(obj, dict) else obj
    import numpy as np

    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise lio.FormatError("points file must hold a list of points")
    if args.weights is not None:
        dyn: DynamicsMap = NetworkDynamics(lio.load_dynamics_net(args.weights))
    else:
        dyn = make_analytic(args.system, dim=args.dim or pts.shape[1])
    images = dyn.rollout_batch(np.clip(pts, -1.0, 1.0), RolloutSpec(args.steps))
    out = {"dim": dyn.dim, "steps": args.steps, "images": images.tolist()}
    text = json.dumps(out, sort_keys=True, separators=(",", ":"))
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        print(text)
    return 0


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="latentroa",
        description="Morse-graph reachability analysis of latent dynamics",
    )
    parser.add_argument("--version", action="version", version=f"latentroa {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def with_config(p):
        p.add_argument("--config", required=True, help="analysis config JSON file")
        return p

    with_config(sub.add_parser("analyze", help="run the full pipeline"))
    with_config(sub.add_parser("build-graph", help="build and cache the transition graph"))
    with_config(sub.add_parser("morse", help="condense the cached graph into a Morse graph"))
    with_config(sub.add_parser("roa", help="export the ROA table from cached artifacts"))
    ev = with_config(sub.add_parser("evaluate", help="label attractors and classify initial states"))
    ev.add_argument(
        "--dataset",
        default=None,
        help="evaluate this dataset instead of the config's dataset",
    )
    with_config(sub.add_parser("stats", help="print statistics of the cached graph"))

    sy = sub.add_parser("synth", help="generate a labeled synthetic dataset")
    sy.add_argument("--system", required=True, choices=ANALYTIC_SYSTEMS)
    sy.add_argument("--trajectories", type=int, required=True)
    sy.add_argument("--steps", type=int, required=True)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--dim", type=int, default=None, help="dimension (contraction only)")
    sy.add_argument("--split", default="validation", choices=("train", "validation"))
    sy.add_argument("--out", required=True, help="output dataset path")

    fw = sub.add_parser("forward", help="rollout a dynamics map on a points file")
    fw.add_argument("--weights", default=None, help="network weights JSON")
    fw.add_argument("--system", default=None, choices=ANALYTIC_SYSTEMS)
    fw.add_argument("--dim", type=int, default=None)
    fw.add_argument("--points", required=True, help="JSON points file")
    fw.add_argument("--steps", type=int, default=1)
    fw.add_argument("--out", default=None, help="write result here instead of stdout")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "synth":
            return cmd_synth(args)
        if args.command == "forward":
            return cmd_forward(args)
        config = lio.load_config(args.config)
        if args.command == "analyze":
            return cmd_analyze(config)
        if args.command == "build-graph":
            return cmd_build_graph(config)
        if args.command == "morse":
            return cmd_morse(config)
        if args.command == "roa":
            return cmd_roa(config)
        if args.command == "evaluate":
            return cmd_evaluate(config, args.dataset)
        if args.command == "stats":
            return cmd_stats(config)
        raise AssertionError(f"unhandled command {args.command}")
    except (
        lio.FormatError,
        lio.StaleCacheError,
        NoSuccessRegionError,
        FileNotFoundError,
        ValueError,
    ) as e:
        _log(f"error: {e}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
