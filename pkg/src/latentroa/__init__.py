"""Morse-graph reachability analysis of learned latent dynamics.

The pipeline: discretize the latent cube into a grid, propagate cell corners
through the (learned or analytic) dynamics for r steps, connect cells through
delta-ball outer approximation into the transition graph F, condense F into
the Morse graph, read attractors and regions of attraction off it, label the
attractors from terminal latents of labeled trajectories, and score outcome
prediction of initial states.
"""

__version__ = "0.1.0"

from .data import EndpointSets, Trajectory, TrajectoryDataset, endpoint_sets
from .dynamics import (
    ANALYTIC_SYSTEMS,
    AnalyticMap,
    DynamicsMap,
    DynamicsNet,
    Layer,
    NetworkDynamics,
    RolloutSpec,
    delta_radius,
    estimate_lipschitz,
    make_analytic,
)
from .evaluate import (
    ClassificationReport,
    NoSuccessRegionError,
    classify_initial_states,
    confusion_metrics,
    label_attractors,
)
from .grid import CellBox, LatentGrid, clamp_to_domain
from .morse import (
    InvariantViolation,
    MorseGraph,
    MorseNode,
    RoaAssignment,
    build_morse_graph,
    recurrent_components,
    regions_of_attraction,
    strongly_connected_components,
    validate_build,
)
from .synth import generate_trajectories, label_by_attractor
from .transition import (
    GraphStats,
    TransitionGraph,
    ValidCellSet,
    all_cells,
    build_transition_graph,
    graph_stats,
    valid_cells,
)

__all__ = [
    "__version__",
    "ANALYTIC_SYSTEMS",
    "AnalyticMap",
    "CellBox",
    "ClassificationReport",
    "DynamicsMap",
    "DynamicsNet",
    "EndpointSets",
    "GraphStats",
    "InvariantViolation",
    "LatentGrid",
    "Layer",
    "MorseGraph",
    "MorseNode",
    "NetworkDynamics",
    "NoSuccessRegionError",
    "RoaAssignment",
    "RolloutSpec",
    "Trajectory",
    "TrajectoryDataset",
    "TransitionGraph",
    "ValidCellSet",
    "all_cells",
    "build_morse_graph",
    "build_transition_graph",
    "clamp_to_domain",
    "classify_initial_states",
    "confusion_metrics",
    "delta_radius",
    "endpoint_sets",
    "estimate_lipschitz",
    "generate_trajectories",
    "graph_stats",
    "label_attractors",
    "label_by_attractor",
    "make_analytic",
    "recurrent_components",
    "regions_of_attraction",
    "strongly_connected_components",
    "valid_cells",
    "validate_build",
]
