#!/usr/bin/env python3
"""Analyze a serialized feed-forward network through the CLI, end to end.

Builds a tiny tanh-head network whose output pulls points toward a learned
corner, writes it in the interchange format, synthesizes a dataset, and runs
the staged commands exactly as a shell user would: build-graph, morse, roa,
evaluate, stats. Artifacts land in a scratch directory next to this script.
"""

import json
import os
import shutil

import numpy as np

from latentroa import DynamicsNet, Layer, NetworkDynamics, generate_trajectories
from latentroa.cli import main as cli
from latentroa.io import save_dynamics_net, save_trajectories

work = os.path.join(os.path.dirname(os.path.abspath(__file__)), "network_run")
shutil.rmtree(work, ignore_errors=True)
os.makedirs(work)

# A hand-made dynamics network: tanh(1.2 x) per coordinate, which saturates
# toward the corners of the cube; (sign pattern of the start decides the
# corner, so the system has four attracting corners).
d = 2
net = DynamicsNet(
    input_dim=d,
    layers=(Layer(weights=1.2 * np.eye(d), bias=np.zeros(d), activation="tanh"),),
)
weights_path = os.path.join(work, "net.json")
save_dynamics_net(net, weights_path)
print(f"wrote {weights_path}")

# Trajectories simulated through the same network; label by whether the final
# point is in the positive-x half (an arbitrary but consistent outcome rule).
rng = np.random.default_rng(0)
from latentroa import Trajectory, TrajectoryDataset

dyn = NetworkDynamics(net)
starts = rng.uniform(-1, 1, size=(300, d))
tracks = [starts]
for _ in range(20):
    tracks.append(dyn.map_batch(tracks[-1]))
points = np.stack(tracks, axis=1)
trajs = tuple(
    Trajectory(
        id=f"net-{i:03d}",
        label=int(points[i, -1, 0] > 0),
        points=points[i],
    )
    for i in range(points.shape[0])
)
dataset = TrajectoryDataset(dim=d, split="train", trajectories=trajs)
dataset_path = os.path.join(work, "train.json")
save_trajectories(dataset, dataset_path)
print(f"wrote {dataset_path} ({dataset.label_counts()})")

config = {
    "subdivisions": [24, 24],
    "dataset": "train.json",
    "output_dir": "out",
    "dynamics": {"weights": "net.json"},
    "rollout_steps": 8,
    "safety_factor": 1.5,
    "lipschitz_samples": 10000,
    "seed": 0,
}
config_path = os.path.join(work, "config.json")
with open(config_path, "w") as f:
    json.dump(config, f, indent=2)

for stage in (["build-graph"], ["morse"], ["roa"], ["evaluate"], ["stats"]):
    print(f"\n$ latentroa {stage[0]} --config {config_path}")
    code = cli(stage + ["--config", config_path])
    assert code == 0, f"stage {stage[0]} failed"

print(f"\nartifacts in {os.path.join(work, 'out')}:")
for name in sorted(os.listdir(os.path.join(work, "out"))):
    print(f"  {name}")
