"""Latent dynamics maps: serialized feed-forward networks and analytic test systems.

A :class:`DynamicsMap` is any map of the latent cube into itself. Two kinds
exist: :class:`NetworkDynamics` wraps a :class:`DynamicsNet` (the serialized
feed-forward network whose tanh head keeps outputs inside the cube), and
:class:`AnalyticMap` provides closed-form systems with known attractors and
known Lipschitz constants, so the whole graph/Morse/ROA pipeline can be
exercised and oracle-checked without any trained model.

Every map application clamps its output into [-1, 1]^d; for tanh-headed
networks that is a no-op, for analytic maps and test networks it is part of
the map's definition. Rollouts are plain r-fold composition of the clamped
step, so rollout(p, a + b) == rollout(rollout(p, a), b) exactly.

The module also provides the empirical Lipschitz estimator for the r-step
composed map and the ball-radius formula derived from it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import DOMAIN_HI, DOMAIN_LO, LatentGrid

ACTIVATIONS = ("tanh", "relu", "identity")

# Growth rate of the built-in bistable recurrence x -> x + RATE * x * (1 - x^2).
BISTABLE_RATE = 0.3
# Its exact Lipschitz constant on [-1, 1]: max |1 + RATE - 3 * RATE * x^2| = 1 + RATE at x = 0.
BISTABLE_LIPSCHITZ = 1.0 + BISTABLE_RATE


def _apply_activation(x: np.ndarray, tag: str) -> np.ndarray:
    if tag == "tanh":
        return np.tanh(x)
    if tag == "relu":
        return np.maximum(x, 0.0)
    if tag == "identity":
        return x
    raise ValueError(f"unknown activation {tag!r}")


@dataclass(frozen=True)
class Layer:
    """One dense layer: y = activation(weights @ x + bias)."""

    weights: np.ndarray  # (rows, cols)
    bias: np.ndarray  # (rows,)
    activation: str

    def __post_init__(self) -> None:
        w = np.asarray(self.weights, dtype=float)
        b = np.asarray(self.bias, dtype=float)
        if w.ndim != 2:
            raise ValueError("layer weights must be a 2-d matrix")
        if b.shape != (w.shape[0],):
            raise ValueError(f"bias shape {b.shape} does not match {w.shape[0]} rows")
        if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
            raise ValueError("layer has non-finite weights or bias")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)


@dataclass(frozen=True)
class DynamicsNet:
    """Feed-forward network on the latent space, input_dim -> input_dim.

    Consecutive layer shapes must chain, and the network must map the cube to
    itself overall. Files loaded through :func:`latentroa.io.load_dynamics_net`
    additionally require a tanh output head; directly constructed nets (e.g.
    identity maps in tests) may use any head, and evaluation clamps for them.
    """

    input_dim: int
    layers: tuple[Layer, ...]

    def __post_init__(self) -> None:
        if self.input_dim < 1:
            raise ValueError("input_dim must be positive")
        if not self.layers:
            raise ValueError("network needs at least one layer")
        layers = tuple(self.layers)
        prev = self.input_dim
        for i, layer in enumerate(layers):
            rows, cols = layer.weights.shape
            if cols != prev:
                raise ValueError(
                    f"layer {i} expects {cols} inputs but receives {prev}"
                )
            prev = rows
        if prev != self.input_dim:
            raise ValueError(
                f"final layer has {prev} rows, expected {self.input_dim}"
            )
        object.__setattr__(self, "layers", layers)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Raw network output for a batch of points, shape (N, d) -> (N, d)."""
        x = np.asarray(points, dtype=float)
        for layer in self.layers:
            x = _apply_activation(x @ layer.weights.T + layer.bias, layer.activation)
        if not np.all(np.isfinite(x)):
            raise FloatingPointError("network produced non-finite values")
        return x


class DynamicsMap:
    """A map of [-1, 1]^d into itself, applied pointwise or in batch."""

    dim: int

    def _raw(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def map_batch(self, points: np.ndarray) -> np.ndarray:
        """One step applied to an (N, d) batch, output clamped into the cube."""
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.dim:
            raise ValueError(f"expected (N, {self.dim}) points, got {points.shape}")
        return np.clip(self._raw(points), DOMAIN_LO, DOMAIN_HI)

    def forward(self, p: np.ndarray) -> np.ndarray:
        """One step applied to a single point."""
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,):
            raise ValueError(f"point has shape {p.shape}, expected ({self.dim},)")
        return self.map_batch(p[np.newaxis, :])[0]

    def rollout_batch(self, points: np.ndarray, steps: "RolloutSpec | int") -> np.ndarray:
        """r-fold composition on an (N, d) batch."""
        r = steps.steps if isinstance(steps, RolloutSpec) else int(steps)
        if r < 1:
            raise ValueError("rollout needs at least one step")
        x = np.asarray(points, dtype=float)
        for _ in range(r):
            x = self.map_batch(x)
        return x

    def rollout(self, p: np.ndarray, steps: "RolloutSpec | int") -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return self.rollout_batch(p[np.newaxis, :], steps)[0]


@dataclass(frozen=True)
class RolloutSpec:
    """Number of recursive rollout steps of the map."""

    steps: int

    def __post_init__(self) -> None:
        if int(self.steps) < 1:
            raise ValueError("rollout steps must be >= 1")
        object.__setattr__(self, "steps", int(self.steps))


class NetworkDynamics(DynamicsMap):
    """Dynamics realized by a serialized feed-forward network."""

    def __init__(self, net: DynamicsNet):
        self.net = net
        self.dim = net.input_dim

    def _raw(self, points: np.ndarray) -> np.ndarray:
        return self.net.evaluate(points)


@dataclass(frozen=True)
class AnalyticMap(DynamicsMap):
    """Closed-form test system with known attractors and Lipschitz constant.

    ``attractors`` lists the fixed points trajectories converge to;
    ``success_attractor`` is the index of the one designated as the success
    outcome when synthesizing labeled datasets.
    """

    name: str
    dim: int
    true_lipschitz: float
    attractors: tuple[tuple[float, ...], ...]
    success_attractor: int
    params: dict = field(default_factory=dict)

    def _raw(self, points: np.ndarray) -> np.ndarray:
        if self.name == "contraction":
            return self.params["rate"] * points
        if self.name == "bistable_1d":
            x = points
            return x + BISTABLE_RATE * x * (1.0 - x**2)
        if self.name == "bistable_2d":
            out = 0.5 * points
            x = points[:, 0]
            out[:, 0] = x + BISTABLE_RATE * x * (1.0 - x**2)
            return out
        raise ValueError(f"unknown analytic system {self.name!r}")


ANALYTIC_SYSTEMS = ("contraction", "bistable_1d", "bistable_2d")


def make_analytic(name: str, dim: int | None = None, rate: float = 0.5) -> AnalyticMap:
    """Build one of the built-in analytic systems by name.

    ``contraction`` works in any dimension (default 2) and has a single
    attractor at the origin; ``bistable_1d`` / ``bistable_2d`` are fixed to 1
    and 2 dimensions with attractors at -1/+1 and (-1, 0)/(1, 0), the positive
    one designated as success.
    """
    if name == "contraction":
        d = 2 if dim is None else int(dim)
        if d < 1:
            raise ValueError("contraction needs dim >= 1")
        if not 0 <= rate < 1:
            raise ValueError("contraction rate must lie in [0, 1)")
        return AnalyticMap(
            name="contraction",
            dim=d,
            true_lipschitz=rate,
            attractors=((0.0,) * d,),
            success_attractor=0,
            params={"rate": rate},
        )
    if name == "bistable_1d":
        if dim not in (None, 1):
            raise ValueError("bistable_1d is one-dimensional")
        return AnalyticMap(
            name="bistable_1d",
            dim=1,
            true_lipschitz=BISTABLE_LIPSCHITZ,
            attractors=((-1.0,), (1.0,)),
            success_attractor=1,
        )
    if name == "bistable_2d":
        if dim not in (None, 2):
            raise ValueError("bistable_2d is two-dimensional")
        return AnalyticMap(
            name="bistable_2d",
            dim=2,
            true_lipschitz=BISTABLE_LIPSCHITZ,
            attractors=((-1.0, 0.0), (1.0, 0.0)),
            success_attractor=1,
        )
    raise ValueError(f"unknown analytic system {name!r}; choose from {ANALYTIC_SYSTEMS}")


# ----------------------------------------------------------------------
# Lipschitz estimation and ball radius
# ----------------------------------------------------------------------

_CHUNK = 4096


def estimate_lipschitz(
    m: DynamicsMap,
    spec: RolloutSpec | int,
    domain_samples: int = 10_000,
    pair_scale: float = 1e-2,
    seed: int = 0,
) -> float:
    """Empirical Lipschitz constant of the r-step composed map.

    Samples ``domain_samples`` base points uniformly in the cube, perturbs
    each by a random offset of magnitude <= ``pair_scale`` (folded back into
    the domain), and returns the largest observed ratio
    ||rollout(x') - rollout(x)|| / ||x' - x||. Sampling lower-bounds the true
    supremum. The sample budget is split into fixed-size chunks, each driven
    by its own child seed, so results do not depend on how chunks are
    scheduled across workers.
    """
    if domain_samples < 2:
        raise ValueError("need at least 2 samples")
    if pair_scale <= 0:
        raise ValueError("pair_scale must be positive")
    r = spec if isinstance(spec, RolloutSpec) else RolloutSpec(spec)

    root = np.random.SeedSequence(seed)
    n_chunks = (domain_samples + _CHUNK - 1) // _CHUNK
    children = root.spawn(n_chunks)

    best = 0.0
    remaining = domain_samples
    for child in children:
        n = min(_CHUNK, remaining)
        remaining -= n
        rng = np.random.default_rng(child)
        x = rng.uniform(DOMAIN_LO, DOMAIN_HI, size=(n, m.dim))
        eff = np.zeros_like(x)
        norms = np.zeros(n)
        todo = np.arange(n)
        while todo.size:  # resample degenerate pairs (zero effective offset)
            direction = rng.normal(size=(todo.size, m.dim))
            dnorm = np.linalg.norm(direction, axis=1, keepdims=True)
            dnorm[dnorm == 0] = 1.0
            mag = (1.0 - rng.uniform(size=(todo.size, 1))) * pair_scale
            x2 = np.clip(x[todo] + direction / dnorm * mag, DOMAIN_LO, DOMAIN_HI)
            e = x2 - x[todo]
            en = np.linalg.norm(e, axis=1)
            ok = en > 0
            eff[todo[ok]] = e[ok]
            norms[todo[ok]] = en[ok]
            todo = todo[~ok]
        fx = m.rollout_batch(x, r)
        fx2 = m.rollout_batch(x + eff, r)
        ratios = np.linalg.norm(fx2 - fx, axis=1) / norms
        best = max(best, float(ratios.max()))
    return best


def delta_radius(l_hat: float, g: LatentGrid, safety_factor: float = 1.5) -> float:
    """Ball radius absorbing within-cell divergence of the r-step map.

    Any point of a cell lies within half a cell diagonal of some corner, so
    its r-step image lies within L_r times that distance of the corner's
    image; the safety factor covers the estimator undershooting the true
    constant.
    """
    if l_hat < 0:
        raise ValueError("Lipschitz estimate must be non-negative")
    if safety_factor < 1:
        raise ValueError("safety_factor must be >= 1")
    return safety_factor * l_hat * g.half_diagonal
