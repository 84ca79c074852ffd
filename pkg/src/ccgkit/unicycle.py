"""Unicycle vehicle simulation with compass, telemetry and range beacons.

Ground truth follows the discrete front-wheel model

    [p; q](k+1) = [p; q](k) + Ts * A(theta) [v; w](k),
    A(theta) = [[cos th, -l sin th], [sin th, l cos th]],  theta += Ts * w

while the observer only sees a compass reading within +-delta of the true
heading.  The heading error enters the position update through the known
input vector, so the filter treats the two extreme headings as uncertainty
vertices plus a small ball covering the arc between them.  Range beacons
(disks) and optionally telemetry (boxes) provide position updates.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .estimator import (
    MODE_CCG,
    MODE_CZ,
    STREAM_MEASUREMENT,
    STREAM_REDUCTION,
    FilterState,
    StepLog,
    VertexAffineMap,
    derive_rng,
    filter_step,
)
from .reduction import GUARANTEED, SAMPLED, ReductionSpec
from .sets import from_ellipsoid, from_interval
from .solve import DEFAULT_OPTIONS, SolverOptions, outer_polygon

__all__ = [
    "UnicycleState",
    "Beacon",
    "SensorSuite",
    "TrajectorySpec",
    "ScenarioConfig",
    "ScenarioResult",
    "ConfigError",
    "wrap_angle",
    "heading_matrix",
    "dynamics_step",
    "controller",
    "compass_measure",
    "beacon_measure",
    "build_vertex_maps",
    "reference",
    "run_scenario",
    "default_config",
]


def wrap_angle(theta: float) -> float:
    """Wrap to (-pi, pi]; values already in range pass through exactly."""
    if -math.pi < theta <= math.pi:
        return theta
    t = math.fmod(theta + math.pi, 2.0 * math.pi)
    if t <= 0.0:
        t += 2.0 * math.pi
    return t - math.pi


@dataclass(frozen=True)
class UnicycleState:
    p: float
    q: float
    theta: float

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(self.theta))

    @property
    def position(self) -> np.ndarray:
        return np.array([self.p, self.q])


@dataclass(frozen=True)
class Beacon:
    position: np.ndarray
    detect_radius: float
    range_noise_bound: float = 0.1

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float).reshape(2))
        if not self.detect_radius > self.range_noise_bound >= 0.0:
            raise ValueError("beacon requires detect_radius > range_noise_bound >= 0")


@dataclass(frozen=True)
class SensorSuite:
    """Compass bound (rad), per-axis telemetry bound and the beacon list."""

    compass_bound: float = math.radians(5.0)
    telemetry_bound: float = 0.05
    beacons: tuple[Beacon, ...] = ()

    def __post_init__(self):
        if self.compass_bound < 0 or self.telemetry_bound < 0:
            raise ValueError("sensor bounds must be nonnegative")


FIGURE8 = "figure8"
SPIRAL = "spiral"


@dataclass(frozen=True)
class TrajectorySpec:
    """Waypoint generator parameters.

    figure8: center + (A1 sin(w k Ts), A2 sin(2 w k Ts))
    spiral:  center + (r0 + growth k Ts) (cos(w k Ts), sin(w k Ts))
    """

    kind: str = FIGURE8
    center: np.ndarray = (14.0, 17.0)
    amplitudes: np.ndarray = (12.0, 7.0)
    omega: float = 2.0 * math.pi / 15.0
    r0: float = 2.0
    growth: float = 0.8

    def __post_init__(self):
        if self.kind not in (FIGURE8, SPIRAL):
            raise ValueError(f"unknown trajectory kind {self.kind!r}")
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float).reshape(2))
        object.__setattr__(self, "amplitudes", np.asarray(self.amplitudes, dtype=float).reshape(2))
        if self.omega <= 0 or np.any(self.amplitudes <= 0):
            raise ValueError("trajectory rates and amplitudes must be positive")


def heading_matrix(theta: float, l: float) -> np.ndarray:
    """Input-to-position map A(theta); det = l, so always invertible."""
    if l <= 0:
        raise ValueError("wheel offset l must be positive")
    ct, st = math.cos(theta), math.sin(theta)
    return np.array([[ct, -l * st], [st, l * ct]])


def dynamics_step(s: UnicycleState, u, Ts: float, l: float) -> UnicycleState:
    """One discrete step; heading integrates the rotation input."""
    u = np.asarray(u, dtype=float).reshape(2)
    pos = s.position + Ts * heading_matrix(s.theta, l) @ u
    return UnicycleState(pos[0], pos[1], s.theta + Ts * u[1])


def controller(pos_hat, theta_hat: float, tau_k, tau_k1, d, Ts: float, l: float) -> np.ndarray:
    """Waypoint-tracking law; the 0.5 position gain gives geometric convergence."""
    pos_hat = np.asarray(pos_hat, dtype=float).reshape(2)
    tau_k = np.asarray(tau_k, dtype=float).reshape(2)
    tau_k1 = np.asarray(tau_k1, dtype=float).reshape(2)
    d = np.asarray(d, dtype=float).reshape(2)
    A_inv = np.linalg.inv(heading_matrix(theta_hat, l))
    return A_inv @ (tau_k1 - tau_k / 2.0 - 0.5 * pos_hat + d) / Ts


def compass_measure(theta: float, rng: np.random.Generator, delta: float) -> float:
    """Heading reading with uniform error in [-delta, delta], wrapped."""
    return wrap_angle(theta + rng.uniform(-delta, delta))


def beacon_measure(position, beacon: Beacon, rng: np.random.Generator):
    """Range reading and its consistent position set, or None when out of range.

    The returned disk (radius r_hat + noise bound, centered on the beacon) is
    the convex outer bound of the range annulus, so it always contains the
    true position.
    """
    position = np.asarray(position, dtype=float).reshape(2)
    rho = float(np.linalg.norm(position - beacon.position))
    if rho > beacon.detect_radius:
        return None
    eps = beacon.range_noise_bound
    r_hat = max(0.0, rho + rng.uniform(-eps, eps))
    radius = r_hat + eps
    disk = from_ellipsoid(radius * np.eye(2), beacon.position)
    return r_hat, disk


def build_vertex_maps(theta_hat: float, delta: float, u, Ts: float, l: float):
    """Vertex maps and arc remainder covering the compass uncertainty.

    The position increment Ts A(theta_hat + e) u over |e| <= delta traces a
    circular arc of radius Ts ||diag(1, l) u||.  The chord between the two
    extreme headings plus a ball of the sagitta radius
    Ts ||diag(1, l) u|| (1 - cos delta) covers every arc point, so the filter
    can treat the heading error as two affine vertices and a small additive
    disturbance.
    """
    if not abs(delta) < math.pi / 2:
        raise ValueError("compass bound must be below pi/2 for the chord cover")
    u = np.asarray(u, dtype=float).reshape(2)
    identity = np.eye(2)
    offsets = [Ts * heading_matrix(theta_hat + s * delta, l) @ u for s in (-1.0, 1.0)]
    vertices = [VertexAffineMap(identity, off) for off in offsets]
    arc_radius = Ts * float(np.linalg.norm(np.array([u[0], l * u[1]])))
    sagitta = arc_radius * (1.0 - math.cos(delta))
    remainder = from_ellipsoid(sagitta * np.eye(2), np.zeros(2))
    return vertices, remainder


def reference(spec: TrajectorySpec, k: int, Ts: float) -> np.ndarray:
    """Waypoint tau(k)."""
    a = spec.omega * k * Ts
    if spec.kind == FIGURE8:
        return spec.center + np.array(
            [spec.amplitudes[0] * math.sin(a), spec.amplitudes[1] * math.sin(2 * a)]
        )
    r = spec.r0 + spec.growth * k * Ts
    return spec.center + r * np.array([math.cos(a), math.sin(a)])


# ---------------------------------------------------------------------------
# Scenario configuration and execution
# ---------------------------------------------------------------------------

class ConfigError(ValueError):
    """Malformed scenario configuration; the message names the field."""


_CONFIG_KEYS = {
    "Ts", "steps", "l", "trajectory", "beacons", "compass_deg",
    "telemetry_bound", "init_halfwidth", "gamma", "reduction_mode",
    "directions_K", "seed", "filter_mode", "telemetry_updates",
    "snapshot_every",
}


@dataclass(frozen=True)
class ScenarioConfig:
    """Declarative simulation input; see default_config for the JSON shape."""

    Ts: float = 0.1
    steps: int = 150
    l: float = 0.1
    trajectory: TrajectorySpec = field(default_factory=TrajectorySpec)
    beacons: tuple[Beacon, ...] = (
        Beacon((5.0, 25.0), 5.0, 0.1),
        Beacon((23.0, 10.0), 2.0, 0.1),
    )
    compass_deg: float = 5.0
    telemetry_bound: float = 0.05
    init_halfwidth: float = 0.5
    gamma: int = 10
    reduction_mode: str = GUARANTEED
    directions_K: int = 64
    seed: int = 0
    filter_mode: str = MODE_CCG
    telemetry_updates: bool = False
    snapshot_every: int = 40

    def __post_init__(self):
        if self.Ts <= 0:
            raise ConfigError("Ts must be positive")
        if self.steps < 0:
            raise ConfigError("steps must be nonnegative")
        if self.l <= 0:
            raise ConfigError("l must be positive")
        if not 0 <= self.compass_deg < 90:
            raise ConfigError("compass_deg must lie in [0, 90)")
        if self.telemetry_bound < 0:
            raise ConfigError("telemetry_bound must be nonnegative")
        if self.init_halfwidth <= 0:
            raise ConfigError("init_halfwidth must be positive")
        if self.gamma < 1:
            raise ConfigError("gamma must be at least 1")
        if self.reduction_mode not in (GUARANTEED, SAMPLED):
            raise ConfigError(
                f"reduction_mode must be '{GUARANTEED}' or '{SAMPLED}'"
            )
        if self.directions_K < 3:
            raise ConfigError("directions_K must be at least 3")
        if self.filter_mode not in (MODE_CCG, MODE_CZ):
            raise ConfigError(f"filter_mode must be '{MODE_CCG}' or '{MODE_CZ}'")
        if self.snapshot_every < 1:
            raise ConfigError("snapshot_every must be at least 1")

    @property
    def compass_bound(self) -> float:
        return math.radians(self.compass_deg)

    @property
    def sensors(self) -> SensorSuite:
        return SensorSuite(self.compass_bound, self.telemetry_bound, self.beacons)

    def to_dict(self) -> dict:
        t = self.trajectory
        traj = {
            "kind": t.kind,
            "center": t.center.tolist(),
            "amplitudes": t.amplitudes.tolist(),
            "omega": t.omega,
        }
        if t.kind == SPIRAL:
            traj["r0"] = t.r0
            traj["growth"] = t.growth
        return {
            "Ts": self.Ts,
            "steps": self.steps,
            "l": self.l,
            "trajectory": traj,
            "beacons": [
                {"pos": b.position.tolist(), "radius": b.detect_radius, "noise": b.range_noise_bound}
                for b in self.beacons
            ],
            "compass_deg": self.compass_deg,
            "telemetry_bound": self.telemetry_bound,
            "init_halfwidth": self.init_halfwidth,
            "gamma": self.gamma,
            "reduction_mode": self.reduction_mode,
            "directions_K": self.directions_K,
            "seed": self.seed,
            "filter_mode": self.filter_mode,
            "telemetry_updates": self.telemetry_updates,
            "snapshot_every": self.snapshot_every,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        unknown = set(d) - _CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        kwargs = {k: d[k] for k in d if k not in ("trajectory", "beacons")}
        if "trajectory" in d:
            td = dict(d["trajectory"])
            t_unknown = set(td) - {"kind", "center", "amplitudes", "omega", "r0", "growth"}
            if t_unknown:
                raise ConfigError(f"unknown trajectory fields: {sorted(t_unknown)}")
            try:
                kwargs["trajectory"] = TrajectorySpec(**td)
            except (TypeError, ValueError) as err:
                raise ConfigError(f"trajectory: {err}") from err
        if "beacons" in d:
            beacons = []
            for i, bd in enumerate(d["beacons"]):
                b_unknown = set(bd) - {"pos", "radius", "noise"}
                if b_unknown:
                    raise ConfigError(f"beacons[{i}]: unknown fields {sorted(b_unknown)}")
                try:
                    beacons.append(
                        Beacon(bd["pos"], bd["radius"], bd.get("noise", 0.1))
                    )
                except (KeyError, ValueError) as err:
                    raise ConfigError(f"beacons[{i}]: {err}") from err
            kwargs["beacons"] = tuple(beacons)
        try:
            return cls(**kwargs)
        except TypeError as err:
            raise ConfigError(str(err)) from err

    @classmethod
    def from_file(cls, path) -> "ScenarioConfig":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as err:
                raise ConfigError(f"config is not valid JSON: {err}") from err
        return cls.from_dict(data)


def default_config(kind: str = FIGURE8, **overrides) -> ScenarioConfig:
    """Built-in figure-8 or spiral scenario (spiral widens the beacon ranges)."""
    if kind == FIGURE8:
        base = ScenarioConfig()
    elif kind == SPIRAL:
        base = ScenarioConfig(
            trajectory=TrajectorySpec(kind=SPIRAL, omega=4.0 * math.pi / 15.0),
            beacons=(Beacon((5.0, 25.0), 10.0, 0.1), Beacon((23.0, 10.0), 7.0, 0.1)),
        )
    else:
        raise ConfigError(f"unknown scenario kind {kind!r}")
    if overrides:
        d = base.to_dict()
        d.update(overrides)
        return ScenarioConfig.from_dict(d)
    return base


@dataclass
class Snapshot:
    k: int
    polygon: np.ndarray
    truth: np.ndarray


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    logs: list[StepLog]
    snapshots: list[Snapshot]
    truth: np.ndarray  # (steps + 1, 3): p, q, theta
    wall_time: float


def run_scenario(
    config: ScenarioConfig, options: SolverOptions = DEFAULT_OPTIONS
) -> ScenarioResult:
    """Simulate ground truth and run the set-valued filter against it.

    Truth and measurement noise draw from a stream keyed only by the seed, and
    the reduction directions from a per-step stream, so runs with different
    filter modes share identical truth and directions.  Raises
    EmptyEstimateError if an update empties the estimate.
    """
    t_start = time.perf_counter()
    Ts, l = config.Ts, config.l
    sensors = config.sensors
    delta = sensors.compass_bound
    rng_meas = derive_rng(config.seed, STREAM_MEASUREMENT)

    tau0 = reference(config.trajectory, 0, Ts)
    tau1 = reference(config.trajectory, 1, Ts)
    head0 = math.atan2(tau1[1] - tau0[1], tau1[0] - tau0[0])
    state = UnicycleState(tau0[0], tau0[1], head0)

    X0 = from_interval(state.position - config.init_halfwidth,
                       state.position + config.init_halfwidth)
    fs = FilterState(
        X=X0,
        k=0,
        reduction=ReductionSpec(config.gamma, config.reduction_mode, config.seed),
        mode=config.filter_mode,
    )

    truth = np.empty((config.steps + 1, 3))
    truth[0] = (state.p, state.q, state.theta)
    logs: list[StepLog] = []
    snapshots: list[Snapshot] = [
        Snapshot(0, outer_polygon(X0, config.directions_K, options), state.position.copy())
    ]

    # One telemetry reading per time index, shared by the controller and
    # (when enabled) the filter update; drawing it unconditionally keeps the
    # noise stream identical whether or not the filter consumes it.
    def telemetry(position):
        noise = rng_meas.uniform(-sensors.telemetry_bound, sensors.telemetry_bound, 2)
        return position + noise

    pos_hat = telemetry(state.position)
    for k in range(config.steps):
        theta_hat = compass_measure(state.theta, rng_meas, delta)
        u = controller(pos_hat, theta_hat,
                       reference(config.trajectory, k, Ts),
                       reference(config.trajectory, k + 1, Ts),
                       np.zeros(2), Ts, l)

        vertices, remainder = build_vertex_maps(theta_hat, delta, u, Ts, l)
        state = dynamics_step(state, u, Ts, l)
        truth[k + 1] = (state.p, state.q, state.theta)

        measurements = []
        for beacon in sensors.beacons:
            hit = beacon_measure(state.position, beacon, rng_meas)
            if hit is not None:
                measurements.append((np.eye(2), hit[1]))
        pos_hat = telemetry(state.position)
        if config.telemetry_updates:
            box = from_interval(pos_hat - sensors.telemetry_bound,
                                pos_hat + sensors.telemetry_bound)
            measurements.append((np.eye(2), box))

        fs, log = filter_step(
            fs,
            vertices,
            measurements,
            Bu=None,
            L=None,
            D=remainder,
            truth=state.position,
            volume_directions=config.directions_K,
            rng=derive_rng(config.seed, STREAM_REDUCTION, k),
            options=options,
        )
        logs.append(log)
        if (k + 1) % config.snapshot_every == 0:
            snapshots.append(
                Snapshot(k + 1,
                         outer_polygon(fs.X, config.directions_K, options),
                         state.position.copy())
            )
    return ScenarioResult(config, logs, snapshots, truth,
                          time.perf_counter() - t_start)
