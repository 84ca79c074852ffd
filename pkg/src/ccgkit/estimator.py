"""Set-valued filter for uncertain linear parameter-varying models.

One step of the model is

    x(k+1) = (F + sum_l Delta_l U_l) x(k) + B u(k) + L d(k),   |Delta_l| <= 1
    y(k)   = C x(k) + N w(k)

with bounded disturbance/noise sets.  Propagation applies every vertex of the
uncertainty cube as an affine map and takes the exact convex hull of the
images, then adds the known input and the mapped disturbance set; the update
intersects with the set of states consistent with each measurement.  A
ray-shooting reduction caps the representation size once per step, after the
measurement geometry has participated in the estimate.
"""

from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field, replace

import numpy as np

from .hull import convex_hull_many
from .reduction import ReductionSpec, reduce_to_order
from .sets import CCG, linear_map, minkowski_sum, intersection_under_map, relax_to_box_blocks, translate
from .solve import DEFAULT_OPTIONS, SolverOptions, contains_point, is_empty, volume_2d

__all__ = [
    "MODE_CCG",
    "MODE_CZ",
    "UncertainStepModel",
    "VertexAffineMap",
    "FilterState",
    "StepLog",
    "EmptyEstimateError",
    "enumerate_vertices",
    "propagate",
    "build_output_set",
    "update",
    "filter_step",
    "derive_rng",
]

MODE_CCG = "ccg"
MODE_CZ = "cz"

# Stream tags for derive_rng: simulation truth/measurement noise must never
# share a stream with filter-side direction sampling, so filter settings
# cannot perturb the simulated world.
STREAM_MEASUREMENT = 1
STREAM_REDUCTION = 2


def derive_rng(seed: int, *key: int) -> np.random.Generator:
    """Independent deterministic generator for stream ``(seed, *key)``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, key)]))


@dataclass(frozen=True)
class UncertainStepModel:
    """Matrices of one model step at the measured parameter value.

    ``U`` lists the uncertainty directions; magnitudes are normalized so each
    unknown weight lies in ``[-1, 1]``.
    """

    F: np.ndarray
    U: tuple[np.ndarray, ...] = ()
    B: np.ndarray | None = None
    L: np.ndarray | None = None
    C: np.ndarray | None = None
    N: np.ndarray | None = None

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        if F.shape[0] != F.shape[1]:
            raise ValueError("F must be square")
        object.__setattr__(self, "F", F)
        object.__setattr__(
            self, "U", tuple(np.atleast_2d(np.asarray(u, dtype=float)) for u in self.U)
        )
        for u in self.U:
            if u.shape != F.shape:
                raise ValueError("every uncertainty direction must match F's shape")
        for name in ("B", "L", "C", "N"):
            m = getattr(self, name)
            if m is not None:
                object.__setattr__(self, name, np.atleast_2d(np.asarray(m, dtype=float)))
        n = F.shape[0]
        if self.B is not None and self.B.shape[0] != n:
            raise ValueError("B must have one row per state")
        if self.L is not None and self.L.shape[0] != n:
            raise ValueError("L must have one row per state")
        if self.C is not None and self.C.shape[1] != n:
            raise ValueError("C must have one column per state")
        if self.N is not None and self.C is not None and self.N.shape[0] != self.C.shape[0]:
            raise ValueError("N must have one row per output")


@dataclass(frozen=True)
class VertexAffineMap:
    """One vertex of the uncertainty cube as an affine state map ``x -> F x + t``.

    The offset generalizes the pure-matrix vertex: uncertainty entering
    through a known input vector (the unicycle's heading error) reuses the
    same hull-based propagation with ``F = I`` and the vertex translates in
    ``t``.
    """

    F: np.ndarray
    t: np.ndarray

    def __post_init__(self):
        F = np.atleast_2d(np.asarray(self.F, dtype=float))
        t = np.asarray(self.t, dtype=float).reshape(-1)
        if F.shape[0] != t.shape[0]:
            raise ValueError("offset length must match the map's row count")
        if not (np.all(np.isfinite(F)) and np.all(np.isfinite(t))):
            raise ValueError("vertex map entries must be finite")
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "t", t)


@dataclass(frozen=True)
class FilterState:
    """Current estimate, step index, reduction budget and set mode.

    The estimate is nonempty for any well-posed scenario; emptiness after an
    update signals inconsistent noise bounds and is raised, never swallowed.
    """

    X: CCG
    k: int = 0
    reduction: ReductionSpec = field(default_factory=lambda: ReductionSpec(10))
    mode: str = MODE_CCG


@dataclass(frozen=True)
class StepLog:
    """Per-iteration record; see report.write_steps_csv for the CSV layout."""

    k: int
    volume: float
    step_ms: float
    n_g_pre: int
    n_g_post: int
    n_c_post: int
    contained: bool | None
    beacon_active: bool


class EmptyEstimateError(RuntimeError):
    """The update emptied the estimate: measurement and model bounds disagree."""

    def __init__(self, k: int):
        super().__init__(
            f"estimate became empty at step {k}: a measurement is inconsistent "
            "with the propagated set (violated noise or disturbance bounds)"
        )
        self.k = k


def enumerate_vertices(model: UncertainStepModel, cap: int = 8) -> list[VertexAffineMap]:
    """All ``2**n_Delta`` signed combinations ``F + sum s_l U_l``.

    The exponential blow-up is the price of exact uncertainty propagation;
    ``cap`` guards against accidental huge enumerations.
    """
    n_delta = len(model.U)
    if n_delta > cap:
        raise ValueError(
            f"{n_delta} uncertainty directions exceed the vertex cap {cap} "
            f"(2**{n_delta} maps)"
        )
    n = model.F.shape[0]
    zero = np.zeros(n)
    if n_delta == 0:
        return [VertexAffineMap(model.F, zero)]
    out = []
    for signs in itertools.product((-1.0, 1.0), repeat=n_delta):
        F = model.F.copy()
        for s, U in zip(signs, model.U):
            F = F + s * U
        out.append(VertexAffineMap(F, zero))
    return out


def propagate(
    X: CCG,
    vertices: list[VertexAffineMap],
    Bu=None,
    L=None,
    D: CCG | None = None,
) -> CCG:
    """Exact one-step propagation through the uncertain dynamics.

    Hulls the affine vertex images of ``X``, shifts by the known input
    contribution ``Bu`` and adds the mapped disturbance set ``L D``.
    """
    if not vertices:
        raise ValueError("propagate requires at least one vertex map")
    images = [linear_map(v.F, v.t, X) for v in vertices]
    out = convex_hull_many(images)
    if Bu is not None:
        Bu = np.asarray(Bu, dtype=float).reshape(-1)
        if np.any(Bu):
            out = translate(out, Bu)
    if D is not None:
        mapped = D if L is None else linear_map(L, np.zeros(np.atleast_2d(L).shape[0]), D)
        out = minkowski_sum(out, mapped)
    return out


def build_output_set(y, N, W: CCG) -> CCG:
    """States of the output space consistent with measurement ``y``.

    ``y = C x + N w`` with ``w in W`` means ``C x in {y} - N W``, which is the
    affine image ``(-N) W + y``.
    """
    y = np.asarray(y, dtype=float).reshape(-1)
    N = np.atleast_2d(np.asarray(N, dtype=float))
    return linear_map(-N, y, W)


def update(X_prop: CCG, C, Y_set: CCG) -> CCG:
    """Measurement update: generalized intersection ``{x in X_prop : C x in Y_set}``.

    When several measurements arrive in one step the updates are folded in
    declaration order; intersection commutes, so the resulting set is order
    independent even though the intermediate representations differ.
    """
    return intersection_under_map(X_prop, C, Y_set)


def filter_step(
    fs: FilterState,
    vertices: list[VertexAffineMap],
    measurements: list[tuple[np.ndarray, CCG]] = (),
    Bu=None,
    L=None,
    D: CCG | None = None,
    truth=None,
    volume_directions: int = 64,
    rng: np.random.Generator | None = None,
    options: SolverOptions = DEFAULT_OPTIONS,
) -> tuple[FilterState, StepLog]:
    """One propagate / update / reduce cycle.

    Args:
        fs: current filter state (nonempty estimate).
        vertices: uncertainty-vertex affine maps for this step.
        measurements: list of ``(C, Y_set)`` pairs; empty list means pure
            dead reckoning.
        Bu: known input contribution to the state update.
        L, D: disturbance map and bounded disturbance set.
        truth: optional true state; when given, the log records whether the
            reduced estimate contains it.
        volume_directions: direction count for the outer-area log entry.
        rng: direction source for the reduction (defaults to the spec seed).

    In constrained-zonotope mode every incoming curved set (disturbance and
    measurement sets) is box-relaxed before use, which is the only difference
    from CCG mode.

    Raises:
        EmptyEstimateError: the update emptied the estimate.
    """
    t0 = time.perf_counter()
    relax = fs.mode == MODE_CZ
    if D is not None and relax:
        D = relax_to_box_blocks(D)
    X = propagate(fs.X, vertices, Bu=Bu, L=L, D=D)
    for C, Y_set in measurements:
        if relax:
            Y_set = relax_to_box_blocks(Y_set)
        X = update(X, C, Y_set)
    if measurements and is_empty(X, options):
        raise EmptyEstimateError(fs.k + 1)
    n_g_pre = X.n_g
    X_red = reduce_to_order(X, fs.reduction, rng=rng, options=options)
    volume = volume_2d(X_red, volume_directions, options) if X_red.dim == 2 else float("nan")
    contained = None
    if truth is not None:
        contained = bool(contains_point(X_red, truth, options=options))
    step_ms = (time.perf_counter() - t0) * 1e3
    log = StepLog(
        k=fs.k + 1,
        volume=volume,
        step_ms=step_ms,
        n_g_pre=n_g_pre,
        n_g_post=X_red.n_g,
        n_c_post=X_red.n_c,
        contained=contained,
        beacon_active=bool(measurements),
    )
    return replace(fs, X=X_red, k=fs.k + 1), log
