"""Conic-program queries against CCG sets.

Membership in a CCG is a system of linear equalities plus norm-cone
constraints, so support functions, point membership, emptiness and surface
sampling are all small conic programs.  This module compiles a set into a
reusable :class:`ConicQuery` (2-norm blocks become second-order cones, 1- and
infinity-norm blocks the standard linear reformulations) and solves it with
Clarabel.  Every other module treats these queries as its numerical oracle.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

import clarabel

from .sets import CCG, FREE, NONNEG, NORM_BALL, NORM_CONE

__all__ = [
    "OPTIMAL",
    "INFEASIBLE",
    "UNBOUNDED",
    "TROUBLE",
    "SolverOptions",
    "SolveOutcome",
    "ConeMembership",
    "ConicQuery",
    "SolverTroubleError",
    "EmptySetError",
    "UnboundedSetError",
    "compile_query",
    "solve_query",
    "SupportResult",
    "support_function",
    "support_batch",
    "Containment",
    "contains_point",
    "is_empty",
    "sample_surface",
    "sample_members",
    "unit_directions",
    "outer_polygon",
    "volume_2d",
]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
TROUBLE = "numerical_trouble"


class SolverTroubleError(RuntimeError):
    """The backend returned an indeterminate status for a query."""


class EmptySetError(ValueError):
    """An operation required a nonempty set."""


class UnboundedSetError(ValueError):
    """An operation required a bounded set."""


@dataclass(frozen=True)
class SolverOptions:
    """Numerical tolerances for queries.

    ``feas_tol`` is the decision threshold for membership/emptiness residuals;
    ``gap_tol`` is the duality-gap (and interior feasibility) target handed to
    the backend.  Both can be overridden per call.
    """

    feas_tol: float = 1e-7
    gap_tol: float = 1e-8
    max_iter: int = 200

    def clarabel_settings(self):
        s = clarabel.DefaultSettings()
        s.verbose = False
        s.tol_gap_abs = self.gap_tol
        s.tol_gap_rel = self.gap_tol
        s.tol_feas = self.gap_tol
        s.max_iter = self.max_iter
        return s


DEFAULT_OPTIONS = SolverOptions()


@dataclass(frozen=True)
class SolveOutcome:
    """Result of one conic solve (criterion: minimization).

    ``value``/``x`` are present exactly when ``status == OPTIMAL``.
    """

    status: str
    value: float | None = None
    x: np.ndarray | None = None
    iterations: int = 0
    wall_time: float = 0.0


@dataclass(frozen=True)
class ConeMembership:
    """One compiled norm-cone membership ``||z_xi||_p + w . z_lam <= v``.

    ``encoding`` records how the backend receives it: ``"soc"`` for a native
    second-order cone, ``"linear"`` for the 1/inf-norm row reformulation
    (``aux`` lists the auxiliary absolute-value variables used for p=1).
    """

    p: float
    xi: tuple[int, ...]
    lam: tuple[int, ...]
    w: tuple[float, ...]
    v: float
    encoding: str
    aux: tuple[int, ...] = ()


@dataclass
class ConicQuery:
    """A compiled feasibility/optimization problem over generator variables.

    Decision variables are the set's generators followed by any auxiliary
    variables introduced by linear norm reformulations.  The stacked backend
    matrices are cached on the query so repeated solves with fresh objectives
    (support sweeps) skip re-assembly.
    """

    n_vars: int
    n_xi: int
    objective: np.ndarray
    eq_matrix: sp.csc_matrix
    eq_rhs: np.ndarray
    cones: list[ConeMembership]
    nonneg_vars: tuple[int, ...]
    _stack: tuple = field(default=None, repr=False)


class _Builder:
    """Accumulates rows for the stacked conic form ``A z + s = b, s in K``."""

    def __init__(self, n_vars):
        self.n_vars = n_vars
        self.zero = ([], [], [], [])  # rows, cols, vals, rhs
        self.lin = ([], [], [], [])
        self.soc = []  # list of (rows, cols, vals, rhs) with local row ids

    def new_var(self):
        i = self.n_vars
        self.n_vars += 1
        return i

    @staticmethod
    def _add(buf, cols, vals, rhs):
        rows, cs, vs, bs = buf
        r = len(bs)
        rows.extend([r] * len(cols))
        cs.extend(cols)
        vs.extend(vals)
        bs.append(rhs)
        return r

    def add_eq(self, cols, vals, rhs):
        """Row ``sum vals*z = rhs``."""
        self._add(self.zero, cols, vals, rhs)

    def add_ineq(self, cols, vals, rhs):
        """Row ``sum vals*z <= rhs``."""
        self._add(self.lin, cols, vals, rhs)

    def add_soc(self, head_cols, head_vals, head_rhs, tail_vars):
        """Constraint ``||z_tail||_2 <= head_rhs - sum head_vals*z``."""
        cols = list(head_cols) + list(tail_vars)
        vals = list(head_vals) + [-1.0] * len(tail_vars)
        row_ids = [0] * len(head_cols) + list(range(1, len(tail_vars) + 1))
        rhs = [head_rhs] + [0.0] * len(tail_vars)
        self.soc.append((row_ids, cols, vals, rhs))

    def stacked(self):
        """Final ``(A, b, cone_dims)`` with cones in Clarabel row order."""
        mats, rhss, cones = [], [], []
        for buf, ctor in ((self.zero, clarabel.ZeroConeT), (self.lin, clarabel.NonnegativeConeT)):
            rows, cols, vals, bs = buf
            if bs:
                mats.append(
                    sp.csc_matrix(
                        (vals, (rows, cols)), shape=(len(bs), self.n_vars)
                    )
                )
                rhss.append(np.asarray(bs, dtype=float))
                cones.append(ctor(len(bs)))
        for rows, cols, vals, rhs in self.soc:
            mats.append(
                sp.csc_matrix((vals, (rows, cols)), shape=(len(rhs), self.n_vars))
            )
            rhss.append(np.asarray(rhs, dtype=float))
            cones.append(clarabel.SecondOrderConeT(len(rhs)))
        if mats:
            A = sp.vstack(mats, format="csc")
            b = np.concatenate(rhss)
        else:
            A = sp.csc_matrix((0, self.n_vars))
            b = np.zeros(0)
        return A, b, cones


def _encode_block(builder: _Builder, blk, cones_out: list, nonneg_out: list):
    if blk.kind == FREE:
        return
    if blk.kind == NONNEG:
        nonneg_out.extend(blk.xi)
        for i in blk.xi:
            builder.add_ineq([i], [-1.0], 0.0)
        return
    if blk.p not in (1.0, 2.0, math.inf):
        raise ValueError(f"unsupported norm order p={blk.p}")
    lam, w, v = list(blk.lam), list(blk.w), blk.v
    aux: tuple[int, ...] = ()
    if not blk.xi:
        # Norm of an empty vector is zero: one linear row v - w.lam >= 0.
        builder.add_ineq(lam, w, v)
        encoding = "linear"
    elif blk.p == 2.0:
        builder.add_soc(lam, w, v, blk.xi)
        encoding = "soc"
    elif blk.p == math.inf:
        for i in blk.xi:
            builder.add_ineq(lam + [i], w + [1.0], v)
            builder.add_ineq(lam + [i], w + [-1.0], v)
        encoding = "linear"
    else:  # p == 1: auxiliary t_i >= |xi_i|, sum t_i + w.lam <= v
        aux = tuple(builder.new_var() for _ in blk.xi)
        for i, t in zip(blk.xi, aux):
            builder.add_ineq([i, t], [1.0, -1.0], 0.0)
            builder.add_ineq([i, t], [-1.0, -1.0], 0.0)
        builder.add_ineq(lam + list(aux), w + [1.0] * len(aux), v)
        encoding = "linear"
    cones_out.append(
        ConeMembership(blk.p, blk.xi, blk.lam, blk.w, v, encoding, aux)
    )


def _build(Z: CCG, extra_eq=None, slack_on_output=None):
    """Shared assembly for compile_query and the membership query.

    ``slack_on_output``: when a target point ``x`` placeholder is requested,
    adds a variable ``t`` bounding ``||G xi + c - x||_inf`` and returns the
    row bookkeeping needed to retarget ``x`` cheaply.
    """
    builder = _Builder(Z.n_g)
    cones: list[ConeMembership] = []
    nonneg: list[int] = []
    for i in range(Z.n_c):
        row = Z.A[i]
        nz = np.nonzero(row)[0]
        builder.add_eq(nz.tolist(), row[nz].tolist(), float(Z.b[i]))
    if extra_eq is not None:
        M, rhs = extra_eq
        M = np.atleast_2d(np.asarray(M, dtype=float))
        rhs = np.asarray(rhs, dtype=float).reshape(-1)
        if M.shape[1] != Z.n_g or rhs.shape[0] != M.shape[0]:
            raise ValueError("extra equality dimensions do not match the set")
        for i in range(M.shape[0]):
            nz = np.nonzero(M[i])[0]
            builder.add_eq(nz.tolist(), M[i][nz].tolist(), float(rhs[i]))
    for blk in Z.blocks:
        _encode_block(builder, blk, cones, nonneg)

    slack_info = None
    if slack_on_output is not None:
        t = builder.new_var()
        plus_rows, minus_rows = [], []
        base = len(builder.lin[3])
        for i in range(Z.dim):
            nz = np.nonzero(Z.G[i])[0]
            # t - (G_i xi + c_i - x_i) >= 0  ->  G_i xi - t <= x_i - c_i
            builder.add_ineq(nz.tolist() + [t], Z.G[i][nz].tolist() + [-1.0], -float(Z.c[i]))
            plus_rows.append(base + 2 * i)
            # t + (G_i xi + c_i - x_i) >= 0  ->  -G_i xi - t <= c_i - x_i
            builder.add_ineq(nz.tolist() + [t], (-Z.G[i][nz]).tolist() + [-1.0], float(Z.c[i]))
            minus_rows.append(base + 2 * i + 1)
        slack_info = (t, plus_rows, minus_rows, base)
    return builder, cones, nonneg, slack_info


def compile_query(Z: CCG, extra_eq=None, objective=None) -> ConicQuery:
    """Compile set membership into a conic program.

    Args:
        Z: the set; assumed to satisfy :func:`ccgkit.sets.validate`.
        extra_eq: optional ``(M, rhs)`` additional equalities over the
            generators.
        objective: optional linear functional over the generators to
            minimize (length ``n_g``); defaults to zero (pure feasibility).

    Returns:
        A :class:`ConicQuery` whose variables are the generators followed by
        any reformulation auxiliaries.
    """
    builder, cones, nonneg, _ = _build(Z, extra_eq)
    n_vars = builder.n_vars
    q = np.zeros(n_vars)
    if objective is not None:
        obj = np.asarray(objective, dtype=float).reshape(-1)
        if obj.shape[0] != Z.n_g:
            raise ValueError("objective length must equal the generator count")
        q[: Z.n_g] = obj
    eq_rows, eq_cols, eq_vals, eq_rhs = builder.zero
    eq_matrix = sp.csc_matrix(
        (eq_vals, (eq_rows, eq_cols)), shape=(len(eq_rhs), n_vars)
    )
    query = ConicQuery(
        n_vars=n_vars,
        n_xi=Z.n_g,
        objective=q,
        eq_matrix=eq_matrix,
        eq_rhs=np.asarray(eq_rhs, dtype=float),
        cones=cones,
        nonneg_vars=tuple(nonneg),
    )
    query._stack = builder.stacked()
    return query


# Reduced-accuracy optima are still usable (their value feeds a tolerance
# comparison), but "almost" infeasibility certificates are not proof of
# anything and surface as numerical trouble.
_STATUS_MAP = {
    "Solved": OPTIMAL,
    "AlmostSolved": OPTIMAL,
    "PrimalInfeasible": INFEASIBLE,
    "DualInfeasible": UNBOUNDED,
}


def solve_query(
    query: ConicQuery,
    objective=None,
    options: SolverOptions = DEFAULT_OPTIONS,
    rhs_override=None,
) -> SolveOutcome:
    """Solve a compiled query, optionally swapping the linear objective.

    ``objective`` may have length ``n_xi`` (generators only, auxiliaries
    padded with zeros) or ``n_vars``.
    """
    if objective is None:
        q = query.objective
    else:
        obj = np.asarray(objective, dtype=float).reshape(-1)
        if obj.shape[0] == query.n_vars:
            q = obj
        else:
            q = np.zeros(query.n_vars)
            q[: obj.shape[0]] = obj
    A, b, cones = query._stack
    if rhs_override is not None:
        b = rhs_override
    if query.n_vars == 0:
        feasible = np.all(np.abs(b) <= options.feas_tol) if b.size else True
        return SolveOutcome(OPTIMAL if feasible else INFEASIBLE,
                            0.0 if feasible else None,
                            np.zeros(0) if feasible else None)
    t0 = time.perf_counter()
    P = sp.csc_matrix((query.n_vars, query.n_vars))
    solver = clarabel.DefaultSolver(P, q, A, b, cones, options.clarabel_settings())
    sol = solver.solve()
    wall = time.perf_counter() - t0
    status = _STATUS_MAP.get(str(sol.status), TROUBLE)
    if status == OPTIMAL:
        return SolveOutcome(OPTIMAL, float(sol.obj_val), np.asarray(sol.x),
                            int(sol.iterations), wall)
    return SolveOutcome(status, None, None, int(sol.iterations), wall)


def _cached_query(Z: CCG, key: str, factory):
    cache = Z._query_cache
    query = cache.get(key)
    if query is None:
        query = factory()
        cache[key] = query
    return query


def _membership_query(Z: CCG):
    def make():
        builder, cones, nonneg, slack = _build(Z, slack_on_output=True)
        t, plus_rows, minus_rows, base = slack
        q = np.zeros(builder.n_vars)
        q[t] = 1.0
        eq_rows, eq_cols, eq_vals, eq_rhs = builder.zero
        query = ConicQuery(
            n_vars=builder.n_vars,
            n_xi=Z.n_g,
            objective=q,
            eq_matrix=sp.csc_matrix(
                (eq_vals, (eq_rows, eq_cols)), shape=(len(eq_rhs), builder.n_vars)
            ),
            eq_rhs=np.asarray(eq_rhs, dtype=float),
            cones=cones,
            nonneg_vars=tuple(nonneg),
        )
        query._stack = builder.stacked()
        # Row indices of the +-x slots inside the stacked rhs.
        n_eq = len(eq_rhs)
        return query, n_eq + np.asarray(plus_rows), n_eq + np.asarray(minus_rows)

    return _cached_query(Z, "member", make)


@dataclass(frozen=True)
class SupportResult:
    """Support value and maximizer in one direction."""

    status: str
    value: float | None = None
    point: np.ndarray | None = None


def support_function(Z: CCG, u, options: SolverOptions = DEFAULT_OPTIONS) -> SupportResult:
    """Support function ``h(u) = max { u.x : x in Z }`` with its argmax.

    Returns a result whose status is ``infeasible`` for an empty set and
    ``unbounded`` when the set has no finite support in ``u``.
    """
    u = np.asarray(u, dtype=float).reshape(-1)
    if u.shape[0] != Z.dim:
        raise ValueError(f"direction length {u.shape[0]} != set dimension {Z.dim}")
    query = _cached_query(Z, "plain", lambda: compile_query(Z))
    out = solve_query(query, -(Z.G.T @ u), options)
    if out.status != OPTIMAL:
        return SupportResult(out.status)
    xi = out.x[: Z.n_g]
    return SupportResult(OPTIMAL, float(u @ Z.c - out.value), Z.G @ xi + Z.c)


def support_batch(Z: CCG, U, options: SolverOptions = DEFAULT_OPTIONS):
    """Support values and argmax points for many directions (rows of ``U``).

    Raises on the first non-optimal direction; intended for sets known to be
    nonempty and bounded.
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    query = _cached_query(Z, "plain", lambda: compile_query(Z))
    objs = -(U @ Z.G)  # row i -> -(G^T u_i)
    values = np.empty(U.shape[0])
    points = np.empty((U.shape[0], Z.dim))
    for i in range(U.shape[0]):
        out = solve_query(query, objs[i], options)
        if out.status == INFEASIBLE:
            raise EmptySetError("support query on an empty set")
        if out.status == UNBOUNDED:
            raise UnboundedSetError(f"set is unbounded in direction {U[i]}")
        if out.status != OPTIMAL:
            raise SolverTroubleError(f"support solve failed in direction {U[i]}")
        values[i] = U[i] @ Z.c - out.value
        points[i] = Z.G @ out.x[: Z.n_g] + Z.c
    return values, points


class Containment:
    """Outcome of a point-membership query with its residual.

    ``contained`` (and truth-testing) raise :class:`SolverTroubleError` when
    the backend was indeterminate, so numerical trouble can never silently
    read as a boolean.
    """

    def __init__(self, status: str, residual: float, tol: float):
        self.status = status
        self.residual = residual
        self.tol = tol

    @property
    def indeterminate(self) -> bool:
        return self.status == TROUBLE

    @property
    def contained(self) -> bool:
        if self.indeterminate:
            raise SolverTroubleError("membership query was indeterminate")
        return self.residual <= self.tol

    def __bool__(self) -> bool:
        return self.contained

    def __repr__(self):
        flag = "indeterminate" if self.indeterminate else str(self.contained)
        return f"Containment({flag}, residual={self.residual:.3e})"


def contains_point(
    Z: CCG, x, tol: float | None = None, options: SolverOptions = DEFAULT_OPTIONS
) -> Containment:
    """Check ``x in Z`` by minimizing the infinity-norm residual.

    Solves ``min t`` subject to ``A xi = b``, ``xi in blocks`` and
    ``|G xi + c - x| <= t`` componentwise; the point is a member when the
    optimal residual is at most ``tol`` (default: ``options.feas_tol``).
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != Z.dim:
        raise ValueError(f"point length {x.shape[0]} != set dimension {Z.dim}")
    if tol is None:
        tol = options.feas_tol
    if Z.n_g == 0:
        feasible = np.all(np.abs(Z.b) <= tol) if Z.b.size else True
        residual = float(np.max(np.abs(Z.c - x), initial=0.0))
        return Containment(OPTIMAL, residual if feasible else math.inf, tol)
    query, plus_rows, minus_rows = _membership_query(Z)
    _, b, _ = query._stack
    b = b.copy()
    b[plus_rows] += x
    b[minus_rows] -= x
    out = solve_query(query, options=options, rhs_override=b)
    if out.status == OPTIMAL:
        return Containment(OPTIMAL, float(out.value), tol)
    if out.status == INFEASIBLE:  # the set itself is empty
        return Containment(INFEASIBLE, math.inf, tol)
    return Containment(TROUBLE, math.nan, tol)


def is_empty(Z: CCG, options: SolverOptions = DEFAULT_OPTIONS) -> bool:
    """True when the membership system is infeasible.

    Raises :class:`SolverTroubleError` on an indeterminate backend status.
    """
    query = _cached_query(Z, "plain", lambda: compile_query(Z))
    out = solve_query(query, options=options)
    if out.status == OPTIMAL:
        return False
    if out.status == INFEASIBLE:
        return True
    if out.status == UNBOUNDED:
        return False  # feasible rays exist
    raise SolverTroubleError("emptiness check was indeterminate")


def unit_directions(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    """``count`` directions drawn uniformly on the unit sphere (rows)."""
    out = np.empty((count, n))
    for i in range(count):
        while True:
            v = rng.standard_normal(n)
            norm = np.linalg.norm(v)
            if norm > 1e-12:
                out[i] = v / norm
                break
    return out


def sample_surface(
    Z: CCG, count: int, rng: np.random.Generator,
    options: SolverOptions = DEFAULT_OPTIONS,
):
    """Draw random sphere directions and their support maximizers.

    Returns ``(V, P)`` with directions and boundary points as columns, so
    column ``i`` of ``P`` maximizes ``V[:, i] . p`` over the set.  A direction
    whose solve hits numerical trouble is retried with a fresh draw (at most
    three retries) before giving up.
    """
    n = Z.dim
    V = np.empty((n, count))
    P = np.empty((n, count))
    query = _cached_query(Z, "plain", lambda: compile_query(Z))
    for i in range(count):
        for attempt in range(4):
            v = unit_directions(rng, n, 1)[0]
            out = solve_query(query, -(Z.G.T @ v), options)
            if out.status == OPTIMAL:
                V[:, i] = v
                P[:, i] = Z.G @ out.x[: Z.n_g] + Z.c
                break
            if out.status == INFEASIBLE:
                raise EmptySetError("cannot sample the surface of an empty set")
            if out.status == UNBOUNDED:
                raise UnboundedSetError("cannot sample the surface of an unbounded set")
        else:
            raise SolverTroubleError(
                f"surface sampling failed after retries (direction slot {i})"
            )
    return V, P


def sample_members(
    Z: CCG, count: int, rng: np.random.Generator,
    options: SolverOptions = DEFAULT_OPTIONS,
) -> np.ndarray:
    """Random member points (rows): convex mixes of support maximizers.

    Mixing random boundary points stays inside the set by convexity; this is
    a cheap inner sampler for oracle tests, not a uniform sampler.
    """
    anchors = max(4, min(2 * Z.dim + 2, 12))
    _, P = sample_surface(Z, anchors, rng, options)
    weights = rng.dirichlet(np.ones(anchors), size=count)
    return weights @ P.T


def outer_polygon(Z: CCG, K: int, options: SolverOptions = DEFAULT_OPTIONS) -> np.ndarray:
    """Circumscribing polygon of a planar set from ``K`` support directions.

    Intersects the supporting half-planes at equally spaced angles; vertices
    are returned counterclockwise.  The polygon contains the set by
    construction.
    """
    if Z.dim != 2:
        raise ValueError("outer_polygon requires a planar set")
    if K < 3:
        raise ValueError("need at least 3 directions")
    angles = 2.0 * math.pi * np.arange(K) / K
    U = np.column_stack([np.cos(angles), np.sin(angles)])
    values, _ = support_batch(Z, U, options)
    # Vertex i solves u_i . x = h_i and u_j . x = h_j for j = i+1 (mod K).
    cs, sn, h = U[:, 0], U[:, 1], values
    cs2, sn2, h2 = np.roll(cs, -1), np.roll(sn, -1), np.roll(h, -1)
    det = cs * sn2 - sn * cs2  # = sin(2 pi / K) > 0
    x = (h * sn2 - h2 * sn) / det
    y = (cs * h2 - cs2 * h) / det
    return np.column_stack([x, y])


def polygon_area(vertices: np.ndarray) -> float:
    """Shoelace area of a simple polygon given by ordered vertices."""
    v = np.asarray(vertices, dtype=float)
    if v.shape[0] < 3:
        return 0.0
    x, y = v[:, 0], v[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def volume_2d(Z: CCG, K: int = 64, options: SolverOptions = DEFAULT_OPTIONS) -> float:
    """Outer area estimate of a planar set: shoelace area of the
    ``K``-direction circumscribing polygon.

    This intentionally over-approximates (it is an outer polygon); refining
    the direction set (doubling ``K``) can only shrink it, up to solver
    tolerance.  Empty sets have area 0.
    """
    try:
        return polygon_area(outer_polygon(Z, K, options))
    except EmptySetError:
        return 0.0
