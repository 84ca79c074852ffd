"""Constrained convex generators (CCGs) and their closed-form set operations.

A CCG describes a convex set in :math:`\\mathbb{R}^n` as the affine image of a
latent (generator) vector constrained by linear equalities and a list of
convex constraint blocks:

.. math::
    \\mathcal{Z} = \\{ G \\xi + c \\;|\\; A \\xi = b,\\; \\xi \\in \\text{blocks} \\}

Each block constrains a sublist of generator coordinates by a unit norm ball,
a norm cone (a norm bounded by an affine function of other coordinates), a
free factor or the nonnegative orthant.  Blocks carry explicit coordinate
index lists instead of positional Cartesian factors because convex-hull
outputs share a scalar coordinate across several cones, which a pure product
structure cannot express.

Intervals, zonotopes, ellipsoids and constrained zonotopes are all CCGs with
a single ball block; see the ``from_*`` constructors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "NORM_BALL",
    "NORM_CONE",
    "FREE",
    "NONNEG",
    "SET_CLASSES",
    "set_class",
    "ConstraintBlock",
    "norm_ball",
    "norm_cone",
    "free_block",
    "nonneg_block",
    "CCG",
    "validate",
    "linear_map",
    "translate",
    "minkowski_sum",
    "intersection_under_map",
    "from_interval",
    "from_zonotope",
    "from_ellipsoid",
    "from_constrained_zonotope",
    "singleton",
    "relax_to_box_blocks",
    "offset_blocks",
    "to_dict",
    "from_dict",
    "dumps",
    "loads",
    "save",
    "load",
]

NORM_BALL = "norm_ball"
NORM_CONE = "norm_cone"
FREE = "free"
NONNEG = "nonneg"

_KINDS = (NORM_BALL, NORM_CONE, FREE, NONNEG)
_NORM_ORDERS = (1.0, 2.0, math.inf)


@dataclass(frozen=True)
class ConstraintBlock:
    """One factor of the generator domain.

    Semantics by kind (``S`` = ``xi``, ``T`` = ``lam``):

    - ``norm_ball``:  ``||xi_S||_p <= 1``
    - ``norm_cone``:  ``||xi_S||_p + w . xi_T <= v``
    - ``free``:       ``xi_S`` unconstrained
    - ``nonneg``:     ``xi_S >= 0``

    ``lam`` coordinates are cross-references into *other* blocks (they must be
    owned by a free block); ``lam`` is ordered oldest lift first.  ``v`` must
    be nonnegative so that membership is preserved under scaling by any
    factor in ``[0, 1]``, which the convex hull construction relies on.
    """

    kind: str
    xi: tuple[int, ...]
    p: float | None = None
    lam: tuple[int, ...] = ()
    w: tuple[float, ...] = ()
    v: float = 1.0


def norm_ball(p: float, xi) -> ConstraintBlock:
    """Unit ball block ``||xi_S||_p <= 1`` for p in {1, 2, inf}."""
    return ConstraintBlock(NORM_BALL, tuple(int(i) for i in xi), p=float(p))


def norm_cone(p: float, xi, lam, w, v: float) -> ConstraintBlock:
    """Norm cone block ``||xi_S||_p + w . xi_T <= v``."""
    return ConstraintBlock(
        NORM_CONE,
        tuple(int(i) for i in xi),
        p=float(p),
        lam=tuple(int(i) for i in lam),
        w=tuple(float(x) for x in w),
        v=float(v),
    )


def free_block(xi) -> ConstraintBlock:
    """Unconstrained block ``xi_S in R^|S|``."""
    return ConstraintBlock(FREE, tuple(int(i) for i in xi))


def nonneg_block(xi) -> ConstraintBlock:
    """Nonnegative orthant block ``xi_S >= 0``."""
    return ConstraintBlock(NONNEG, tuple(int(i) for i in xi))


def offset_blocks(blocks, offset: int) -> tuple[ConstraintBlock, ...]:
    """Shift every coordinate index in ``blocks`` by ``offset``."""
    out = []
    for blk in blocks:
        out.append(
            replace(
                blk,
                xi=tuple(i + offset for i in blk.xi),
                lam=tuple(i + offset for i in blk.lam),
            )
        )
    return tuple(out)


class CCG:
    """A constrained convex generator ``{G xi + c : A xi = b, xi in blocks}``.

    Values are immutable after construction (arrays are copied and marked
    read-only); every operation in this module returns a new instance, so
    CCGs are safe to share across threads.

    Args:
        G: output map, shape ``(n, n_g)``.  ``n_g = 0`` encodes a singleton.
        c: center, shape ``(n,)``.
        A: equality constraint map, shape ``(n_c, n_g)``; ``None`` for no
            constraints.
        b: equality right-hand side, shape ``(n_c,)``.
        blocks: iterable of :class:`ConstraintBlock` covering all generator
            coordinates.
    """

    __slots__ = ("G", "c", "A", "b", "blocks", "_query_cache")

    def __init__(self, G, c, A=None, b=None, blocks=()):
        c = np.array(c, dtype=float, copy=True).reshape(-1)
        G = np.array(G, dtype=float, copy=True)
        if G.ndim != 2:
            G = G.reshape(c.shape[0], -1)
        if A is None:
            A = np.zeros((0, G.shape[1]))
        if b is None:
            b = np.zeros(0)
        A = np.array(A, dtype=float, copy=True)
        if A.ndim != 2:
            A = A.reshape(-1, G.shape[1])
        b = np.array(b, dtype=float, copy=True).reshape(-1)
        for arr in (G, c, A, b):
            arr.setflags(write=False)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "blocks", tuple(blocks))
        object.__setattr__(self, "_query_cache", {})

    def __setattr__(self, name, value):
        raise AttributeError("CCG values are immutable")

    @property
    def dim(self) -> int:
        """Ambient dimension ``n``."""
        return self.G.shape[0]

    @property
    def n_g(self) -> int:
        """Number of generator coordinates."""
        return self.G.shape[1]

    @property
    def n_c(self) -> int:
        """Number of equality constraints."""
        return self.A.shape[0]

    def __eq__(self, other):
        if not isinstance(other, CCG):
            return NotImplemented
        return (
            np.array_equal(self.G, other.G)
            and np.array_equal(self.c, other.c)
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.b, other.b)
            and self.blocks == other.blocks
        )

    __hash__ = None

    def __repr__(self):
        return (
            f"CCG(dim={self.dim}, n_g={self.n_g}, n_c={self.n_c}, "
            f"blocks={len(self.blocks)}, class={set_class(self)!r})"
        )


SET_CLASSES = (
    "interval", "zonotope", "ellipsoid", "constrained_zonotope", "cone", "general"
)


def set_class(Z: CCG) -> str:
    """Advisory classification of a set's representation shape.

    Purely for reporting; never affects semantics.  Returns one of
    ``SET_CLASSES`` based on the block structure: a single box block is a
    zonotope (an interval when the output map is diagonal, a constrained
    zonotope when equalities are present), a single full 2-norm ball an
    ellipsoid, a single nonnegative block a cone, anything else general.
    """
    if len(Z.blocks) == 1:
        blk = Z.blocks[0]
        if blk.kind == NORM_BALL and blk.p == math.inf:
            if Z.n_c > 0:
                return "constrained_zonotope"
            if Z.dim == Z.n_g and np.count_nonzero(
                Z.G - np.diag(np.diag(Z.G))
            ) == 0:
                return "interval"
            return "zonotope"
        if (
            blk.kind == NORM_BALL
            and blk.p == 2.0
            and Z.n_c == 0
            and Z.dim == Z.n_g
        ):
            return "ellipsoid"
        if blk.kind == NONNEG and Z.n_c == 0:
            return "cone"
    return "general"


def validate(Z: CCG) -> list[str]:
    """Check all representation invariants; return a list of violations.

    An empty list means the set is well formed.  Each entry names the
    offending block or dimension.  This is a diagnostic operation and never
    raises.
    """
    issues = []
    n_g = Z.n_g
    if Z.c.shape != (Z.dim,):
        issues.append(f"center length {Z.c.shape[0]} != ambient dim {Z.dim}")
    if Z.A.shape[1] != n_g:
        issues.append(
            f"A has {Z.A.shape[1]} columns but G has {n_g} (generator counts differ)"
        )
    if Z.b.shape[0] != Z.A.shape[0]:
        issues.append(f"b length {Z.b.shape[0]} != A row count {Z.A.shape[0]}")
    for arr, name in ((Z.G, "G"), (Z.c, "c"), (Z.A, "A"), (Z.b, "b")):
        if arr.size and not np.all(np.isfinite(arr)):
            issues.append(f"{name} contains non-finite entries")

    owner: dict[int, int] = {}
    for k, blk in enumerate(Z.blocks):
        tag = f"block {k} ({blk.kind})"
        if blk.kind not in _KINDS:
            issues.append(f"{tag}: unknown kind")
            continue
        if len(set(blk.xi)) != len(blk.xi):
            issues.append(f"{tag}: duplicate xi indices")
        if len(set(blk.lam)) != len(blk.lam):
            issues.append(f"{tag}: duplicate lambda indices")
        if set(blk.xi) & set(blk.lam):
            issues.append(f"{tag}: xi and lambda indices overlap")
        for i in blk.xi + blk.lam:
            if not 0 <= i < n_g:
                issues.append(f"{tag}: index {i} out of range for n_g={n_g}")
        if blk.kind in (NORM_BALL, NORM_CONE):
            if blk.p not in _NORM_ORDERS:
                issues.append(f"{tag}: unsupported norm order p={blk.p}")
            if blk.v < 0:
                issues.append(f"{tag}: right-hand side v={blk.v} is negative")
        if blk.kind == NORM_BALL:
            if blk.lam or blk.w:
                issues.append(f"{tag}: ball blocks carry no lambda terms")
            if blk.v != 1.0:
                issues.append(f"{tag}: ball right-hand side must be 1")
        if blk.kind == NORM_CONE and len(blk.w) != len(blk.lam):
            issues.append(
                f"{tag}: w length {len(blk.w)} != lambda length {len(blk.lam)}"
            )
        if blk.kind in (FREE, NONNEG) and (blk.lam or blk.w or blk.p is not None):
            issues.append(f"{tag}: free/nonneg blocks carry no norm data")
        for i in blk.xi:
            if i in owner:
                issues.append(
                    f"{tag}: xi index {i} already owned by block {owner[i]}"
                )
            else:
                owner[i] = k

    missing = set(range(n_g)) - set(owner)
    if missing:
        issues.append(f"generator coordinates {sorted(missing)} belong to no block")

    for k, blk in enumerate(Z.blocks):
        for j in blk.lam:
            own = owner.get(j)
            if own is None:
                continue  # already reported as uncovered
            if Z.blocks[own].kind != FREE:
                issues.append(
                    f"block {k}: lambda index {j} is owned by non-free block {own}"
                )
    return issues


def _require_valid_dims(Z: CCG, n: int, what: str):
    if Z.dim != n:
        raise ValueError(f"{what}: expected ambient dimension {n}, got {Z.dim}")


def linear_map(R, t, Z: CCG) -> CCG:
    """Affine image ``R Z + t = {R x + t : x in Z}``.

    The latent structure is untouched: generators, equalities and blocks all
    carry over, only the output map and center change.
    """
    R = np.atleast_2d(np.asarray(R, dtype=float))
    t = np.asarray(t, dtype=float).reshape(-1)
    if R.shape[1] != Z.dim:
        raise ValueError(f"map has {R.shape[1]} columns, set has dimension {Z.dim}")
    if t.shape[0] != R.shape[0]:
        raise ValueError(f"offset length {t.shape[0]} != map rows {R.shape[0]}")
    return CCG(R @ Z.G, R @ Z.c + t, Z.A, Z.b, Z.blocks)


def translate(Z: CCG, t) -> CCG:
    """Shift a set by a vector (identity-map special case of linear_map)."""
    t = np.asarray(t, dtype=float).reshape(-1)
    if t.shape[0] != Z.dim:
        raise ValueError(f"offset length {t.shape[0]} != set dimension {Z.dim}")
    return CCG(Z.G, Z.c + t, Z.A, Z.b, Z.blocks)


def minkowski_sum(Z: CCG, W: CCG) -> CCG:
    """Minkowski sum ``Z + W`` in block-concatenated closed form.

    Generators are stacked side by side, equality systems block-diagonally;
    W's blocks are re-indexed past Z's generators.
    """
    _require_valid_dims(W, Z.dim, "minkowski_sum")
    G = np.hstack([Z.G, W.G])
    A = np.block(
        [
            [Z.A, np.zeros((Z.n_c, W.n_g))],
            [np.zeros((W.n_c, Z.n_g)), W.A],
        ]
    )
    b = np.concatenate([Z.b, W.b])
    blocks = Z.blocks + offset_blocks(W.blocks, Z.n_g)
    return CCG(G, Z.c + W.c, A, b, blocks)


def intersection_under_map(Z: CCG, R, Y: CCG) -> CCG:
    """Generalized intersection ``{x in Z : R x in Y}``.

    The result may be empty; emptiness is a solver query
    (:func:`ccgkit.solve.is_empty`), not an error here.
    """
    R = np.atleast_2d(np.asarray(R, dtype=float))
    if R.shape[1] != Z.dim:
        raise ValueError(f"map has {R.shape[1]} columns, set has dimension {Z.dim}")
    _require_valid_dims(Y, R.shape[0], "intersection_under_map")
    G = np.hstack([Z.G, np.zeros((Z.dim, Y.n_g))])
    A = np.block(
        [
            [Z.A, np.zeros((Z.n_c, Y.n_g))],
            [np.zeros((Y.n_c, Z.n_g)), Y.A],
            [R @ Z.G, -Y.G],
        ]
    )
    b = np.concatenate([Z.b, Y.b, Y.c - R @ Z.c])
    blocks = Z.blocks + offset_blocks(Y.blocks, Z.n_g)
    return CCG(G, Z.c, A, b, blocks)


def from_interval(lo, hi) -> CCG:
    """Axis-aligned box ``{x : lo <= x <= hi}`` as a diagonal zonotope."""
    lo = np.asarray(lo, dtype=float).reshape(-1)
    hi = np.asarray(hi, dtype=float).reshape(-1)
    if lo.shape != hi.shape:
        raise ValueError("lo and hi must have the same length")
    if np.any(lo > hi):
        raise ValueError("interval requires lo <= hi elementwise")
    n = lo.shape[0]
    G = np.diag((hi - lo) / 2.0)
    c = (hi + lo) / 2.0
    return CCG(G, c, blocks=[norm_ball(math.inf, range(n))])


def from_zonotope(G, c) -> CCG:
    """Zonotope ``{G xi + c : ||xi||_inf <= 1}``."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    return CCG(G, c, blocks=[norm_ball(math.inf, range(G.shape[1]))])


def from_ellipsoid(G, c) -> CCG:
    """Ellipsoid ``{G xi + c : ||xi||_2 <= 1}`` for square ``G``."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    if G.shape[0] != G.shape[1]:
        raise ValueError(f"ellipsoid shape matrix must be square, got {G.shape}")
    return CCG(G, c, blocks=[norm_ball(2, range(G.shape[1]))])


def from_constrained_zonotope(G, c, A, b) -> CCG:
    """Constrained zonotope ``{G xi + c : A xi = b, ||xi||_inf <= 1}``."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    return CCG(G, c, A, b, blocks=[norm_ball(math.inf, range(G.shape[1]))])


def singleton(c) -> CCG:
    """The one-point set ``{c}`` (zero generators)."""
    c = np.asarray(c, dtype=float).reshape(-1)
    return CCG(np.zeros((c.shape[0], 0)), c)


def relax_to_box_blocks(Z: CCG) -> CCG:
    """Overbound every norm ball by the unit infinity-norm ball.

    This realizes the constrained-zonotope baseline: the unit 1- and 2-norm
    balls are subsets of the unit box over the same coordinates, so the
    result is a superset of ``Z`` with purely polytopic generator factors.
    Only applicable at construction time, before any convex-hull lift has
    introduced cone blocks.
    """
    out = []
    for k, blk in enumerate(Z.blocks):
        if blk.kind == NORM_BALL:
            out.append(norm_ball(math.inf, blk.xi))
        elif blk.kind == FREE:
            out.append(blk)
        else:
            raise ValueError(
                f"block {k} has kind {blk.kind}; box relaxation applies only to "
                "ball/free blocks at set-construction time"
            )
    return CCG(Z.G, Z.c, Z.A, Z.b, out)


# ---------------------------------------------------------------------------
# JSON serialization.  Round-trips are bit-identical for finite doubles:
# Python's float repr is shortest-round-trip, and parsing restores the exact
# value.
# ---------------------------------------------------------------------------

def _p_to_json(p):
    if p is None:
        return None
    return "inf" if math.isinf(p) else int(p)


def _p_from_json(p):
    if p is None:
        return None
    return math.inf if p == "inf" else float(p)


def to_dict(Z: CCG) -> dict:
    """Plain-dict form of a set, suitable for ``json.dump``."""
    return {
        "G": Z.G.tolist(),
        "c": Z.c.tolist(),
        "A": Z.A.tolist(),
        "b": Z.b.tolist(),
        "blocks": [
            {
                "kind": blk.kind,
                "p": _p_to_json(blk.p),
                "xi": list(blk.xi),
                "lambda": list(blk.lam),
                "w": list(blk.w),
                "v": blk.v,
            }
            for blk in Z.blocks
        ],
    }


def from_dict(d: dict) -> CCG:
    """Inverse of :func:`to_dict`."""
    c = np.asarray(d["c"], dtype=float)
    G = np.asarray(d["G"], dtype=float).reshape(c.shape[0], -1)
    n_g = G.shape[1]
    A = np.asarray(d["A"], dtype=float).reshape(-1, n_g)
    blocks = []
    for bd in d["blocks"]:
        blocks.append(
            ConstraintBlock(
                kind=bd["kind"],
                xi=tuple(int(i) for i in bd["xi"]),
                p=_p_from_json(bd.get("p")),
                lam=tuple(int(i) for i in bd.get("lambda", ())),
                w=tuple(float(x) for x in bd.get("w", ())),
                v=float(bd.get("v", 1.0)),
            )
        )
    return CCG(G, c, A, d["b"], blocks)


def dumps(Z: CCG, **kwargs) -> str:
    return json.dumps(to_dict(Z), **kwargs)


def loads(text: str) -> CCG:
    return from_dict(json.loads(text))


def save(Z: CCG, path):
    with open(path, "w") as fh:
        json.dump(to_dict(Z), fh, indent=2)


def load(path) -> CCG:
    with open(path) as fh:
        return from_dict(json.load(fh))
