"""Exact convex hull of two CCGs in closed form.

The hull of a union is the set of mixtures ``lambda x + (1 - lambda) y`` over
``lambda in [0, 1]``.  Writing the mixture weight as a new generator
coordinate ``xi_lam = lambda - 1/2`` turns the bilinear terms into linear
ones after rescaling each side's generators by its weight: equalities pick up
a ``-+ b`` column, and every norm constraint becomes a *norm cone* whose
right-hand side is an affine function of ``xi_lam``.  The construction is
exact (no overbounding) and adds exactly one generator and zero equality
constraints per pairwise hull.

Scaling a side by its weight multiplies every degree-1 norm inequality's
right-hand side by the weight, which is where the lift rule in
:func:`lift_block` comes from: append a coefficient ``-+ v`` for the new
mixture coordinate and halve ``v``.  Because the rule is plain homogeneous
scaling, it remains exact for sets that are themselves hull outputs with
arbitrarily mixed lift histories; test oracles verify exactness against
support functions rather than trusting the algebra.
"""

from __future__ import annotations

import numpy as np

from .sets import (
    CCG,
    FREE,
    NONNEG,
    NORM_BALL,
    NORM_CONE,
    ConstraintBlock,
    free_block,
    norm_ball,
    norm_cone,
    offset_blocks,
    validate,
)

__all__ = ["FIRST", "SECOND", "lift_block", "convex_hull_pair", "convex_hull_many"]

# Which side of the mixture a lifted block belongs to: FIRST is scaled by the
# weight lambda = 1/2 + xi_lam, SECOND by 1 - lambda = 1/2 - xi_lam.
FIRST = "first"
SECOND = "second"


def lift_block(
    blk: ConstraintBlock, new_lambda_index: int, side: str
) -> ConstraintBlock:
    """Re-express a block's membership for the side scaled by its weight.

    With weight ``s = 1/2 + xi_new`` (side ``FIRST``) or ``1/2 - xi_new``
    (side ``SECOND``):

    - a unit ball ``||xi_S||_p <= 1`` scales to ``||xi_S||_p <= s``, i.e. a
      cone with ``w = [-+1]`` and ``v = 1/2``;
    - a cone ``||xi_S||_p + w . xi_T <= v`` is degree-1 in the scaled
      generators, so only its right-hand side picks up the factor:
      ``||xi_S||_p + w . xi_T -+ v xi_new <= v/2`` (append ``-+ v``, halve
      ``v``), the new coefficient landing *after* the existing ones so that
      ``lam`` stays ordered oldest lift first;
    - free and nonnegative blocks are closed under scaling by any factor in
      ``[0, 1]`` and pass through unchanged.
    """
    if side not in (FIRST, SECOND):
        raise ValueError(f"unknown lift side {side!r}")
    if new_lambda_index in blk.xi or new_lambda_index in blk.lam:
        raise ValueError(
            f"index {new_lambda_index} is already referenced by the block"
        )
    sign = -1.0 if side == FIRST else 1.0
    if blk.kind == NORM_BALL:
        return norm_cone(blk.p, blk.xi, (new_lambda_index,), (sign,), 0.5)
    if blk.kind == NORM_CONE:
        return norm_cone(
            blk.p,
            blk.xi,
            blk.lam + (new_lambda_index,),
            blk.w + (sign * blk.v,),
            blk.v / 2.0,
        )
    return blk  # free / nonneg


def _lift_side(blocks, lam_index: int, side: str):
    """Lift every block of one side; ensure the side pins the weight's sign.

    A side with no positive-rhs norm block (a singleton, or purely free or
    nonnegative factors) would leave the mixture weight unbounded on its
    side, so an empty-argument ball is lifted in as well: its cone reads
    ``0 <= 1/2 -+ xi_lam``, exactly the missing weight bound.
    """
    lifted = [lift_block(blk, lam_index, side) for blk in blocks]
    pins = any(
        blk.kind in (NORM_BALL, NORM_CONE) and blk.v > 0.0 for blk in blocks
    )
    if not pins:
        lifted.append(lift_block(norm_ball(2, ()), lam_index, side))
    return lifted


def convex_hull_pair(X: CCG, Y: CCG) -> CCG:
    """Exact convex hull of the union of two CCGs.

    The output has ``n_g(X) + n_g(Y) + 1`` generators and
    ``n_c(X) + n_c(Y)`` equality constraints:

    - output map ``[G_x  G_y  c_x - c_y]`` and center ``(c_x + c_y) / 2``;
    - equalities ``[A_x  0  -b_x; 0  A_y  b_y] xi = [b_x / 2; b_y / 2]``;
    - X's blocks lifted on :data:`FIRST`, Y's (re-indexed) on
      :data:`SECOND`, plus a free block for the new mixture coordinate.

    Both inputs must be well formed with nonnegative cone right-hand sides
    (so block membership survives scaling toward zero).
    """
    if X.dim != Y.dim:
        raise ValueError(
            f"cannot hull sets of dimensions {X.dim} and {Y.dim}"
        )
    for name, Z in (("first", X), ("second", Y)):
        problems = validate(Z)
        if problems:
            raise ValueError(f"{name} hull input is invalid: {problems}")
    ngx, ngy = X.n_g, Y.n_g
    lam = ngx + ngy
    G = np.hstack([X.G, Y.G, (X.c - Y.c).reshape(-1, 1)])
    c = (X.c + Y.c) / 2.0
    A = np.block(
        [
            [X.A, np.zeros((X.n_c, ngy)), -X.b.reshape(-1, 1)],
            [np.zeros((Y.n_c, ngx)), Y.A, Y.b.reshape(-1, 1)],
        ]
    )
    b = np.concatenate([X.b / 2.0, Y.b / 2.0])
    blocks = (
        _lift_side(X.blocks, lam, FIRST)
        + _lift_side(offset_blocks(Y.blocks, ngx), lam, SECOND)
        + [free_block((lam,))]
    )
    return CCG(G, c, A, b, blocks)


def convex_hull_many(sets_: list[CCG]) -> CCG:
    """Left fold of pairwise hulls over a nonempty list of same-dimension sets.

    A single-element list returns its element unchanged; ``len(sets_) - 1``
    mixture generators are added beyond the inputs' total.
    """
    if not sets_:
        raise ValueError("convex_hull_many requires at least one set")
    acc = sets_[0]
    for Z in sets_[1:]:
        acc = convex_hull_pair(acc, Z)
    return acc
