"""Shared generators and oracle helpers for the test suite."""

import math

import numpy as np

from ccgkit.hull import convex_hull_pair
from ccgkit.sets import (
    CCG,
    from_constrained_zonotope,
    from_ellipsoid,
    from_zonotope,
    norm_ball,
)
from ccgkit.solve import support_batch, unit_directions

BALL_ORDERS = (1.0, 2.0, math.inf)


def random_ball_set(rng, n, p=None):
    """Affine image of a random unit p-ball (nonempty, bounded)."""
    if p is None:
        p = BALL_ORDERS[rng.integers(len(BALL_ORDERS))]
    G = rng.standard_normal((n, n)) + 0.3 * np.eye(n)
    c = 2.0 * rng.standard_normal(n)
    return CCG(G, c, blocks=[norm_ball(p, range(n))])


def random_cz(rng, n, n_extra=3, n_eq=1):
    """Random nonempty constrained zonotope built around a feasible point."""
    n_g = n + n_extra
    G = rng.standard_normal((n, n_g))
    c = 2.0 * rng.standard_normal(n)
    A = rng.standard_normal((n_eq, n_g))
    xi0 = rng.uniform(-0.7, 0.7, n_g)
    return from_constrained_zonotope(G, c, A, A @ xi0)


def random_simple_set(rng, n):
    kind = rng.integers(4)
    if kind == 0:
        return from_ellipsoid(rng.standard_normal((n, n)) + 0.3 * np.eye(n),
                              2.0 * rng.standard_normal(n))
    if kind == 1:
        return from_zonotope(rng.standard_normal((n, n + 2)),
                             2.0 * rng.standard_normal(n))
    if kind == 2:
        return random_cz(rng, n)
    return random_ball_set(rng, n)


def random_set(rng, n, depth=0):
    """Random set, optionally a nested hull to exercise lifted cones."""
    Z = random_simple_set(rng, n)
    for _ in range(depth):
        Z = convex_hull_pair(Z, random_simple_set(rng, n))
    return Z


def support_values(Z, U):
    values, _ = support_batch(Z, U)
    return values


def assert_support_dominates(big, small, U, slack=1e-6):
    """Fail unless h_big(u) >= h_small(u) - slack for every row of U."""
    hb = support_values(big, U)
    hs = support_values(small, U)
    worst = float(np.min(hb - hs))
    assert worst >= -slack, f"support dominance violated by {-worst:.3e}"


def random_directions(rng, n, count):
    return unit_directions(rng, n, count)
