"""Conic-query oracle: supports, membership, emptiness and 2-D geometry."""

import math

import numpy as np
import pytest

from ccgkit.hull import convex_hull_pair
from ccgkit.sets import (
    CCG,
    from_constrained_zonotope,
    from_ellipsoid,
    from_interval,
    from_zonotope,
    intersection_under_map,
    nonneg_block,
    norm_ball,
    singleton,
)
from ccgkit.solve import (
    EmptySetError,
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    SolverOptions,
    compile_query,
    contains_point,
    is_empty,
    outer_polygon,
    polygon_area,
    sample_members,
    sample_surface,
    support_batch,
    support_function,
    volume_2d,
)
from ccgkit.sets import free_block

from util import random_directions, random_set


def unit_disk(center=(0.0, 0.0)):
    return from_ellipsoid(np.eye(2), center)


class TestSupportFunction:
    def test_ellipsoid_analytic_identity(self):
        rng = np.random.default_rng(0)
        G = rng.standard_normal((3, 3))
        c = rng.standard_normal(3)
        E = from_ellipsoid(G, c)
        for u in rng.standard_normal((20, 3)):
            expected = u @ c + np.linalg.norm(G.T @ u)
            assert support_function(E, u).value == pytest.approx(expected, abs=1e-7)

    def test_zonotope_analytic_identity(self):
        rng = np.random.default_rng(1)
        G = rng.standard_normal((3, 5))
        c = rng.standard_normal(3)
        Z = from_zonotope(G, c)
        for u in rng.standard_normal((20, 3)):
            expected = u @ c + np.linalg.norm(G.T @ u, ord=1)
            assert support_function(Z, u).value == pytest.approx(expected, abs=1e-7)

    def test_dominates_rejection_sampled_feasible_points(self):
        # Constrained set whose latent polytope we can sample directly:
        # |xi| <= 1 with xi_0 + xi_1 = 0.3.
        rng = np.random.default_rng(2)
        G = rng.standard_normal((2, 3))
        c = np.array([0.5, -0.5])
        Z = from_constrained_zonotope(G, c, [[1.0, 1.0, 0.0]], [0.3])
        samples = []
        while len(samples) < 1000:
            xi = rng.uniform(-1, 1, 3)
            xi[1] = 0.3 - xi[0]
            if abs(xi[1]) <= 1.0:
                samples.append(G @ xi + c)
        samples = np.asarray(samples)
        for u in random_directions(rng, 2, 10):
            res = support_function(Z, u)
            assert res.status == OPTIMAL
            assert np.max(samples @ u) <= res.value + 1e-6
            # the returned argmax attains the value
            assert res.point @ u == pytest.approx(res.value, abs=1e-6)

    def test_positive_homogeneity(self):
        rng = np.random.default_rng(3)
        Z = random_set(rng, 2, depth=1)
        u = rng.standard_normal(2)
        h1 = support_function(Z, u).value
        for alpha in (0.5, 2.0, 7.5):
            assert support_function(Z, alpha * u).value == pytest.approx(
                alpha * h1, rel=1e-6, abs=1e-7
            )

    def test_empty_set_reports_infeasible(self):
        Z = intersection_under_map(
            from_interval([-1, -1], [1, 1]), np.eye(2), from_interval([2, 2], [3, 3])
        )
        assert support_function(Z, [1.0, 0.0]).status == INFEASIBLE

    def test_unbounded_set_reports_unbounded(self):
        Z = CCG(np.eye(2), [0, 0], blocks=[free_block([0, 1])])
        assert support_function(Z, [1.0, 0.0]).status == UNBOUNDED

    def test_singleton_support_is_linear(self):
        s = singleton([2.0, -3.0])
        assert support_function(s, [1.0, 1.0]).value == pytest.approx(-1.0)
        np.testing.assert_allclose(support_function(s, [0.0, 1.0]).point, [2.0, -3.0])


class TestContainsPoint:
    def test_center_of_ball_set_is_inside(self):
        rng = np.random.default_rng(4)
        for _ in range(5):
            Z = random_set(rng, 3)
            assert bool(contains_point(Z, Z.c))

    def test_just_outside_unit_disk(self):
        assert not bool(contains_point(unit_disk(), [1.01, 0.0]))
        assert bool(contains_point(unit_disk(), [0.999, 0.0]))

    def test_support_argmax_points_are_members(self):
        rng = np.random.default_rng(5)
        Z = random_set(rng, 2, depth=2)
        for u in random_directions(rng, 2, 20):
            res = support_function(Z, u)
            assert bool(contains_point(Z, res.point))

    def test_reports_residual_for_outside_points(self):
        res = contains_point(unit_disk(), [2.0, 0.0])
        assert res.residual == pytest.approx(1.0, abs=1e-6)
        assert not res.indeterminate

    def test_empty_set_contains_nothing(self):
        Z = intersection_under_map(
            from_interval([-1, -1], [1, 1]), np.eye(2), from_interval([2, 2], [3, 3])
        )
        assert not bool(contains_point(Z, [0.0, 0.0]))

    def test_singleton_paths(self):
        s = singleton([1.0, 2.0])
        assert bool(contains_point(s, [1.0, 2.0]))
        assert not bool(contains_point(s, [1.0, 2.1]))


class TestIsEmpty:
    def test_disjoint_intersection_is_empty(self):
        Z = intersection_under_map(
            from_interval([-1, -1], [1, 1]), np.eye(2), from_interval([2, 2], [3, 3])
        )
        assert is_empty(Z)

    def test_ball_sets_are_nonempty(self):
        rng = np.random.default_rng(6)
        assert not is_empty(random_set(rng, 3, depth=1))

    def test_tangent_intersection_is_nonempty(self):
        # box touching the unit disk exactly at (1, 0)
        Z = intersection_under_map(
            unit_disk(), np.eye(2), from_interval([1.0, -3.0], [3.0, 3.0])
        )
        assert not is_empty(Z)

    def test_inconsistent_singleton_is_empty(self):
        Z = CCG(np.zeros((2, 0)), [0.0, 0.0], A=np.zeros((1, 0)), b=[1.0])
        assert is_empty(Z)


class TestSampleSurface:
    def test_disk_points_lie_on_circle_along_direction(self):
        rng = np.random.default_rng(7)
        V, P = sample_surface(unit_disk(), 16, rng)
        np.testing.assert_allclose(np.linalg.norm(P, axis=0), 1.0, atol=1e-6)
        np.testing.assert_allclose(P, V, atol=1e-5)  # argmax of disk is v itself

    def test_box_axis_supports(self):
        box = from_interval([-1, -1], [1, 1])
        for e in (np.array([1.0, 0]), np.array([-1.0, 0]), np.array([0, 1.0]), np.array([0, -1.0])):
            res = support_function(box, e)
            assert res.value == pytest.approx(1.0, abs=1e-8)
            assert e @ res.point == pytest.approx(1.0, abs=1e-8)

    def test_points_are_members_on_their_hyperplane(self):
        rng = np.random.default_rng(8)
        Z = random_set(rng, 2, depth=1)
        V, P = sample_surface(Z, 12, rng)
        values, _ = support_batch(Z, V.T)
        for i in range(12):
            assert bool(contains_point(Z, P[:, i]))
            assert V[:, i] @ P[:, i] == pytest.approx(values[i], abs=1e-6)

    def test_empty_set_raises(self):
        Z = intersection_under_map(
            from_interval([-1, -1], [1, 1]), np.eye(2), from_interval([2, 2], [3, 3])
        )
        with pytest.raises(EmptySetError):
            sample_surface(Z, 4, np.random.default_rng(0))


class TestOuterPolygon:
    def test_disk_with_four_directions_is_square(self):
        poly = outer_polygon(unit_disk(), 4)
        assert sorted(map(tuple, np.round(poly, 6).tolist())) == [
            (-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)
        ]

    def test_disk_area_matches_circumscribed_polygon(self):
        area = polygon_area(outer_polygon(unit_disk(), 64))
        assert area == pytest.approx(64 * math.tan(math.pi / 64), abs=1e-6)
        assert area < 1.005 * math.pi

    def test_vertices_are_counterclockwise(self):
        poly = outer_polygon(random_set(np.random.default_rng(9), 2, depth=1), 12)
        x, y = poly[:, 0], poly[:, 1]
        signed = 0.5 * (np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))
        assert signed > 0

    def test_polygon_contains_sampled_members(self):
        # membership in the polygon == satisfying the generating half-spaces
        rng = np.random.default_rng(10)
        Z = random_set(rng, 2, depth=1)
        poly = outer_polygon(Z, 24)
        angles = 2 * math.pi * np.arange(24) / 24
        U = np.column_stack([np.cos(angles), np.sin(angles)])
        h, _ = support_batch(Z, U)
        for x in sample_members(Z, 100, rng):
            assert np.all(U @ x <= h + 1e-7)
        assert polygon_area(poly) > 0


class TestVolume2D:
    def test_axis_aligned_box_is_exact_at_k4(self):
        assert volume_2d(from_interval([0, 0], [2, 2]), 4) == pytest.approx(4.0, abs=1e-6)

    def test_monotone_for_nested_sets(self):
        rng = np.random.default_rng(11)
        X = random_set(rng, 2)
        Y = CCG(1.5 * X.G, X.c, X.A, X.b, X.blocks)  # 1.5x scaled superset about c
        assert volume_2d(X, 32) <= volume_2d(Y, 32) + 1e-9

    def test_nonincreasing_in_direction_count(self):
        Z = random_set(np.random.default_rng(12), 2, depth=1)
        assert volume_2d(Z, 64) <= volume_2d(Z, 8) + 1e-9

    def test_empty_set_has_zero_volume(self):
        Z = intersection_under_map(
            from_interval([-1, -1], [1, 1]), np.eye(2), from_interval([2, 2], [3, 3])
        )
        assert volume_2d(Z, 16) == 0.0


class TestCompile:
    def test_disk_compiles_to_one_soc(self):
        q = compile_query(unit_disk())
        assert q.n_vars == 2 and q.eq_rhs.size == 0
        assert len(q.cones) == 1
        assert q.cones[0].encoding == "soc"

    def test_hull_cones_share_the_mixture_variable(self):
        H = convex_hull_pair(unit_disk(), unit_disk((3.0, 0.0)))
        q = compile_query(H)
        cones = [c for c in q.cones if c.p == 2.0]
        assert len(cones) == 2
        assert cones[0].lam == cones[1].lam == (4,)

    def test_cz_infinity_norm_linear_reformulation(self):
        Z = from_constrained_zonotope(np.eye(3), np.zeros(3), [[1.0, 1.0, 1.0]], [1.0])
        q = compile_query(Z)
        assert q.eq_matrix.shape == (1, 3)
        assert len(q.cones) == 1 and q.cones[0].encoding == "linear"
        A, b, _ = q._stack
        assert A.shape[0] == 1 + 6  # equality + two rows per box coordinate

    def test_one_norm_ball_adds_absolute_value_auxiliaries(self):
        Z = CCG(np.eye(2), [0, 0], blocks=[norm_ball(1, [0, 1])])
        q = compile_query(Z)
        assert q.n_vars == 4
        assert q.cones[0].aux == (2, 3)
        assert support_function(Z, [1.0, 1.0]).value == pytest.approx(1.0, abs=1e-7)

    def test_nonneg_block_maps_to_sign_constraints(self):
        Z = CCG(np.eye(2), [0, 0], A=[[1.0, 1.0]], b=[1.0],
                blocks=[nonneg_block([0, 1])])
        q = compile_query(Z)
        assert q.nonneg_vars == (0, 1)
        # the simplex segment from (1,0) to (0,1)
        assert support_function(Z, [1.0, 0.0]).value == pytest.approx(1.0, abs=1e-7)
        assert support_function(Z, [-1.0, -1.0]).value == pytest.approx(-1.0, abs=1e-7)

    def test_extra_equalities_and_objective(self):
        Z = from_interval([-1, -1], [1, 1])
        q = compile_query(Z, extra_eq=(np.array([[1.0, 0.0]]), [0.25]),
                          objective=[0.0, -1.0])
        from ccgkit.solve import solve_query

        out = solve_query(q)
        assert out.status == OPTIMAL
        assert out.x[0] == pytest.approx(0.25, abs=1e-7)
        assert out.value == pytest.approx(-1.0, abs=1e-7)

    def test_unsupported_norm_order_is_rejected(self):
        Z = CCG(np.eye(2), [0, 0], blocks=[norm_ball(3, [0, 1])])
        with pytest.raises(ValueError):
            compile_query(Z)


class TestSolverOptions:
    def test_per_call_tolerance_override(self):
        loose = SolverOptions(feas_tol=0.5)
        assert bool(contains_point(unit_disk(), [1.3, 0.0], options=loose))
        assert not bool(contains_point(unit_disk(), [1.3, 0.0]))
