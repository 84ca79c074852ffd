"""Guaranteed set-valued state estimation with constrained convex generators.

The package is organized around one set representation (:mod:`ccgkit.sets`)
with closed-form linear maps, sums, intersections and an exact convex hull
(:mod:`ccgkit.hull`); conic-program queries provide the numerical oracle
(:mod:`ccgkit.solve`); ray-shooting order reduction caps representation
growth (:mod:`ccgkit.reduction`); and the filter plus a unicycle/beacon
simulation sit on top (:mod:`ccgkit.estimator`, :mod:`ccgkit.unicycle`).
"""

from .sets import (
    CCG,
    ConstraintBlock,
    set_class,
    from_constrained_zonotope,
    from_ellipsoid,
    from_interval,
    from_zonotope,
    intersection_under_map,
    linear_map,
    minkowski_sum,
    relax_to_box_blocks,
    singleton,
    translate,
    validate,
)
from .hull import convex_hull_many, convex_hull_pair, lift_block
from .solve import (
    SolverOptions,
    contains_point,
    is_empty,
    outer_polygon,
    sample_surface,
    support_function,
    volume_2d,
)
from .reduction import ReductionSpec, reduce_to_order
from .estimator import (
    FilterState,
    StepLog,
    UncertainStepModel,
    VertexAffineMap,
    build_output_set,
    enumerate_vertices,
    filter_step,
    propagate,
    update,
)
from .unicycle import ScenarioConfig, default_config, run_scenario

__version__ = "0.1.0"

__all__ = [
    "CCG",
    "ConstraintBlock",
    "FilterState",
    "ReductionSpec",
    "ScenarioConfig",
    "SolverOptions",
    "StepLog",
    "UncertainStepModel",
    "VertexAffineMap",
    "build_output_set",
    "contains_point",
    "convex_hull_many",
    "convex_hull_pair",
    "default_config",
    "enumerate_vertices",
    "filter_step",
    "from_constrained_zonotope",
    "from_ellipsoid",
    "from_interval",
    "from_zonotope",
    "intersection_under_map",
    "is_empty",
    "lift_block",
    "linear_map",
    "minkowski_sum",
    "outer_polygon",
    "propagate",
    "reduce_to_order",
    "relax_to_box_blocks",
    "run_scenario",
    "sample_surface",
    "set_class",
    "singleton",
    "support_function",
    "translate",
    "update",
    "validate",
    "volume_2d",
]
