"""Numerical study of limit cycles bifurcating from hyperbolic polycycles."""

from .family import (
    Chart,
    ChartKind,
    ParametricFamily,
    ParamPoint,
    PlanePoint,
    builtin_kolmogorov,
    eval_field,
    jacobian,
    parse_family,
    serialize_family,
    to_chart,
)
from .flow import CrossingEvent, IntegratorConfig, Section, flow_to_section, integrate, switch_chart_policy
from .saddletools import (
    GraphicNumber,
    PolycycleSkeleton,
    SaddleData,
    SaddleSeed,
    check_invariance,
    find_equilibrium,
    graphic_number,
    no_bifurcation_guard,
    saddle_data,
)
from .returnmap import (
    PowerLawFit,
    ReturnSample,
    ScalarDisplacementProblem,
    TimeFit,
    compensator,
    displacement,
    fit_power_law,
    fit_return_time,
    flatness_probe,
    sample_return_map,
    solve_scalar_displacement,
)
from .asymptotics import (
    ArcSample,
    CycleRecord,
    TauSpec,
    design_arc,
    find_limit_cycle,
    predicted_location,
    tau_conditions,
    verify_theorem_a,
    verify_theorem_b,
)

__version__ = "0.1.0"
