"""Exact solver and oscillation analyzer for scalar linear impulsive
differential equations with piecewise constant deviating arguments."""

from .expressions import (
    Const,
    Cos,
    Exp,
    ExpressionError,
    Neg,
    Pow,
    Prod,
    ScalarExpr,
    Sin,
    Sum,
    Var,
    evaluate,
    evaluate_array,
    parse_expression,
    serialize_expression,
)
from .grid import (
    ArgumentGrid,
    ExplicitGrid,
    GridRangeError,
    LaggedUniformGrid,
    UniformGrid,
)
from .kernel import (
    H3Report,
    IntervalKernel,
    KernelTable,
    SingularKernel,
    criterion_integrals,
    flow_weighted_integral,
    gl2_lagged_integral,
    gl2_oscillation_bound,
    h3_check,
    j_value,
    phi,
    w_intra,
)
from .oracle import oracle_integrate
from .oscillation import (
    CriterionReport,
    GronwallBound,
    OscillationVerdict,
    aw_criterion,
    classify_continuous,
    classify_discrete,
    gronwall_bound,
    nonosc_criterion,
    recurring_sign_changes,
    wn_sequence,
)
from .problem import ImpulseDegenerate, ImpulseRule, Problem
from .quadrature import QuadratureError, integrate
from .solver import (
    SkeletonPoint,
    Trajectory,
    eval_dense,
    solve,
    solve_lagged,
    step,
    zeros_in_interval,
)

__version__ = "0.1.0"

__all__ = [
    "ArgumentGrid",
    "Const",
    "Cos",
    "CriterionReport",
    "Exp",
    "ExplicitGrid",
    "ExpressionError",
    "GridRangeError",
    "GronwallBound",
    "H3Report",
    "ImpulseDegenerate",
    "ImpulseRule",
    "IntervalKernel",
    "KernelTable",
    "LaggedUniformGrid",
    "Neg",
    "OscillationVerdict",
    "Pow",
    "Problem",
    "Prod",
    "QuadratureError",
    "ScalarExpr",
    "Sin",
    "SingularKernel",
    "SkeletonPoint",
    "Sum",
    "Trajectory",
    "UniformGrid",
    "Var",
    "aw_criterion",
    "classify_continuous",
    "classify_discrete",
    "criterion_integrals",
    "eval_dense",
    "evaluate",
    "evaluate_array",
    "flow_weighted_integral",
    "gl2_lagged_integral",
    "gl2_oscillation_bound",
    "gronwall_bound",
    "h3_check",
    "integrate",
    "j_value",
    "nonosc_criterion",
    "oracle_integrate",
    "parse_expression",
    "phi",
    "recurring_sign_changes",
    "serialize_expression",
    "solve",
    "solve_lagged",
    "step",
    "w_intra",
    "wn_sequence",
    "zeros_in_interval",
]
