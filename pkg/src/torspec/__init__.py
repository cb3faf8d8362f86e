"""Spectral toolkit for periodic elliptic operators on the circle."""

from torspec.torus_core import (
    AliasingError,
    GridFunction,
    TrigPoly,
    analyze,
    applyD,
    d_torus,
    from_function,
    synthesize,
    translate,
    wrap,
)
from torspec.function_spaces import (
    DyadicSystem,
    HolderIndex,
    besov_norm,
    dyadic_block,
    holder_norm,
    holder_seminorm,
    little_holder_modulus,
    little_holder_profile,
    make_dyadic_system,
    sup_norm_estimate,
)
from torspec.multiplier import (
    MarcinkiewiczReport,
    NonFiniteSymbolError,
    PiecewiseLinearSymbol,
    SymbolSequence,
    apply_multiplier,
    build_mj,
    eta2,
    marcinkiewicz_constants,
)
from torspec.operators import (
    EllipticityCertificate,
    EllipticityError,
    NormalEllipticityCertificate,
    OperatorSpec,
    apply_operator,
    assemble_galerkin,
    check_normal_ellipticity,
    check_uniform_ellipticity,
    largest_normal_angle,
    principal_symbol,
)
from torspec.resolvent_localization import (
    LadderExhaustedError,
    LocalizedCoefficient,
    LocalizedSolver,
    NearSingularError,
    NeumannDivergenceError,
    PartitionData,
    SingularModeError,
    TestDictionary,
    build_partition,
    constant_resolvent,
    find_threshold,
    find_thresholds,
    galerkin_resolvent,
    left_inverse,
    loglog_slope,
    perturbed_resolvent,
    resolvent_norm_estimate,
    resolvent_symbol,
    right_inverse,
    smallness_sweep,
)
from torspec.evolution import (
    CauchyProblemSpec,
    E0_norm,
    E1_norm,
    MaxregStats,
    Propagator,
    QuadratureError,
    Trajectory,
    geometric_grid,
    maxreg_ratio,
    semigroup_apply,
    solve_cauchy,
    trace_norm,
    vanishing_check,
    weighted_sup_norm,
)

__version__ = "0.1.0"

__all__ = [
    "AliasingError",
    "CauchyProblemSpec",
    "DyadicSystem",
    "E0_norm",
    "E1_norm",
    "EllipticityCertificate",
    "EllipticityError",
    "GridFunction",
    "HolderIndex",
    "LadderExhaustedError",
    "LocalizedCoefficient",
    "LocalizedSolver",
    "MarcinkiewiczReport",
    "MaxregStats",
    "NearSingularError",
    "NeumannDivergenceError",
    "NonFiniteSymbolError",
    "NormalEllipticityCertificate",
    "OperatorSpec",
    "PartitionData",
    "PiecewiseLinearSymbol",
    "Propagator",
    "QuadratureError",
    "SingularModeError",
    "SymbolSequence",
    "TestDictionary",
    "Trajectory",
    "TrigPoly",
    "analyze",
    "applyD",
    "apply_multiplier",
    "apply_operator",
    "assemble_galerkin",
    "besov_norm",
    "build_mj",
    "build_partition",
    "check_normal_ellipticity",
    "check_uniform_ellipticity",
    "constant_resolvent",
    "d_torus",
    "dyadic_block",
    "eta2",
    "find_threshold",
    "find_thresholds",
    "from_function",
    "galerkin_resolvent",
    "geometric_grid",
    "holder_norm",
    "holder_seminorm",
    "largest_normal_angle",
    "left_inverse",
    "little_holder_modulus",
    "little_holder_profile",
    "loglog_slope",
    "make_dyadic_system",
    "marcinkiewicz_constants",
    "maxreg_ratio",
    "perturbed_resolvent",
    "principal_symbol",
    "resolvent_norm_estimate",
    "resolvent_symbol",
    "right_inverse",
    "semigroup_apply",
    "smallness_sweep",
    "solve_cauchy",
    "sup_norm_estimate",
    "synthesize",
    "trace_norm",
    "translate",
    "vanishing_check",
    "weighted_sup_norm",
    "wrap",
    "__version__",
]
