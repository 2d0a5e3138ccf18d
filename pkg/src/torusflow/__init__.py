"""Numerical workbench for a volume-preserving-to-dissipative family on the
two-torus: certified continued fractions, Ostrowski digits, circle-rotation
ergodic sums, the perturbed hyperbolic map with its stable vector field, the
flow it generates, Poincare sections, and an acceptance suite that pins the
quantitative claims.
"""

from .cfrac import (
    ContinuedFraction,
    ConvergentTable,
    Decomposition,
    DomainError,
    PrecisionExhausted,
    constant_type_bound,
    convergents,
    expand,
    named_real,
    ostrowski_decompose,
    verify_decomposition,
)
from .circle import (
    CircleMap,
    Observable1D,
    birkhoff_sum,
    dk_residual,
    log_bound_envelope,
    rotation_cylinder,
    rotation_number,
)
from .dfa import (
    BETA_ATTRACTIVE_MAX,
    BETA_FIELD_MIN,
    BETA_MIN,
    DfaParams,
    TangentVector,
    TorusPoint,
    apply_f,
    basin_classify,
    basin_grid,
    contraction_residual,
    jacobian,
    stable_field,
)
from .flow import (
    FlowConfig,
    Section,
    TorusObservable,
    commutation_residual,
    compare_integral_to_birkhoff,
    ergodic_integral,
    first_return,
    integrate,
    log_growth_experiment,
    orbit_order_check,
    return_orbit,
)
from .acceptance import CriterionResult, run_criteria

__version__ = "0.1.0"

__all__ = [
    "BETA_ATTRACTIVE_MAX",
    "BETA_FIELD_MIN",
    "BETA_MIN",
    "CircleMap",
    "ContinuedFraction",
    "ConvergentTable",
    "CriterionResult",
    "Decomposition",
    "DfaParams",
    "DomainError",
    "FlowConfig",
    "Observable1D",
    "PrecisionExhausted",
    "Section",
    "TangentVector",
    "TorusObservable",
    "TorusPoint",
    "apply_f",
    "basin_classify",
    "basin_grid",
    "birkhoff_sum",
    "commutation_residual",
    "compare_integral_to_birkhoff",
    "constant_type_bound",
    "contraction_residual",
    "convergents",
    "dk_residual",
    "ergodic_integral",
    "expand",
    "first_return",
    "integrate",
    "jacobian",
    "log_bound_envelope",
    "log_growth_experiment",
    "named_real",
    "orbit_order_check",
    "ostrowski_decompose",
    "return_orbit",
    "rotation_cylinder",
    "rotation_number",
    "run_criteria",
    "stable_field",
    "verify_decomposition",
]
