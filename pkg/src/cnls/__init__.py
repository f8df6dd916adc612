"""Toolkit for coupled nonlinear Schrodinger systems on periodic grids:
constrained ground states, split-step time evolution with conservation
monitoring, and orbital-stability experiments."""

__version__ = "0.1.0"

from .grid import (
    EPS_MODULUS,
    ComplexField,
    FieldVector,
    Grid,
    RealField,
    gradient_sq_norm,
    h1_distance,
    h1_norm_sq,
    integrate,
    l2_norm_sq,
    modulus,
    modulus_partial,
)
from .fieldio import read_fields, write_fields
from .nonlinearity import (
    ConsistencyReport,
    HypothesisParams,
    HypothesisReport,
    HypothesisSampler,
    NonlinearitySpec,
    build_family,
    check_consistency,
    check_hypotheses,
    coupled_product,
    eval_H,
    eval_hj,
    free_field,
    inconsistent_fixture,
    manakov,
    scalar_cubic,
    scalar_power,
    x_modulated,
)
from .energy import (
    ConstraintSet,
    CoercivityReport,
    DiamagneticDefect,
    EnergyContext,
    InconsistentNonlinearityError,
    charges,
    coercivity_check,
    coercivity_gamma,
    diamagnetic_defect,
    energy_gradient,
    energy_hat,
    energy_real,
)
from .groundstate import (
    EnergyDivergedError,
    GroundStateResult,
    MinimizeOptions,
    complex_minimize,
    elliptic_residual,
    lagrange_multipliers,
    minimize,
    standing_wave,
)
from .dynamics import (
    BlowUpError,
    ConservationReport,
    EvolveOptions,
    Trajectory,
    conservation_report,
    evolve,
    step,
)
