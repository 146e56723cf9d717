"""One-dimensional ADER predictor-corrector schemes.

The local space-time predictor comes in two flavours: the classic
fixed-point iteration at the final degree, and a degree-adaptive iteration
that starts from the cell mean and can stop early at the last admissible
iterate (DOOM limiting).  DG, FV and PnPm correctors, an exact Riemann
solver and a small convergence harness sit on top.
"""

from .basis import SpaceTimeBasis, TaylorBasis1D, embed_coeffs, gauss_rule, space_time_index
from .corrector import RUSANOV, NumericalFlux, corrector_dg, corrector_fv, rusanov_flux
from .driver import (
    PROBLEMS,
    RunConfig,
    SolutionField,
    compute_dt,
    convergence_study,
    error_norms,
    get_problem,
    run,
    step,
)
from .equations import Burgers, Euler, LinearAdvection, PdeSystem
from .errors import (
    AderError,
    ConfigurationError,
    InadmissibleStateError,
    NonContractionError,
    PredictorFailure,
    VacuumError,
)
from .mesh import Mesh1D
from .oracle import exact_advection, exact_euler_contact, exact_riemann
from .predictor import (
    PredictorOutcome,
    build_structures,
    fixed_iterations,
    positivity_criterion,
    predictor_adaptive,
    predictor_classic,
    tolerance,
)

__version__ = "0.1.0"
