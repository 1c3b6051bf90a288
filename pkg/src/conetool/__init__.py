"""conetool: exact weight/domain calculus and evolution solvers for the
Laplacian on a straight model cone."""

__version__ = "0.1.0"

from .spectrum import CrossSectionSpectrum, build_cross_section
from .mellin import (
    MellinSymbol,
    Pole,
    PoleLattice,
    eval_symbol,
    indicial_roots,
    is_elliptic_on_line,
    poles_of_inverse,
)
from .weights import (
    AsymptoticsSpace,
    DomainSpec,
    WeightConfig,
    asymptotics_in_window,
    build_domain,
    check_hinfty_admissible,
    custom_domain,
    gamma_window,
    interpolation_descriptor,
    interval_for,
    membership_x_power,
    pq_feasible,
)
from .grid import ConeField, ConeGrid, build_cone_grid, constant_field, \
    field_from_function, field_from_mode_profiles
from .operators import apply_full_laplacian, assemble_laplacian, \
    build_cone_laplacian, fractional_apply, FractionalApplier
from .evolve import BlowUpError, PositivityLossError, SolverConfig, \
    Trajectory, run, step
from .diagnostics import comparison_check, energy_phi, fit_tip_exponent, \
    mass, weak_residual, weighted_norm
