"""Equilibria of an electrostatically actuated plate over a dielectric-coated electrode."""

from .bounds import (
    ComparisonBVP,
    kappa0_bound,
    kappa0_case_bounds,
    q_profile,
    solve_clamped_bvp,
    solve_comparison_bvp,
)
from .errors import *  # noqa: F401,F403
from .fields import (
    FieldGrid,
    FieldSolver,
    GapMap,
    PotentialField,
    boundary_data_energy,
    check_max_principle,
    electrostatic_energy,
    solve_potential,
)
from .forces import (
    ForceProfile,
    compute_force,
    directional_derivative_check,
    force_analytic_flat,
    force_load_vector,
)
from .hermite import (
    PlateGrid,
    PlateState,
    assemble_bending_and_stretch,
    assemble_mass,
    interpolate,
    mechanical_energy,
    project_obstacle,
)
from .minimize import (
    EnergyReport,
    SolveContext,
    SolverSettings,
    coercivity_check,
    coercivity_constant,
    continuation_pipeline,
    continuation_certified,
    energy_total,
    make_context,
    minimize_Ek,
)
from .params import (
    BoundaryDataFamily,
    DerivedConstants,
    PhysicalParams,
    build_canonical_boundary_data,
    build_varying_potential_family,
    compute_A,
    compute_K_and_G0,
    compute_m_constants,
    derive_constants,
    family_invariant_report,
    sigma_bar,
    validate_family,
)
from .verify import (
    CoincidenceReport,
    boggio_positivity_probe,
    check_apriori_bound,
    check_coincidence_interval,
    comparison_bound_battery,
    comparison_sandwich,
    run_suite,
)

__version__ = "0.1.0"
