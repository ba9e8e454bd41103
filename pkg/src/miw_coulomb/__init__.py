"""Many-interacting-worlds discretisation of the 1D Coulomb first excited state."""

__version__ = "0.1.0"

from .density import (  # noqa: E402
    GeneralizedStepDensity,
    StepDensity,
    build_generalized_density,
    build_step_density,
    density_distance,
    empirical_integral,
    empirical_mass,
    zero_bias_transform,
)
from .energy import EnergyReport, average_hamiltonian, coulomb_potential, interworld_potential  # noqa: E402
from .harness import (  # noqa: E402
    ConvergenceRecord,
    ScalingFit,
    check_mass_sandwich,
    fit_xn_scaling,
    ode_limit_check,
    quantile_configuration,
    sweep,
)
from .model import INF, WorldConfiguration, target_density, target_mass, wavefunction  # noqa: E402
from .solver import (  # noqa: E402
    PrecisionMode,
    SolverConfig,
    boundary_residual,
    forward_recursion,
    solve_configuration,
    validate_configuration,
)
