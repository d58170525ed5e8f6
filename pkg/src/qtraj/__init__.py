"""Three-scale diffusive quantum trajectories, their strong-noise jump
limits, and the homogenized generators connecting them."""

from .errors import (
    BlowUpError,
    CenteringError,
    ConditioningError,
    DegeneracyError,
    IdentifiabilityError,
    JordanBlockError,
    ModelValidationError,
    NumericalError,
    QtrajError,
    SpectralPropertyError,
)
from .homogenize import (
    HomogenizationResult,
    check_centering,
    compare_semigroups,
    homogenized_generator,
    kernel_projector,
    pseudo_inverse,
)
from .jump import JumpPath, initial_distribution, marginal, simulate_jump
from .metrics import (
    PathFunction,
    conditional_variation,
    empirical_marginal,
    mz_distance,
    offdiag_norm,
    smooth,
    time_outside_balls,
)
from .presets import rabi_model, three_level_model
from .qnd import (
    AssumptionReport,
    MarkovGenerator,
    ThreeScaleModel,
    check_identifiability,
    check_qnd,
    decoherence_rates,
    markov_from_pi_l_pi,
    tau_eigenvalues,
    transition_rates,
)
from .sde import (
    EnsembleResult,
    NoiseIncrement,
    Trajectory,
    drift,
    effective_step_size,
    simulate_ensemble,
    simulate_three_level_diagonal,
    simulate_trajectory,
    step,
    volatility,
)
from .superop import (
    GkslSpec,
    SuperOperator,
    apply,
    check_density_matrix,
    check_trace_preserving,
    expm,
    gksl_apply,
    hs_adjoint,
    lindblad_from_gksl,
    maximally_coherent,
    maximally_mixed,
    pointer_state,
    project_to_density,
)

__version__ = "0.1.0"
