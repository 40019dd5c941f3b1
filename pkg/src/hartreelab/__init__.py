"""hartreelab: Hartree ground states, mass thresholds and dynamics on a spectral grid."""

__version__ = "0.1.0"

from ._fft import get_workers, set_workers
from .dynamics import (
    EvolutionTrace,
    GwpBudget,
    OrbitReference,
    default_dt,
    evolve,
    gwp_budget,
    orbit_distance,
    perturbation_field,
    soliton_check,
    stability_experiment,
    strang_step,
)
from .energy import (
    EnergyBreakdown,
    convolve,
    density,
    energy,
    hartree_apply,
    interaction,
    multiplier,
    residual,
)
from .grids import (
    BoundaryLeakWarning,
    Field,
    Grid,
    SpectralField,
    boundary_amplitude_ratio,
    forward,
    gaussian_field,
    h1_norm_sq,
    h1_seminorm_sq,
    inner,
    inverse,
    load_field,
    lp_norm,
    make_field,
    make_grid,
    mass,
    normalize_mass,
    save_field,
    smooth_random_field,
    translate,
    zero_field,
)
from .groundstate import (
    FlowOptions,
    GroundStateResult,
    MinimizerDiagnostics,
    binding_check,
    bisect_lambda_star,
    i_of_lambda,
    initial_guess,
    minimize,
    minimizer_diagnostics,
    symmetrization_probe,
)
from .kernels import (
    KernelSpec,
    KernelSymbol,
    QuadratureError,
    catalog_attributes,
    clear_symbol_cache,
    compact_well,
    coulomb,
    fourier_symbol,
    gaussian_well,
    kernel_value,
    power_law,
    radial_symbol,
    yukawa,
)
from .lorentz import (
    GAUSSIAN_INVERSE_SQUARE_RATIO,
    RearrangementProfile,
    c2_estimate,
    c2_split_scan,
    decreasing_rearrangement,
    default_k_trial_family,
    k_lower_bound,
    k_ratio,
    lambda_star_upper,
    lorentz_quasinorm,
    symmetric_decreasing_rearrangement,
    weak_norm_analytic,
)
