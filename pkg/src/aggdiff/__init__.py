"""Numerical laboratory for small-diffusivity concentration in the
aggregation-diffusion equation u_t - eps*Lap(u) + div(u grad(K)*u) = 0 with
the pointy kernel K(x) = -|x|."""

from .convolution import (
    VelocityField,
    riesz_convolve,
    velocity_1d,
    velocity_2d_spectral,
    velocity_direct_oracle,
)
from .errors import (
    AdmissibilityError,
    AggdiffError,
    BoundaryMassViolation,
    ConfigError,
    FieldError,
    GridError,
    PositivityViolation,
    ResolutionError,
    RunAbort,
    SweepFailure,
)
from .fields import (
    Field,
    Grid,
    Spectrum,
    forward,
    gaussian,
    inverse,
    make_grid,
    spectral_derivative,
)
from .inequalities import (
    GNParams,
    HLSParams,
    gn_ratio,
    gn_solve,
    hls_ratio,
    hls_solve,
)
from .observables import (
    ObservableRecord,
    ObservableSeries,
    first_moment,
    length_scale,
    lp_norm,
    mass,
    sobolev_seminorm,
    time_integral,
    wmp_seminorm,
)
from .solver import (
    RunConfig,
    SolverState,
    heat_evolve,
    run,
    stable_dt,
    step_1d,
    step_2d,
)
from .sweep import (
    FitReport,
    SweepResult,
    SweepRow,
    envelope_check,
    fit_exponent,
    lower_check,
    lp_scaling_check,
    sweep,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
