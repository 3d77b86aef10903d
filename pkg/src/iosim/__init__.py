"""Dual-polarized intelligent omni-surface downlink simulator."""

from .config import (
    REFLECT,
    REFRACT,
    ConfigError,
    ElementGainModel,
    GeometryLayout,
    PathLossModel,
    ScenarioConfig,
    config_from_dict,
    config_to_dict,
    load_config,
)
from .geometry import (
    Geometry,
    build_geometry,
    element_amplitude,
    ensure_geometry,
    surface_amplitudes,
)
from .channels import ChannelSet, empirical_xpd, synthesize_channels
from .surface import (
    DualPolIosState,
    PhaseCodebook,
    PowerDomainIosState,
    codebook,
    coefficient_matrix,
    power_domain_matrices,
    quantize_phase,
)
from .metrics import (
    AuxWeights,
    Beamformer,
    effective_channel,
    effective_rows,
    mse,
    polarization_power,
    sinr,
    sum_rate,
    surrogate,
)
from .optimizer import (
    AnalogQuadratic,
    IterTrace,
    build_analog_quadratic,
    run,
    solve_analog_continuous,
    solve_analog_discrete,
    solve_digital,
    update_receivers,
    update_weights,
)
from .baselines import (
    SCHEMES,
    PowerSplitModel,
    optimal_epsilon,
    optimize_cellular,
    optimize_dualpol_ris,
    optimize_power_domain,
    optimize_scheme,
    power_domain_rate,
    power_split_derivative,
)
from .experiments import (
    ResultRow,
    SweepSpec,
    aggregate,
    apply_parameter,
    emit,
    run_sweep,
)

__version__ = "0.1.0"
