"""Rotation sensing with a transverse-field Ising chain and its Loschmidt echo."""

from .analysis import (
    EchoCurve,
    EtaFit,
    HalfWidthResult,
    collapse_check,
    constraint_check,
    fit_eta,
    half_width,
    resolution,
    scan_curve,
)
from .core import (
    ApproxParams,
    BlochMode,
    ChainSpec,
    FieldConfig,
    approx_params,
    bloch_modes,
    bogoliubov_angle,
    characteristic_time,
    effective_lambda,
    gaussian_echo_approx,
    log_echo_partial_sum,
    loschmidt_echo,
    loschmidt_echo_grid,
    m_parameter,
    mode_factors,
    quasiexcitation_energy,
)
from .errors import (
    ApproximationSingularError,
    ConfigError,
    CrossingNotBracketedError,
    CutoffRangeError,
    DenseSizeCapError,
    EchoError,
    FlatScanError,
    GridError,
    InvalidChainError,
    InvalidFieldError,
    InvalidInputError,
    NegativeTimeError,
    ValleyTooShallowError,
)
from .protocol import ProtocolConfig, ProtocolTrial, mfc_window, pmg_sample, run_trials, scan_and_estimate

__version__ = "0.1.0"
