"""Hybrid polarization/OAM qubits through weak Kolmogorov turbulence.

Numerical simulator and analysis library: Laguerre-Gauss fields, validated
Kolmogorov phase screens, q-plate encode/decode of rotation-invariant
hybrid qubits, semi-analytic coupling coefficients, and a seeded Monte
Carlo ensemble engine, all cross-checked against each other.
"""

__version__ = "0.1.0"

from .errors import (
    AliasingError,
    DomainError,
    OamTurbError,
    RangeError,
    ShapeMismatchError,
    StatisticsError,
    ToleranceError,
    TotalLossError,
)
from .fields import (
    GridSpec,
    OamModeSpec,
    ScalarField,
    VectorField,
    boundary_energy_fraction,
    make_lg_mode,
    oam_power_spectrum,
    overlap,
    propagate,
    rotate_modal,
)
from .turbulence import (
    PhaseScreen,
    TurbulenceParams,
    apply_screen,
    beam_broadening_mc,
    coherence,
    coherence_estimate,
    fried_from_broadening,
    fried_parameter,
    generate_screen,
    load_screen,
    save_screen,
    structure_function,
    structure_function_estimate,
)
from .elements import (
    MUB_LABELS,
    DecodeResult,
    HybridQubit,
    decode,
    encode,
    fidelity,
    mub_states,
    qplate,
    reference_mode,
    rotate_frame,
    waveplate,
)
from .analytic import (
    DEFAULT_STRENGTHS,
    CouplingCoefficients,
    QuadratureConfig,
    coupling_coefficients,
    default_params_list,
    ph_curve,
    ring_coefficients,
    success_probability,
    theta_transform,
)
from .montecarlo import (
    CoefficientEstimate,
    EnsembleStats,
    ExperimentConfig,
    FidelityScanRow,
    RotationScanRow,
    rotation_preset,
    run_coefficient_estimate,
    run_fidelity_scan,
    run_rotation_scan,
)

__all__ = [
    "__version__",
    # errors
    "OamTurbError", "RangeError", "DomainError", "ShapeMismatchError",
    "AliasingError", "StatisticsError", "ToleranceError", "TotalLossError",
    # fields
    "GridSpec", "ScalarField", "VectorField", "OamModeSpec", "make_lg_mode",
    "overlap", "oam_power_spectrum", "rotate_modal", "propagate",
    "boundary_energy_fraction",
    # turbulence
    "TurbulenceParams", "PhaseScreen", "fried_parameter", "coherence",
    "structure_function", "generate_screen", "apply_screen",
    "structure_function_estimate", "coherence_estimate",
    "fried_from_broadening", "beam_broadening_mc", "save_screen", "load_screen",
    # elements
    "HybridQubit", "DecodeResult", "MUB_LABELS", "waveplate", "qplate",
    "encode", "decode", "rotate_frame", "fidelity", "mub_states",
    "reference_mode",
    # analytic
    "QuadratureConfig", "CouplingCoefficients", "DEFAULT_STRENGTHS",
    "theta_transform", "coupling_coefficients", "ring_coefficients",
    "success_probability", "ph_curve", "default_params_list",
    # montecarlo
    "ExperimentConfig", "EnsembleStats", "FidelityScanRow", "RotationScanRow",
    "CoefficientEstimate", "run_fidelity_scan", "run_rotation_scan",
    "run_coefficient_estimate", "rotation_preset",
]
