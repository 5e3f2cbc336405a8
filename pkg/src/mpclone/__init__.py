"""Mirror phase-covariant cloning of polarization qubits: analytic formulas and an optical simulator."""
from .analytic import (
    PCC,
    UC,
    CloneParameter,
    FidelityReport,
    InputQubit,
    QubitDistribution,
    average_fidelity,
    lambda_from_a2,
    lambda_from_theta,
    single_copy_fidelity,
)
from .detectors import DetectorModel, coincidences, fidelities_from_coincidences
from .optics import MU0, NU0, PdbsConfig, SpdcConfig, clone_density

__version__ = "0.1.0"

__all__ = [
    "PCC",
    "UC",
    "MU0",
    "NU0",
    "CloneParameter",
    "DetectorModel",
    "FidelityReport",
    "InputQubit",
    "PdbsConfig",
    "QubitDistribution",
    "SpdcConfig",
    "average_fidelity",
    "clone_density",
    "coincidences",
    "fidelities_from_coincidences",
    "lambda_from_a2",
    "lambda_from_theta",
    "single_copy_fidelity",
]
