"""Eigenstate preparation by repeated heralded measurements on one ancilla qubit."""

from .errors import (
    DimensionMismatch,
    InvalidSchedule,
    InvalidSpec,
    InvalidState,
    NoConvergence,
    NonHermitianInput,
    NonOrthonormalBasis,
    PurifyError,
    UnknownTarget,
    VanishingProbability,
    ZeroCoefficient,
)
from .models import PulseSchedule, bell_xx_model, ghz_ising_model, stirap_model
from .protocol import ProtocolConfig, run_ensemble, run_hybrid_stirap, run_trajectory

__version__ = "0.1.0"

__all__ = [
    "DimensionMismatch", "InvalidSchedule", "InvalidSpec", "InvalidState", "NoConvergence",
    "NonHermitianInput", "NonOrthonormalBasis", "PurifyError", "UnknownTarget",
    "VanishingProbability", "ZeroCoefficient", "PulseSchedule", "ProtocolConfig",
    "bell_xx_model", "ghz_ising_model", "stirap_model", "run_ensemble",
    "run_hybrid_stirap", "run_trajectory", "__version__",
]
