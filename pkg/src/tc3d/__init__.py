"""Optimal-threshold toolkit for the 3D toric code.

Maps phenomenological qubit + measurement noise onto randomly coupled
Ising / Z2 gauge models on 3D and 4D lattices, simulates them along the
Nishimori line, validates the mapping against exact enumeration, and
evaluates thresholds through coupling and entropy dualities.
"""

__version__ = "0.1.0"

from .cells import CellComplex, CellId, Chain, boundary, build_complex, coboundary
from .models import (
    KINDS,
    DisorderSample,
    SpinModel,
    build_model,
    nishimori_beta,
    sample_disorder,
)
from .toric import ToricCode3D, NoiseParams, build_code

__all__ = [
    "CellComplex",
    "CellId",
    "Chain",
    "boundary",
    "coboundary",
    "build_complex",
    "KINDS",
    "DisorderSample",
    "SpinModel",
    "build_model",
    "nishimori_beta",
    "sample_disorder",
    "ToricCode3D",
    "NoiseParams",
    "build_code",
    "__version__",
]
