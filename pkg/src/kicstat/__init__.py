"""Kicked Ising chain Floquet spectra, momentum-sector reduction and COE statistics."""
from .combinatorics import dimension_table, relevant_sectors, sector_dimension
from .diagonalize import QuasiEnergySpectrum, eigenphases
from .errors import (
    CacheMissingError,
    ConsistencyError,
    EstimationError,
    InvariantError,
    KicError,
    NumericalError,
    ResourceError,
)
from .floquet import ModelParams, build_sector_basis, sector_floquet
from .pipeline import PipelineConfig, run_statistics
from .rmt import EnsembleSpec

__version__ = "0.1.0"

__all__ = [
    "CacheMissingError",
    "ConsistencyError",
    "EnsembleSpec",
    "EstimationError",
    "InvariantError",
    "KicError",
    "ModelParams",
    "NumericalError",
    "PipelineConfig",
    "QuasiEnergySpectrum",
    "ResourceError",
    "build_sector_basis",
    "dimension_table",
    "eigenphases",
    "relevant_sectors",
    "run_statistics",
    "sector_dimension",
    "sector_floquet",
]
