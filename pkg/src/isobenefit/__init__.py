"""Lattice growth simulator and auditor for isobenefit urban layouts."""
from ._backend import NAME as BACKEND
from .benefit import AmenityKernel, BenefitField, Decay, benefit_field, benefit_stats, isobenefit_check
from .dna import AuditReport, CentralitySpec, DnaParams, PrincipleResult, audit_all
from .errors import (
    ConfigError,
    DimensionError,
    InfeasibleConfigError,
    IsobenefitError,
    ParameterError,
    RasterParseError,
)
from .grid import CellState, DistanceField, Grid, Region, connected_regions, digest, distance_field, new_grid
from .morphogenesis import GrowthParams, SimConfig, SimState, init_state, run, step

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "AmenityKernel", "BenefitField", "Decay", "benefit_field", "benefit_stats", "isobenefit_check",
    "AuditReport", "CentralitySpec", "DnaParams", "PrincipleResult", "audit_all",
    "ConfigError", "DimensionError", "InfeasibleConfigError", "IsobenefitError", "ParameterError",
    "RasterParseError",
    "CellState", "DistanceField", "Grid", "Region", "connected_regions", "digest", "distance_field",
    "new_grid",
    "GrowthParams", "SimConfig", "SimState", "init_state", "run", "step",
]
