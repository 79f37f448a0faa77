"""Benefit field from superposed amenity kernels, and its dispersion band.

Kernel contributions are accumulated in int64 fixed point with a resolution
of ``2**-50``. Sums are therefore exact and independent of kernel order, so
``benefit_field(a + b) == benefit_field(a) + benefit_field(b)`` holds bit for
bit. The price is a range limit: the summed magnitude of all kernels at a
cell must stay below ``MAX_ABS_BENEFIT``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DimensionError, ParameterError
from .grid import CellState, distance_field, state_mask

FRACTION_BITS = 50
_SCALE = float(2**FRACTION_BITS)
MAX_ABS_BENEFIT = float(2 ** (62 - FRACTION_BITS))

STRAIGHT_LINE = "straight-line"
WALK_TIME_SCALED = "walk-time-scaled"

DEFAULT_MASK = (CellState.BUILT, CellState.CENTRALITY)


class Decay(enum.Enum):
    LINEAR_CUTOFF = "linear"
    EXPONENTIAL = "exponential"
    INVERSE_POWER = "inverse-power"


@dataclass(frozen=True)
class AmenityKernel:
    """A point amenity (attractiveness > 0) or disamenity (< 0) at a cell.

    ``power`` is the shape exponent of the inverse-power family and is
    ignored by the other two.
    """

    location: tuple
    attractiveness: float
    radius: float
    decay: Decay = Decay.LINEAR_CUTOFF
    power: float = 2.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ParameterError(f"kernel radius must be positive, got {self.radius}")
        if self.decay is Decay.INVERSE_POWER and not self.power > 0:
            raise ParameterError(f"inverse-power shape must be positive, got {self.power}")

    def scaled(self, factor):
        return AmenityKernel(self.location, self.attractiveness * factor, self.radius,
                             self.decay, self.power)


def decay_profile(kernel, distance):
    d = np.asarray(distance, dtype=np.float64)
    x = d / kernel.radius
    if kernel.decay is Decay.LINEAR_CUTOFF:
        return np.maximum(0.0, 1.0 - x)
    if kernel.decay is Decay.EXPONENTIAL:
        return np.exp(-x)
    return 1.0 / (1.0 + x**kernel.power)


def kernel_value(kernel, distance):
    """Benefit a kernel delivers at ``distance`` meters (scalar or array)."""
    d = np.asarray(distance, dtype=np.float64)
    if np.any(d < 0) or np.any(np.isnan(d)):
        raise ParameterError("distance must be non-negative")
    # every family decays to exactly 0 at infinite (unreachable) distance
    v = kernel.attractiveness * decay_profile(kernel, d)
    return float(v) if v.ndim == 0 else v


def _to_units(values):
    return np.rint(np.asarray(values, dtype=np.float64) * _SCALE).astype(np.int64)


@dataclass(frozen=True, eq=False)
class BenefitField:
    width: int
    height: int
    units: np.ndarray

    @property
    def shape(self):
        return (self.height, self.width)

    @property
    def values(self):
        return self.units.astype(np.float64) / _SCALE

    def __add__(self, other):
        if self.shape != other.shape:
            raise DimensionError(f"field shapes differ: {self.shape} vs {other.shape}")
        return BenefitField(self.width, self.height, self.units + other.units)

    def __eq__(self, other):
        if not isinstance(other, BenefitField):
            return NotImplemented
        return self.shape == other.shape and np.array_equal(self.units, other.units)

    def __getitem__(self, rc):
        return float(self.values[rc])


def zero_field(width, height):
    return BenefitField(width, height, np.zeros((height, width), dtype=np.int64))


def _distances_m(grid, kernel, mode, rows, cols):
    r0, c0 = kernel.location
    if mode == STRAIGHT_LINE:
        return np.hypot(rows - r0, cols - c0) * grid.cell_size
    if mode == WALK_TIME_SCALED:
        src = np.zeros(grid.shape, dtype=bool)
        src[r0, c0] = True
        return distance_field(grid, src).meters
    raise ParameterError(f"unknown distance mode {mode!r}")


def kernel_field(grid, kernel, distance_mode=STRAIGHT_LINE):
    """Fixed-point contribution of one kernel on every cell."""
    r0, c0 = kernel.location
    if not grid.in_bounds(r0, c0):
        raise ParameterError(f"kernel location {kernel.location} outside {grid.shape} grid")
    rows, cols = np.indices(grid.shape, dtype=np.float64)
    d = _distances_m(grid, kernel, distance_mode, rows, cols)
    return _to_units(kernel_value(kernel, d))


def benefit_field(grid, kernels, distance_mode=STRAIGHT_LINE):
    """Per-cell sum of all kernel contributions."""
    total = np.zeros(grid.shape, dtype=np.int64)
    bound = 0.0
    for k in kernels:
        bound += abs(k.attractiveness)
        if bound >= MAX_ABS_BENEFIT:
            raise ParameterError(
                f"summed kernel attractiveness {bound} exceeds the fixed-point range {MAX_ABS_BENEFIT}")
        total += kernel_field(grid, k, distance_mode)
    return BenefitField(grid.width, grid.height, total)


@dataclass(frozen=True)
class BenefitStats:
    """Summary of the benefit over masked cells; ``empty`` when none match.

    ``cv`` (population std / mean) is None when the mask is empty or the
    mean is not positive.
    """

    count: int
    min: Optional[float] = None
    max: Optional[float] = None
    mean: Optional[float] = None
    cv: Optional[float] = None

    @property
    def empty(self):
        return self.count == 0


def benefit_stats(bfield, grid, mask=DEFAULT_MASK):
    if bfield.shape != grid.shape:
        raise DimensionError(f"field shape {bfield.shape} != grid shape {grid.shape}")
    m = state_mask(grid, mask)
    v = bfield.values[m]
    if v.size == 0:
        return BenefitStats(0)
    return stats_of(v)


def stats_of(values):
    v = np.asarray(values, dtype=np.float64).ravel()
    if v.size == 0:
        return BenefitStats(0)
    mean = float(v.mean())
    lo, hi = float(v.min()), float(v.max())
    # pairwise-summed mean can land an ulp outside [min, max]
    mean = min(max(mean, lo), hi)
    cv = None
    if mean > 0:
        cv = float(np.sqrt(np.mean((v - mean) ** 2))) / mean
    return BenefitStats(int(v.size), lo, hi, mean, cv)


@dataclass(frozen=True)
class BandCheck:
    passed: bool
    vacuous: bool
    min: Optional[float]
    cv: Optional[float]
    warnings: tuple = field(default_factory=tuple)


def isobenefit_check(stats, c_star, epsilon_cv):
    """Pass iff every masked value is at least ``c_star`` and CV <= ``epsilon_cv``."""
    if epsilon_cv < 0:
        raise ParameterError(f"epsilon_cv must be non-negative, got {epsilon_cv}")
    if stats.empty:
        return BandCheck(True, True, None, None, ("no cells under the benefit mask",))
    warnings = ()
    if stats.cv is None:
        warnings = ("mean benefit is not positive; dispersion undefined",)
        return BandCheck(False, False, stats.min, None, warnings)
    ok = stats.min >= c_star and stats.cv <= epsilon_cv
    return BandCheck(ok, False, stats.min, stats.cv, warnings)


def layer_check(layer, grid, c_star, epsilon_cv, mask=DEFAULT_MASK):
    """Band check for an exogenous per-cell quality layer."""
    layer = np.asarray(layer, dtype=np.float64)
    if layer.shape != grid.shape:
        raise DimensionError(f"layer shape {layer.shape} != grid shape {grid.shape}")
    return isobenefit_check(stats_of(layer[state_mask(grid, mask)]), c_star, epsilon_cv)
