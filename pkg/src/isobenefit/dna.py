"""Compliance audit of a land-use grid against the isobenefit principles.

Seven checks make up a report: benefit equality (i), reach of daily points
(ii), of a centrality (iii) and of large nature (iv), compactness and
nature size (v), centrality diversity (vi), and reach of small green
(gardens). Every check is read-only.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .benefit import (
    DEFAULT_MASK,
    STRAIGHT_LINE,
    AmenityKernel,
    Decay,
    benefit_field,
    benefit_stats,
    isobenefit_check,
    layer_check,
)
from .errors import DimensionError, ParameterError
from .grid import CellState, connected_regions, digest, distance_field, label_mask

PRINCIPLES = ("i", "ii", "iii", "iv", "v", "vi", "gardens")
HARD_PRINCIPLES = ("ii", "iii", "iv", "v", "gardens")

D_STAR_BAND = (2000.0, 3000.0)
COMPOSITION_MIN_L1 = 1e-6


@dataclass(frozen=True)
class DnaParams:
    """Calibration constants; times in minutes, speeds in km/h, areas in m².

    ``benefit_radius_m`` and ``benefit_decay`` shape the kernel each
    centrality cell contributes to the benefit field; the radius defaults to
    twice ``d_star``. A cutoff kernel at ``d_star`` leaves the growth front
    of a polycentric city too far below its core for the CV band.
    """

    t_star: float = 30.0
    walk_speed: float = 5.0
    garden_time: float = 15.0
    a_min_nature: float = 1_000_000.0
    c_star: float = 0.1
    epsilon_cv: float = 0.15
    attractiveness_tolerance: float = 0.25
    f_c_star: float = 0.1
    f_epsilon_cv: float = 0.15
    benefit_radius_m: Optional[float] = None
    benefit_decay: Decay = Decay.EXPONENTIAL
    benefit_power: float = 2.0
    benefit_distance_mode: str = STRAIGHT_LINE

    def __post_init__(self):
        if not self.t_star > 0:
            raise ParameterError(f"t_star must be positive, got {self.t_star}")
        if not self.walk_speed > 0:
            raise ParameterError(f"walk_speed must be positive, got {self.walk_speed}")
        if not 0 <= self.garden_time <= self.t_star:
            raise ParameterError(f"garden_time must lie in [0, t_star], got {self.garden_time}")
        if not self.a_min_nature > 0:
            raise ParameterError(f"a_min_nature must be positive, got {self.a_min_nature}")
        for name in ("epsilon_cv", "attractiveness_tolerance", "f_epsilon_cv"):
            if getattr(self, name) < 0:
                raise ParameterError(f"{name} must be non-negative")
        if self.benefit_radius_m is not None and not self.benefit_radius_m > 0:
            raise ParameterError("benefit_radius_m must be positive")

    @property
    def d_star(self):
        """Distance walked in ``t_star`` minutes, in meters."""
        return self.t_star * self.walk_speed * 1000.0 / 60.0

    @property
    def kernel_radius(self):
        return self.benefit_radius_m if self.benefit_radius_m is not None else 2.0 * self.d_star

    def warnings(self):
        lo, hi = D_STAR_BAND
        if not lo <= self.d_star <= hi:
            return [f"d_star={self.d_star:g} m outside the {lo:g}-{hi:g} m walkability band"]
        return []

    def as_dict(self):
        out = {}
        for f in fields(self):
            v = getattr(self, f.name)
            out[f.name] = v.value if isinstance(v, Decay) else v
        out["d_star"] = self.d_star
        out["kernel_radius"] = self.kernel_radius
        return out


@dataclass(frozen=True)
class CentralitySpec:
    """An attractive node; ``composition`` is its amenity-mix share vector.

    ``composition`` may be None for centralities read from a bare raster,
    in which case the diversity check cannot be evaluated.
    """

    id: int
    cells: tuple
    attractiveness: float
    composition: Optional[tuple] = None

    def __post_init__(self):
        if not self.attractiveness > 0:
            raise ParameterError(f"centrality {self.id}: attractiveness must be positive")
        object.__setattr__(self, "cells", tuple((int(r), int(c)) for r, c in self.cells))
        if self.composition is not None:
            comp = tuple(float(x) for x in self.composition)
            if any(x < 0 for x in comp) or abs(math.fsum(comp) - 1.0) > 1e-9:
                raise ParameterError(
                    f"centrality {self.id}: composition must be non-negative and sum to 1")
            object.__setattr__(self, "composition", comp)


def specs_from_grid(grid, attractiveness=1.0):
    """One spec per 4-connected Centrality region, with unknown composition."""
    regions = connected_regions(grid, CellState.CENTRALITY)
    return [CentralitySpec(i, tuple(sorted(r.member_cells)), attractiveness)
            for i, r in enumerate(regions)]


def centrality_kernels(specs, params):
    """One kernel per centrality cell, weighted by its spec's attractiveness."""
    out = []
    for s in specs:
        for cell in s.cells:
            out.append(AmenityKernel(cell, s.attractiveness, params.kernel_radius,
                                     params.benefit_decay, params.benefit_power))
    return out


@dataclass
class PrincipleResult:
    principle_id: str
    passed: bool
    vacuous: bool = False
    measured: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)


def _row_major_cells(mask):
    rows, cols = np.nonzero(mask)
    return list(zip(rows.tolist(), cols.tolist()))


def _reach_result(pid, targets, dfield, limit, empty_note):
    """Every target cell must be within ``limit`` minutes (inclusive)."""
    if not targets.any():
        return PrincipleResult(pid, True, True, {"limit_min": limit, "cells": 0}, [], [empty_note])
    vals = dfield.values
    bad = targets & ~(vals <= limit)
    worst = float(vals[targets].max())
    violations = [(r, c, float(vals[r, c])) for r, c in _row_major_cells(bad)]
    measured = {"limit_min": limit, "cells": int(targets.sum()), "worst_min": worst,
                "unreachable": int((targets & ~np.isfinite(vals)).sum())}
    return PrincipleResult(pid, not violations, False, measured, violations)


def _band_violations(values, mask, c_star, epsilon_cv, mean):
    """Cells below the floor or, failing that, the ones driving dispersion."""
    low = mask & (values < c_star)
    if low.any():
        return low
    if mean is not None and mean > 0:
        return mask & (np.abs(values - mean) > epsilon_cv * mean)
    return mask.copy()


def audit_principle_i(grid, kernels, params, f_layer=None, mask=DEFAULT_MASK):
    """Benefit (and optional quality layer) within the band over settled cells."""
    m = grid.mask(mask)
    bf = benefit_field(grid, kernels, params.benefit_distance_mode)
    stats = benefit_stats(bf, grid, mask)
    check = isobenefit_check(stats, params.c_star, params.epsilon_cv)
    measured = {"cells": stats.count, "benefit_min": stats.min, "benefit_max": stats.max,
                "benefit_mean": stats.mean, "benefit_cv": stats.cv}
    notes = list(check.warnings)
    if check.vacuous:
        return PrincipleResult("i", True, True, measured, [], notes)
    passed = check.passed
    bad = np.zeros(grid.shape, dtype=bool)
    values = bf.values
    if not check.passed:
        bad |= _band_violations(values, m, params.c_star, params.epsilon_cv, stats.mean)
    if f_layer is not None:
        f_layer = np.asarray(f_layer, dtype=np.float64)
        fcheck = layer_check(f_layer, grid, params.f_c_star, params.f_epsilon_cv, mask)
        measured["f_min"] = fcheck.min
        measured["f_cv"] = fcheck.cv
        notes.extend(fcheck.warnings)
        if not fcheck.passed:
            passed = False
            fvals = f_layer[m]
            fmean = float(fvals.mean()) if fvals.size else None
            fbad = _band_violations(f_layer, m, params.f_c_star, params.f_epsilon_cv, fmean)
            bad |= fbad
    violations = [(r, c, float(values[r, c])) for r, c in _row_major_cells(bad)]
    return PrincipleResult("i", passed, False, measured, violations, notes)


def centrality_field(grid, params, extra_sources=None):
    src = grid.mask(CellState.CENTRALITY)
    if extra_sources is not None:
        extra = np.asarray(extra_sources, dtype=bool)
        if extra.shape != grid.shape:
            raise DimensionError("extra source mask does not match grid")
        src = src | extra
    return distance_field(grid, src, params.walk_speed)


def audit_principle_ii(grid, params, extra_sources=None, dfield=None):
    """Built cells reach a daily-needs point within ``t_star``.

    Daily-needs points are the centralities plus any ``extra_sources`` mask.
    """
    if dfield is None:
        dfield = centrality_field(grid, params, extra_sources)
    return _reach_result("ii", grid.mask(CellState.BUILT), dfield, params.t_star,
                         "no built cells")


def audit_principle_iii(grid, params, dfield=None):
    if dfield is None:
        dfield = centrality_field(grid, params)
    return _reach_result("iii", grid.mask(CellState.BUILT), dfield, params.t_star,
                         "no built cells")


def qualifying_nature_mask(grid, params):
    """Nature cells belonging to a 4-connected region of at least the minimum area."""
    labels, count = label_mask(grid.cells == int(CellState.NATURE))
    if count == 0:
        return np.zeros(grid.shape, dtype=bool)
    sizes = np.bincount(labels[labels >= 0], minlength=count)
    big = sizes * grid.cell_area >= params.a_min_nature
    return (labels >= 0) & big[np.maximum(labels, 0)]


def nature_field(grid, params):
    return distance_field(grid, qualifying_nature_mask(grid, params), params.walk_speed)


def green_field(grid, params):
    return distance_field(grid, (CellState.GARDEN, CellState.NATURE), params.walk_speed)


def audit_principle_iv(grid, params, dfield=None):
    if dfield is None:
        dfield = nature_field(grid, params)
    return _reach_result("iv", grid.mask((CellState.BUILT, CellState.CENTRALITY)), dfield,
                         params.t_star, "no settled cells")


def isolated_built_mask(grid):
    settled = grid.mask((CellState.BUILT, CellState.CENTRALITY))
    built = grid.cells == int(CellState.BUILT)
    pad = np.pad(settled, 1).astype(np.int8)
    h, w = grid.shape
    neighbours = sum(pad[1 + dr:1 + dr + h, 1 + dc:1 + dc + w]
                     for dr in (-1, 0, 1) for dc in (-1, 0, 1) if dr or dc)
    return built & (neighbours == 0)


def audit_principle_v(grid, params):
    """Nature regions meet the minimum area; no built cell stands alone."""
    regions = connected_regions(grid, CellState.NATURE)
    small = [r for r in regions if r.area < params.a_min_nature]
    isolated = _row_major_cells(isolated_built_mask(grid))
    n_built = grid.count(CellState.BUILT)
    measured = {"nature_regions": len(regions),
                "min_nature_area_m2": min((r.area for r in regions), default=None),
                "undersized_regions": len(small), "isolated_built": len(isolated)}
    if not regions and n_built == 0:
        return PrincipleResult("v", True, True, measured, [], ["no nature and no built cells"])
    violations = [(*r.anchor, r.area) for r in small]
    violations += [(r, c, 0.0) for r, c in isolated]
    notes = [f"nature region at {r.anchor} ({r.area:g} m2) is garden-sized" for r in small]
    return PrincipleResult("v", not violations, False, measured, violations, notes)


def audit_principle_vi(specs, params):
    """Centralities differ in composition and are similar in attractiveness."""
    specs = list(specs)
    if len(specs) < 2:
        return PrincipleResult("vi", True, True, {"centralities": len(specs)}, [],
                               ["fewer than two centralities"])
    atts = np.array([s.attractiveness for s in specs], dtype=np.float64)
    mean = float(atts.mean())
    rel = np.abs(atts - mean) / mean
    tol = params.attractiveness_tolerance
    measured = {"centralities": len(specs), "mean_attractiveness": mean,
                "max_relative_deviation": float(rel.max())}
    violations = []
    notes = []
    for s, dev in zip(specs, rel.tolist()):
        if dev > tol:
            violations.append((*s.cells[0], dev))
    if any(s.composition is None for s in specs):
        notes.append("composition not supplied for every centrality; distinctness not checked")
        min_l1 = None
    else:
        min_l1 = math.inf
        for a_idx in range(len(specs)):
            for b_idx in range(a_idx + 1, len(specs)):
                a, b = specs[a_idx], specs[b_idx]
                if len(a.composition) != len(b.composition):
                    raise ParameterError("composition vectors differ in dimension")
                l1 = math.fsum(abs(x - y) for x, y in zip(a.composition, b.composition))
                min_l1 = min(min_l1, l1)
                if l1 <= COMPOSITION_MIN_L1:
                    violations.append((*b.cells[0], l1))
    measured["min_composition_l1"] = min_l1
    if np.any(atts > mean * (1.0 + 2.0 * tol)):
        notes.append("a dominant centrality exceeds the mean attractiveness by more than twice the tolerance")
    vacuous = min_l1 is None and not violations
    return PrincipleResult("vi", not violations, vacuous, measured, violations, notes)


def audit_gardens(grid, params, dfield=None):
    if dfield is None:
        dfield = green_field(grid, params)
    return _reach_result("gardens", grid.mask(CellState.BUILT), dfield, params.garden_time,
                         "no built cells")


@dataclass
class AuditReport:
    results: dict
    overall_pass: bool
    vacuous: bool
    params: dict
    digest: str
    warnings: list = field(default_factory=list)

    def __getitem__(self, pid):
        return self.results[pid]

    def failed(self):
        return [p for p in PRINCIPLES if not self.results[p].passed]

    def hard_pass(self):
        """Whether the reachability and compactness checks all pass."""
        return all(self.results[p].passed for p in HARD_PRINCIPLES)

    def as_dict(self):
        return asdict(self)


def audit_all(grid, specs=None, kernels=None, params=None, f_layer=None, extra_sources=None):
    """Run every check; ``specs`` default to one per centrality region of the grid.

    ``kernels`` default to those derived from ``specs``; pass extra
    amenities and disamenities by supplying the full list.
    """
    params = params or DnaParams()
    if specs is None:
        specs = specs_from_grid(grid)
    for s in specs:
        for r, c in s.cells:
            if not grid.in_bounds(r, c):
                raise DimensionError(f"centrality {s.id} cell {(r, c)} outside grid")
    if kernels is None:
        kernels = centrality_kernels(specs, params)
    if f_layer is not None and np.shape(f_layer) != grid.shape:
        raise DimensionError("quality layer does not match grid")
    cfield = centrality_field(grid, params)
    dfield = cfield if extra_sources is None else centrality_field(grid, params, extra_sources)
    results = {
        "i": audit_principle_i(grid, kernels, params, f_layer),
        "ii": audit_principle_ii(grid, params, dfield=dfield),
        "iii": audit_principle_iii(grid, params, dfield=cfield),
        "iv": audit_principle_iv(grid, params),
        "v": audit_principle_v(grid, params),
        "vi": audit_principle_vi(specs, params),
        "gardens": audit_gardens(grid, params),
    }
    live = [r for r in results.values() if not r.vacuous]
    overall = all(r.passed for r in live)
    return AuditReport(results, overall, not live, params.as_dict(), digest(grid),
                       params.warnings())
