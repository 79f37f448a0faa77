"""Seeded frontier growth that keeps every hard audit check satisfied.

Each step samples frontier cells, builds those that stay within walking
range of a centrality and of large nature, seeds a new centrality (with its
own nature block when needed) where growth has outrun the existing ones,
and drops a garden next to any new building that lacks nearby green.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .benefit import benefit_field, benefit_stats, isobenefit_check
from .dna import (
    CentralitySpec,
    DnaParams,
    centrality_field,
    centrality_kernels,
    green_field,
    nature_field,
    audit_all,
)
from .errors import InfeasibleConfigError, ParameterError
from .grid import CellState, Grid, connected_regions, frontier, new_grid

log = logging.getLogger(__name__)

RNG_ALGORITHM = "numpy.PCG64"

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class GrowthParams:
    p_build: float = 0.3
    max_builds_per_step: Optional[int] = None
    nature_block_side: Optional[int] = None
    composition_dimension: int = 6
    seed: int = 0
    base_attractiveness: float = 1.0

    def __post_init__(self):
        if not 0.0 <= self.p_build <= 1.0:
            raise ParameterError(f"p_build must lie in [0, 1], got {self.p_build}")
        if self.max_builds_per_step is not None and self.max_builds_per_step < 0:
            raise ParameterError("max_builds_per_step must be non-negative")
        if self.nature_block_side is not None and self.nature_block_side <= 0:
            raise ParameterError("nature_block_side must be positive")
        if self.composition_dimension < 1:
            raise ParameterError("composition_dimension must be at least 1")
        if not self.base_attractiveness > 0:
            raise ParameterError("base_attractiveness must be positive")

    def block_side(self, dna, cell_size):
        if self.nature_block_side is not None:
            return self.nature_block_side
        return math.ceil(math.sqrt(dna.a_min_nature) / cell_size - 1e-9)


@dataclass(frozen=True)
class SimConfig:
    """Everything ``init_state`` needs: a blank grid plus a seed centrality, or a raster."""

    width: int = 200
    height: int = 200
    cell_size: float = 100.0
    dna: DnaParams = field(default_factory=DnaParams)
    growth: GrowthParams = field(default_factory=GrowthParams)
    centrality: Optional[tuple] = None
    raster: Optional[Grid] = None


@dataclass(frozen=True)
class SpawnEvent:
    cell: tuple
    time_to_nearest_centrality: float
    reserved_block: Optional[tuple]


@dataclass(frozen=True, eq=False)
class SimState:
    grid: Grid
    specs: tuple
    step_index: int
    rng_state: dict
    dna: DnaParams
    growth: GrowthParams
    events: tuple = ()

    def rng(self):
        bg = np.random.PCG64()
        bg.state = self.rng_state
        return np.random.Generator(bg)


def _draw_composition(rng, dim):
    return tuple(float(x) for x in rng.dirichlet(np.ones(dim)))


def _normalised(comp):
    s = math.fsum(comp)
    return tuple(x / s for x in comp)


def _draw_attractiveness(rng, specs, tol):
    """Uniform draw in the tolerance band around the current mean.

    Redrawn when the new value would push an existing centrality outside
    the band around the updated mean; falls back to the mean itself.
    """
    atts = [s.attractiveness for s in specs]
    mean = math.fsum(atts) / len(atts)
    for _ in range(32):
        a = float(rng.uniform(mean * (1.0 - tol), mean * (1.0 + tol)))
        new_mean = (math.fsum(atts) + a) / (len(atts) + 1)
        if all(abs(x - new_mean) / new_mean <= tol for x in atts + [a]):
            return a
    return mean


def _new_spec(rng, specs, cell, growth, dna):
    comp = _normalised(_draw_composition(rng, growth.composition_dimension))
    if specs:
        att = _draw_attractiveness(rng, specs, dna.attractiveness_tolerance)
    else:
        att = growth.base_attractiveness
    return CentralitySpec(len(specs), (cell,), att, comp)


def find_nature_block(grid, anchor, side, max_meters):
    """Nearest all-Empty ``side``×``side`` block to ``anchor`` by walking distance.

    Ties go to the smallest top-left (row, col). Returns the top-left corner
    or None when no block lies within ``max_meters``.
    """
    h, w = grid.shape
    if side > h or side > w:
        return None
    occupied = (grid.cells != int(CellState.EMPTY)).astype(np.int32)
    occupied[anchor] = 1
    sat = np.zeros((h + 1, w + 1), dtype=np.int32)
    sat[1:, 1:] = occupied.cumsum(0).cumsum(1)
    counts = sat[side:, side:] - sat[:-side, side:] - sat[side:, :-side] + sat[:-side, :-side]
    free = counts == 0
    if not free.any():
        return None
    i = np.arange(h - side + 1)[:, None]
    j = np.arange(w - side + 1)[None, :]
    r0, c0 = anchor
    dr = np.maximum(0, np.maximum(i - r0, r0 - (i + side - 1)))
    dc = np.maximum(0, np.maximum(j - c0, c0 - (j + side - 1)))
    # octile distance to the block's nearest cell; exact on an open lattice
    diag = np.minimum(dr, dc)
    straight = np.maximum(dr, dc) - diag
    dist = straight * grid.cell_size + diag * (grid.cell_size * _SQRT2)
    dist = np.where(free, dist, np.inf)
    best = dist.min()
    if not best <= max_meters * (1 + 1e-12):
        return None
    rows, cols = np.nonzero(dist == best)
    return int(rows[0]), int(cols[0])


def _block_cells(top_left, side):
    r0, c0 = top_left
    return {(r, c): CellState.NATURE for r in range(r0, r0 + side) for c in range(c0, c0 + side)}


def _nearest_empty(grid, cell, max_meters):
    """Closest Empty cell to ``cell`` by octile distance, ties row-major."""
    r0, c0 = cell
    reach = int(max_meters // grid.cell_size) + 1
    rs, re_ = max(0, r0 - reach), min(grid.height, r0 + reach + 1)
    cs, ce = max(0, c0 - reach), min(grid.width, c0 + reach + 1)
    window = grid.cells[rs:re_, cs:ce] == int(CellState.EMPTY)
    window[r0 - rs, c0 - cs] = False
    if not window.any():
        return None
    rows, cols = np.nonzero(window)
    dr = np.abs(rows + rs - r0)
    dc = np.abs(cols + cs - c0)
    diag = np.minimum(dr, dc)
    d = (np.maximum(dr, dc) - diag) * grid.cell_size + diag * (grid.cell_size * _SQRT2)
    k = int(np.argmin(d))  # np.nonzero is row-major, argmin takes the first
    if d[k] > max_meters * (1 + 1e-12):
        return None
    return int(rows[k] + rs), int(cols[k] + cs)


def _fresh_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


def init_state(config):
    """Seed a greenfield city (one centrality plus one nature block) or load a raster."""
    dna, growth = config.dna, config.growth
    rng = _fresh_rng(growth.seed)
    if config.raster is not None:
        grid = config.raster
        specs = []
        for reg in connected_regions(grid, CellState.CENTRALITY):
            spec = _new_spec(rng, specs, reg.anchor, growth, dna)
            specs.append(replace(spec, cells=tuple(sorted(reg.member_cells))))
        state = SimState(grid, tuple(specs), 0, rng.bit_generator.state, dna, growth)
        report = audit_all(grid, list(specs), params=dna)
        failing = [p for p in ("ii", "iii", "iv", "v", "gardens") if not report[p].passed]
        if failing:
            raise InfeasibleConfigError("principle " + failing[0],
                                        f"input raster violates hard checks {failing}")
        return state
    if config.centrality is None:
        raise InfeasibleConfigError("init", "need a seed centrality or an input raster")
    grid = new_grid(config.width, config.height, config.cell_size)
    cell = tuple(int(x) for x in config.centrality)
    if not grid.in_bounds(*cell):
        raise InfeasibleConfigError("init", f"centrality {cell} outside the grid")
    side = growth.block_side(dna, grid.cell_size)
    if side * side * grid.cell_area < dna.a_min_nature:
        raise InfeasibleConfigError("a_min_nature",
                                    f"a {side}x{side} block is smaller than {dna.a_min_nature:g} m2")
    if side * side + 1 > grid.width * grid.height or side > min(grid.shape):
        raise InfeasibleConfigError(
            "a_min_nature",
            f"{grid.width}x{grid.height} grid cannot host a {side}x{side} nature block "
            f"next to a centrality")
    grid = grid.replace({cell: CellState.CENTRALITY})
    block = find_nature_block(grid, cell, side, dna.d_star)
    if block is None:
        raise InfeasibleConfigError("d_star",
                                    f"no free {side}x{side} nature block within {dna.d_star:g} m of {cell}")
    grid = grid.replace(_block_cells(block, side))
    if not nature_field(grid, dna).values[cell] <= dna.t_star:
        raise InfeasibleConfigError("d_star", f"nature block at {block} is out of walking range")
    spec = _new_spec(rng, [], cell, growth, dna)
    return SimState(grid, (spec,), 0, rng.bit_generator.state, dna, growth)


class _Fields:
    """Distance fields kept current while one step mutates the grid."""

    def __init__(self, grid, dna):
        self.cent = centrality_field(grid, dna)
        self.nature = nature_field(grid, dna)
        self.green = green_field(grid, dna)


def step(state):
    """One round of growth; returns the successor state."""
    dna, growth = state.dna, state.growth
    rng = state.rng()
    cells = state.grid.cells.copy()
    grid = state.grid
    specs = list(state.specs)
    f = _Fields(grid, dna)
    events = []
    side = growth.block_side(dna, grid.cell_size)
    garden_m = dna.garden_time * dna.walk_speed * 1000.0 / 60.0

    candidates = frontier(grid)
    draws = rng.random(len(candidates))
    selected = [rc for rc, u in zip(candidates, draws) if u < growth.p_build]
    builds = 0
    for rc in selected:
        if growth.max_builds_per_step is not None and builds >= growth.max_builds_per_step:
            break
        if cells[rc] != CellState.EMPTY:
            continue
        t_cent = f.cent.values[rc]
        if t_cent <= dna.t_star:
            if not f.nature.values[rc] <= dna.t_star:
                continue
            garden = None
            if not f.green.values[rc] <= dna.garden_time:
                cells[rc] = CellState.BUILT
                garden = _nearest_empty(Grid(grid.width, grid.height, grid.cell_size, cells),
                                        rc, garden_m)
                cells[rc] = CellState.EMPTY
                if garden is None:
                    continue
                green = f.green.with_sources([garden])
                if not green.values[rc] <= dna.garden_time:
                    continue
                cells[garden] = CellState.GARDEN
                f.green = green
            cells[rc] = CellState.BUILT
            builds += 1
            continue
        # beyond walking range of every centrality: seed a new one here
        block = None
        if not f.nature.values[rc] <= dna.t_star:
            cells[rc] = CellState.CENTRALITY
            block = find_nature_block(Grid(grid.width, grid.height, grid.cell_size, cells),
                                      rc, side, dna.d_star)
            if block is None:
                cells[rc] = CellState.EMPTY
                continue
            saved = cells.copy()
            for bc in _block_cells(block, side):
                cells[bc] = CellState.NATURE
            now = Grid(grid.width, grid.height, grid.cell_size, cells)
            nature = nature_field(now, dna)
            if not nature.values[rc] <= dna.t_star:
                cells[:] = saved
                cells[rc] = CellState.EMPTY
                continue
            f.nature = nature
            f.green = f.green.with_sources(now.mask(CellState.NATURE))
        cells[rc] = CellState.CENTRALITY
        spec = _new_spec(rng, specs, rc, growth, dna)
        specs.append(spec)
        events.append(SpawnEvent(rc, float(t_cent), block))
        log.debug("step %d: centrality %d at %s (%.3f min from nearest)",
                  state.step_index + 1, spec.id, rc, t_cent)
        builds += 1
        f.cent = f.cent.with_sources([rc])

    new_grid_ = Grid(grid.width, grid.height, grid.cell_size, cells)
    return SimState(new_grid_, tuple(specs), state.step_index + 1, rng.bit_generator.state,
                    dna, growth, tuple(events))


METRIC_FIELDS = (
    "step",
    "built_cells",
    "centrality_count",
    "nature_area_m2",
    "garden_cells",
    "benefit_min",
    "benefit_cv",
    "worst_walk_centrality_min",
    "worst_walk_nature_min",
    "worst_walk_green_min",
)


def _worst(values, mask):
    if not mask.any():
        return None
    return float(values[mask].max())


def step_metrics(state):
    g, dna = state.grid, state.dna
    built = g.mask(CellState.BUILT)
    settled = g.mask((CellState.BUILT, CellState.CENTRALITY))
    bf = benefit_field(g, centrality_kernels(state.specs, dna), dna.benefit_distance_mode)
    stats = benefit_stats(bf, g)
    return {
        "step": state.step_index,
        "built_cells": int(built.sum()),
        "centrality_count": len(state.specs),
        "nature_area_m2": g.count(CellState.NATURE) * g.cell_area,
        "garden_cells": g.count(CellState.GARDEN),
        "benefit_min": stats.min,
        "benefit_cv": stats.cv,
        "worst_walk_centrality_min": _worst(centrality_field(g, dna).values, built),
        "worst_walk_nature_min": _worst(nature_field(g, dna).values, settled),
        "worst_walk_green_min": _worst(green_field(g, dna).values, built),
    }


def run(state, n_steps, snapshot_every=0, on_snapshot=None, on_metrics=None):
    """Advance ``n_steps``; metrics are emitted for the initial state and every step.

    ``on_snapshot(state)`` fires for the initial state and every
    ``snapshot_every`` steps (never when ``snapshot_every`` is 0).
    """
    if n_steps < 0:
        raise ParameterError("n_steps must be non-negative")
    if on_metrics is not None:
        on_metrics(step_metrics(state))
    if on_snapshot is not None and snapshot_every:
        on_snapshot(state)
    for _ in range(n_steps):
        state = step(state)
        if on_metrics is not None:
            on_metrics(step_metrics(state))
        if on_snapshot is not None and snapshot_every and state.step_index % snapshot_every == 0:
            on_snapshot(state)
    return state


def principle_i(state):
    """Benefit band check on the current city, for reporting."""
    dna = state.dna
    bf = benefit_field(state.grid, centrality_kernels(state.specs, dna), dna.benefit_distance_mode)
    return isobenefit_check(benefit_stats(bf, state.grid), dna.c_star, dna.epsilon_cv)
