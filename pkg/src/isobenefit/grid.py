"""Lattice model, contiguous regions and walking-time distance fields."""
from __future__ import annotations

import enum
import hashlib
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Union

import numpy as np

from . import _backend
from .errors import DimensionError, ParameterError

UNREACHABLE = math.inf
"""Marker stored in distance fields for cells with no path to any source."""


class CellState(enum.IntEnum):
    EMPTY = 0
    BUILT = 1
    CENTRALITY = 2
    NATURE = 3
    GARDEN = 4


SourceSpec = Union[CellState, Iterable[CellState], Callable[[CellState], bool], np.ndarray]


def _readonly(a):
    a = np.ascontiguousarray(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Grid:
    """Rectangular lattice of cell states; ``cells`` has shape (height, width)."""

    width: int
    height: int
    cell_size: float
    cells: np.ndarray

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise DimensionError(f"grid dimensions must be positive, got {self.width}x{self.height}")
        if not self.cell_size > 0:
            raise DimensionError(f"cell_size must be positive, got {self.cell_size}")
        cells = np.asarray(self.cells, dtype=np.uint8)
        if cells.shape != (self.height, self.width):
            raise DimensionError(f"cells shape {cells.shape} != ({self.height}, {self.width})")
        if cells.size and cells.max() > max(CellState):
            raise DimensionError("cells contain an unknown state code")
        object.__setattr__(self, "cell_size", float(self.cell_size))
        object.__setattr__(self, "cells", _readonly(cells.copy()))

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (
            self.width == other.width
            and self.height == other.height
            and self.cell_size == other.cell_size
            and np.array_equal(self.cells, other.cells)
        )

    def __hash__(self):
        return hash(digest(self))

    @property
    def shape(self):
        return (self.height, self.width)

    @property
    def cell_area(self):
        return self.cell_size * self.cell_size

    def state(self, row, col):
        return CellState(int(self.cells[row, col]))

    def in_bounds(self, row, col):
        return 0 <= row < self.height and 0 <= col < self.width

    def mask(self, states):
        """Boolean (height, width) mask of cells whose state is in ``states``."""
        return state_mask(self, states)

    def count(self, states):
        return int(np.count_nonzero(state_mask(self, states)))

    def replace(self, updates):
        """Return a new grid with ``{(row, col): state}`` applied."""
        cells = self.cells.copy()
        for (r, c), s in updates.items():
            cells[r, c] = int(s)
        return Grid(self.width, self.height, self.cell_size, cells)

    def with_cells(self, cells):
        return Grid(self.width, self.height, self.cell_size, cells)


def new_grid(width, height, cell_size, fill=CellState.EMPTY):
    if width <= 0 or height <= 0:
        raise DimensionError(f"grid dimensions must be positive, got {width}x{height}")
    if not cell_size > 0:
        raise DimensionError(f"cell_size must be positive, got {cell_size}")
    return Grid(width, height, cell_size, np.full((height, width), int(fill), dtype=np.uint8))


def digest(grid):
    """Stable SHA-256 hex digest of dimensions, cell size and cell states."""
    h = hashlib.sha256()
    h.update(f"{grid.width}x{grid.height}@{grid.cell_size!r};".encode())
    h.update(grid.cells.tobytes())
    return h.hexdigest()


def state_mask(grid, sources):
    """Resolve a source selector into a boolean (height, width) mask."""
    if isinstance(sources, np.ndarray):
        m = np.asarray(sources, dtype=bool)
        if m.shape != grid.shape:
            raise DimensionError(f"mask shape {m.shape} != grid shape {grid.shape}")
        return m
    if isinstance(sources, CellState):
        return grid.cells == int(sources)
    if callable(sources):
        allowed = [int(s) for s in CellState if sources(s)]
    else:
        allowed = [int(CellState(s)) for s in sources]
    return np.isin(grid.cells, allowed)


def meters_to_minutes(meters, walk_speed):
    """Walking time in minutes for ``meters`` at ``walk_speed`` km/h."""
    return meters * 60.0 / (walk_speed * 1000.0)


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Travel time in minutes to the nearest source; ``UNREACHABLE`` where none.

    ``meters`` keeps the underlying shortest-path lengths so a field can be
    extended with new sources exactly.
    """

    width: int
    height: int
    cell_size: float
    walk_speed: float
    meters: np.ndarray
    values: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, DistanceField):
            return NotImplemented
        return (
            self.shape == other.shape
            and self.walk_speed == other.walk_speed
            and np.array_equal(self.values, other.values)
        )

    @property
    def shape(self):
        return (self.height, self.width)

    def reachable(self):
        return np.isfinite(self.values)

    def __getitem__(self, rc):
        return float(self.values[rc])

    def with_sources(self, extra):
        """Field for the union of the current sources and the cells in ``extra``.

        ``extra`` is a boolean mask or an iterable of (row, col).
        """
        if isinstance(extra, np.ndarray):
            seeds = np.flatnonzero(np.asarray(extra, dtype=bool).ravel())
        else:
            seeds = np.asarray([r * self.width + c for r, c in extra], dtype=np.intp)
        flat = self.meters.ravel().copy()
        if seeds.size:
            _backend.relax_field(flat, self.height, self.width, self.cell_size, seeds)
        return _make_field(self.width, self.height, self.cell_size, self.walk_speed, flat)


def _make_field(width, height, cell_size, walk_speed, flat_meters):
    meters = flat_meters.reshape(height, width)
    minutes = meters_to_minutes(meters, walk_speed)
    return DistanceField(width, height, cell_size, walk_speed, _readonly(meters), _readonly(minutes))


def distance_field(grid, sources, walk_speed=5.0):
    """Multi-source walking time over the 8-connected lattice.

    Orthogonal steps cost ``cell_size`` meters, diagonal steps
    ``cell_size * sqrt(2)``; every cell is traversable. With no source cell
    the result is all ``UNREACHABLE``.
    """
    if not walk_speed > 0:
        raise ParameterError(f"walk_speed must be positive, got {walk_speed}")
    mask = state_mask(grid, sources)
    flat = np.full(grid.width * grid.height, UNREACHABLE, dtype=np.float64)
    seeds = np.flatnonzero(mask.ravel())
    if seeds.size:
        _backend.relax_field(flat, grid.height, grid.width, grid.cell_size, seeds)
    return _make_field(grid.width, grid.height, grid.cell_size, float(walk_speed), flat)


@dataclass(frozen=True)
class Region:
    state_class: CellState
    member_cells: frozenset
    area: float

    @property
    def size(self):
        return len(self.member_cells)

    @property
    def anchor(self):
        """Smallest (row, col) member."""
        return min(self.member_cells)


def label_mask(mask):
    """4-connected labels for a boolean mask: (labels (h, w) int32, count)."""
    h, w = mask.shape
    flat = np.ascontiguousarray(mask, dtype=np.uint8).ravel()
    labels, count = _backend.label_regions(flat, h, w)
    return np.asarray(labels).reshape(h, w), int(count)


def connected_regions(grid, state_class):
    """Maximal 4-connected regions of ``state_class``, ordered by first cell."""
    state_class = CellState(state_class)
    labels, count = label_mask(grid.cells == int(state_class))
    buckets = [[] for _ in range(count)]
    rows, cols = np.nonzero(labels >= 0)
    for r, c in zip(rows.tolist(), cols.tolist()):
        buckets[labels[r, c]].append((r, c))
    area = grid.cell_area
    return [Region(state_class, frozenset(b), len(b) * area) for b in buckets]


def dilate8(mask):
    """Cells that are in ``mask`` or 8-adjacent to a cell in it."""
    out = mask.copy()
    out[1:, :] |= mask[:-1, :]
    out[:-1, :] |= mask[1:, :]
    out[:, 1:] |= mask[:, :-1]
    out[:, :-1] |= mask[:, 1:]
    out[1:, 1:] |= mask[:-1, :-1]
    out[1:, :-1] |= mask[:-1, 1:]
    out[:-1, 1:] |= mask[1:, :-1]
    out[:-1, :-1] |= mask[1:, 1:]
    return out


def frontier_mask(grid):
    settled = grid.mask((CellState.BUILT, CellState.CENTRALITY))
    return dilate8(settled) & (grid.cells == int(CellState.EMPTY))


def frontier(grid):
    """Empty cells 8-adjacent to a Built or Centrality cell, row-major."""
    rows, cols = np.nonzero(frontier_mask(grid))
    return list(zip(rows.tolist(), cols.tolist()))
