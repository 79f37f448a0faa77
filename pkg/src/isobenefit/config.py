"""Flat key=value run configuration, fail-closed on unknown keys."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .benefit import Decay
from .dna import DnaParams
from .errors import ConfigError, IsobenefitError
from .morphogenesis import GrowthParams, SimConfig

_INT = int
_FLOAT = float


def _opt_int(v):
    return None if v in ("", "none") else int(v)


def _opt_float(v):
    return None if v in ("", "none") else float(v)


def _str(v):
    return v


def _cells(v):
    """``r:c;r:c`` cell list; empty or ``none`` means no cells."""
    if v in ("", "none"):
        return None
    return tuple(tuple(int(x) for x in t.split(":")) for t in v.split(";") if t)


# key -> (default, parser); a None default is derived at use (grid centre,
# block side from a_min_nature, kernel radius from d_star)
KEYS = {
    "grid.width": (200, _INT),
    "grid.height": (200, _INT),
    "grid.cell_size_m": (100.0, _FLOAT),
    "seed": (42, _INT),
    "steps": (100, _INT),
    "snapshot_every": (10, _INT),
    "t_star_min": (30.0, _FLOAT),
    "walk_speed_kmh": (5.0, _FLOAT),
    "garden_time_min": (15.0, _FLOAT),
    "a_min_nature_m2": (1_000_000.0, _FLOAT),
    "c_star": (0.1, _FLOAT),
    "epsilon_cv": (0.15, _FLOAT),
    "attractiveness_tolerance": (0.25, _FLOAT),
    "f_c_star": (0.1, _FLOAT),
    "f_epsilon_cv": (0.15, _FLOAT),
    "benefit_radius_m": (None, _opt_float),
    "benefit_decay": ("exponential", _str),
    "benefit_power": (2.0, _FLOAT),
    "p_build": (0.3, _FLOAT),
    "max_builds_per_step": (None, _opt_int),
    "nature_block_side": (None, _opt_int),
    "composition_dimension": (6, _INT),
    "init.centrality_row": (None, _opt_int),
    "init.centrality_col": (None, _opt_int),
    "init.raster_path": (None, _str),
    "audit.daily_points": (None, _cells),
    "output.dir": ("out", _str),
    "render.scale": (4, _INT),
}


@dataclass
class RunConfig:
    values: dict = field(default_factory=lambda: {k: d for k, (d, _) in KEYS.items()})
    base_dir: Optional[Path] = None

    def __getitem__(self, key):
        return self.values[key]

    def set(self, key, value):
        if key not in KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        self.values[key] = value

    def dna(self):
        v = self.values
        try:
            decay = Decay(v["benefit_decay"])
        except ValueError:
            raise ConfigError(f"unknown benefit_decay {v['benefit_decay']!r}") from None
        try:
            return DnaParams(
                t_star=v["t_star_min"], walk_speed=v["walk_speed_kmh"],
                garden_time=v["garden_time_min"], a_min_nature=v["a_min_nature_m2"],
                c_star=v["c_star"], epsilon_cv=v["epsilon_cv"],
                attractiveness_tolerance=v["attractiveness_tolerance"],
                f_c_star=v["f_c_star"], f_epsilon_cv=v["f_epsilon_cv"],
                benefit_radius_m=v["benefit_radius_m"], benefit_decay=decay,
                benefit_power=v["benefit_power"])
        except IsobenefitError as exc:
            raise ConfigError(str(exc)) from None

    def growth(self):
        v = self.values
        try:
            return GrowthParams(
                p_build=v["p_build"], max_builds_per_step=v["max_builds_per_step"],
                nature_block_side=v["nature_block_side"],
                composition_dimension=v["composition_dimension"], seed=v["seed"])
        except IsobenefitError as exc:
            raise ConfigError(str(exc)) from None

    def raster_path(self):
        p = self.values["init.raster_path"]
        if p is None:
            return None
        p = Path(p)
        if not p.is_absolute() and self.base_dir is not None:
            p = self.base_dir / p
        return p

    def sim_config(self, raster=None):
        v = self.values
        for k in ("grid.width", "grid.height", "steps", "snapshot_every", "render.scale"):
            if v[k] < 0 or (k.startswith("grid") and v[k] == 0):
                raise ConfigError(f"{k} must be positive")
        if not v["grid.cell_size_m"] > 0:
            raise ConfigError("grid.cell_size_m must be positive")
        row, col = v["init.centrality_row"], v["init.centrality_col"]
        if raster is None:
            if (row is None) != (col is None):
                raise ConfigError("init.centrality_row and init.centrality_col go together")
            if row is None:
                row, col = v["grid.height"] // 2, v["grid.width"] // 2
            return SimConfig(v["grid.width"], v["grid.height"], v["grid.cell_size_m"],
                             self.dna(), self.growth(), centrality=(row, col))
        return SimConfig(raster.width, raster.height, raster.cell_size, self.dna(),
                         self.growth(), raster=raster)

    def daily_points_mask(self, grid):
        """Extra daily-needs sources for principle ii, or None."""
        cells = self.values["audit.daily_points"]
        if cells is None:
            return None
        mask = np.zeros(grid.shape, dtype=bool)
        for r, c in cells:
            if not grid.in_bounds(r, c):
                raise ConfigError(f"audit.daily_points cell {(r, c)} outside the grid")
            mask[r, c] = True
        return mask

    def echo(self):
        """Every key that shapes the run, with its effective value, for reports.

        ``output.dir`` is left out so a rerun elsewhere writes the same bytes.
        """
        out = {}
        for k, v in self.values.items():
            if k == "output.dir":
                continue
            if k == "audit.daily_points" and v is not None:
                v = ";".join(f"{r}:{c}" for r, c in v)
            out[f"config.{k}"] = "none" if v is None else v
        return out


def parse_config(text, base_dir=None):
    cfg = RunConfig(base_dir=base_dir)
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown config key {key!r}")
        _, parse = KEYS[key]
        try:
            cfg.values[key] = parse(value)
        except ValueError:
            raise ConfigError(f"line {lineno}: bad value {value!r} for {key}") from None
    if cfg.values["init.raster_path"] is not None and cfg.values["init.centrality_row"] is not None:
        raise ConfigError("init.raster_path excludes init.centrality_row/col")
    return cfg


def load_config(path):
    path = Path(path)
    return parse_config(path.read_text(), base_dir=path.parent)
