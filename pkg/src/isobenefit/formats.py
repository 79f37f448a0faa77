"""Text rasters, PPM rendering, metrics CSV and key=value reports."""
from __future__ import annotations

import json
import math

import numpy as np

from .errors import RasterParseError
from .grid import CellState, Grid

HEADER_TAG = "ISOBENEFIT"
HEADER_VERSION = "v1"

CODES = {
    CellState.EMPTY: ".",
    CellState.BUILT: "B",
    CellState.CENTRALITY: "C",
    CellState.NATURE: "N",
    CellState.GARDEN: "g",
}
_DECODE = {v: k for k, v in CODES.items()}

COLORS = {
    CellState.CENTRALITY: (255, 255, 255),
    CellState.NATURE: (0, 160, 0),
    CellState.BUILT: (0, 0, 0),
    CellState.EMPTY: (220, 220, 220),
    CellState.GARDEN: (120, 220, 120),
}


def fmt_num(x):
    """Shortest round-trip decimal; integral values print without a fraction."""
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    if x.is_integer() and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def _parse_positive(token, what, lineno, col, kind):
    try:
        v = kind(token)
    except ValueError:
        raise RasterParseError(f"bad {what} {token!r}", lineno, col) from None
    if not v > 0 or (kind is float and not math.isfinite(v)):
        raise RasterParseError(f"{what} must be positive, got {token!r}", lineno, col)
    return v


def parse_raster(text):
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines:
        raise RasterParseError("empty document", 1)
    head = lines[0].rstrip("\r").split(" ")
    if len(head) != 5 or head[0] != HEADER_TAG:
        raise RasterParseError(
            f"header must be '{HEADER_TAG} {HEADER_VERSION} <width> <height> <cell_size_m>'", 1, 1)
    if head[1] != HEADER_VERSION:
        raise RasterParseError(f"unsupported version {head[1]!r}", 1, len(head[0]) + 2)
    width = _parse_positive(head[2], "width", 1, None, int)
    height = _parse_positive(head[3], "height", 1, None, int)
    cell_size = _parse_positive(head[4], "cell size", 1, None, float)
    body = lines[1:]
    if len(body) != height:
        raise RasterParseError(f"expected {height} rows, found {len(body)}", len(lines) + 1)
    cells = np.empty((height, width), dtype=np.uint8)
    for r, row in enumerate(body):
        lineno = r + 2
        row = row.rstrip("\r")
        if len(row) != width:
            raise RasterParseError(f"row has {len(row)} cells, expected {width}", lineno,
                                   min(len(row), width) + 1)
        for c, ch in enumerate(row):
            state = _DECODE.get(ch)
            if state is None:
                raise RasterParseError(f"unknown cell code {ch!r}", lineno, c + 1)
            cells[r, c] = int(state)
    return Grid(width, height, cell_size, cells)


def serialize_raster(grid):
    lut = np.array([CODES[CellState(i)] for i in range(len(CellState))])
    rows = ["".join(lut[row].tolist()) for row in grid.cells]
    head = f"{HEADER_TAG} {HEADER_VERSION} {grid.width} {grid.height} {fmt_num(grid.cell_size)}"
    return "\n".join([head] + rows) + "\n"


def render(grid, scale=4):
    """Binary PPM (P6) image, one ``scale``×``scale`` block per cell."""
    if scale < 1:
        raise ValueError("scale must be at least 1")
    lut = np.array([COLORS[CellState(i)] for i in range(len(CellState))], dtype=np.uint8)
    rgb = lut[grid.cells]
    rgb = np.repeat(np.repeat(rgb, scale, axis=0), scale, axis=1)
    h, w = rgb.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes()


def read_ppm(data):
    """Minimal P6 reader (no comments) returning an (h, w, 3) uint8 array."""
    parts = data.split(b"\n", 3)
    if parts[0] != b"P6":
        raise ValueError("not a binary PPM")
    w, h = (int(x) for x in parts[1].split())
    if parts[2] != b"255":
        raise ValueError("unsupported max value")
    return np.frombuffer(parts[3], dtype=np.uint8).reshape(h, w, 3)


class MetricsWriter:
    """CSV sink for per-step metrics with a fixed header."""

    def __init__(self, sink, fields):
        self.sink = sink
        self.fields = tuple(fields)
        sink.write(",".join(self.fields) + "\n")

    def write_row(self, row):
        write_metrics_row(self.sink, row, self.fields)


def write_metrics_row(sink, row, fields):
    sink.write(",".join(fmt_num(row[k]) for k in fields) + "\n")


def _fmt_value(v):
    if isinstance(v, str):
        return v.replace("\n", " ")
    return fmt_num(v)


def report_lines(report, extra=None):
    yield "format=ISOBENEFIT-REPORT v1"
    yield f"digest={report.digest}"
    yield f"overall_pass={fmt_num(report.overall_pass)}"
    yield f"vacuous={fmt_num(report.vacuous)}"
    for k, v in report.params.items():
        yield f"params.{k}={_fmt_value(v)}"
    for k, v in (extra or {}).items():
        yield f"{k}={_fmt_value(v)}"
    for i, w in enumerate(report.warnings):
        yield f"warning.{i}={w}"
    for pid, res in report.results.items():
        p = f"principle_{pid}"
        yield f"{p}.passed={fmt_num(res.passed)}"
        yield f"{p}.vacuous={fmt_num(res.vacuous)}"
        for k, v in res.measured.items():
            yield f"{p}.measured.{k}={_fmt_value(v)}"
        yield f"{p}.violation_count={len(res.violations)}"
        for i, (r, c, val) in enumerate(res.violations):
            yield f"{p}.violation.{i}={r},{c},{fmt_num(val)}"
        for i, note in enumerate(res.notes):
            yield f"{p}.note.{i}={note}"


def write_report(sink, report, extra=None):
    for line in report_lines(report, extra):
        sink.write(line + "\n")


def read_kv(text):
    """Parse key=value lines; blank lines and '#' comments are skipped."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value, got {raw!r}")
        k, v = line.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def specs_text(specs):
    lines = []
    for s in specs:
        p = f"centrality.{s.id}"
        lines.append(f"{p}.cells=" + ";".join(f"{r}:{c}" for r, c in s.cells))
        lines.append(f"{p}.attractiveness={fmt_num(s.attractiveness)}")
        if s.composition is not None:
            lines.append(f"{p}.composition=" + ",".join(repr(x) for x in s.composition))
    return "".join(line + "\n" for line in lines)


def parse_specs(text):
    from .dna import CentralitySpec

    kv = read_kv(text)
    ids = sorted({int(k.split(".")[1]) for k in kv if k.startswith("centrality.")})
    specs = []
    for i in ids:
        p = f"centrality.{i}"
        cells = tuple(tuple(int(x) for x in t.split(":")) for t in kv[f"{p}.cells"].split(";"))
        comp = kv.get(f"{p}.composition")
        specs.append(CentralitySpec(
            i, cells, float(kv[f"{p}.attractiveness"]),
            tuple(float(x) for x in comp.split(",")) if comp else None))
    return specs


def state_text(state, raster_name, rng_algorithm):
    """Everything beyond the raster needed to resume a run."""
    lines = [
        f"step_index={state.step_index}",
        f"raster={raster_name}",
        f"rng_algorithm={rng_algorithm}",
        "rng_state=" + json.dumps(state.rng_state, sort_keys=True),
    ]
    return "".join(line + "\n" for line in lines) + specs_text(state.specs)
