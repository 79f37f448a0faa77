"""Command line: ``isobenefit {simulate,audit,render}``.

Exit codes: 0 success or clean audit, 1 usage/config/input error,
2 audit found violations, 3 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path


from . import formats, morphogenesis
from .config import RunConfig, load_config
from .dna import audit_all
from .errors import ConfigError, IsobenefitError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_VIOLATIONS = 2
EXIT_IO = 3

log = logging.getLogger("isobenefit")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def build_parser():
    p = _Parser(prog="isobenefit", description="Grow and audit isobenefit cities on a lattice.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    sim = sub.add_parser("simulate", help="run the growth engine")
    sim.add_argument("--config", required=True, type=Path)
    sim.add_argument("--steps", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--out", type=Path)
    sim.add_argument("--resume", type=Path, help="continue from a snapshot .state file")

    aud = sub.add_parser("audit", help="audit a raster against the principles")
    aud.add_argument("--input", required=True, type=Path)
    aud.add_argument("--config", type=Path)
    aud.add_argument("--report", type=Path, help="report path (default: stdout)")
    aud.add_argument("--specs", type=Path, help="centrality specs file")
    aud.add_argument("--quality", type=Path,
                     help="optional per-cell quality layer: one row of numbers per grid row")

    ren = sub.add_parser("render", help="render a raster as a PPM image")
    ren.add_argument("--input", required=True, type=Path)
    ren.add_argument("--out", required=True, type=Path)
    ren.add_argument("--scale", type=int, default=4)
    return p


def _snapshot_writer(out_dir, scale):
    snap_dir = out_dir / "snapshots"
    snap_dir.mkdir(parents=True, exist_ok=True)

    def write(state):
        stem = f"step_{state.step_index:05d}"
        (snap_dir / f"{stem}.txt").write_text(formats.serialize_raster(state.grid))
        (snap_dir / f"{stem}.ppm").write_bytes(formats.render(state.grid, scale))
        (snap_dir / f"{stem}.state").write_text(
            formats.state_text(state, f"{stem}.txt", morphogenesis.RNG_ALGORITHM))

    return write


def load_state(path, cfg):
    kv = formats.read_kv(path.read_text())
    if kv.get("rng_algorithm") != morphogenesis.RNG_ALGORITHM:
        raise ConfigError(f"{path}: snapshot generator {kv.get('rng_algorithm')!r} not supported")
    grid = formats.parse_raster((path.parent / kv["raster"]).read_text())
    specs = formats.parse_specs(path.read_text())
    rng_state = json.loads(kv["rng_state"])
    return morphogenesis.SimState(grid, tuple(specs), int(kv["step_index"]), rng_state,
                                  cfg.dna(), cfg.growth())


def cmd_simulate(args):
    cfg = load_config(args.config)
    if args.steps is not None:
        cfg.set("steps", args.steps)
    if args.seed is not None:
        cfg.set("seed", args.seed)
    if args.out is not None:
        cfg.set("output.dir", str(args.out))
    out_dir = Path(cfg["output.dir"])
    if not out_dir.is_absolute() and args.out is None:
        out_dir = args.config.parent / out_dir
    if args.resume is not None:
        state = load_state(args.resume, cfg)
    else:
        raster = None
        if cfg.raster_path() is not None:
            raster = formats.parse_raster(cfg.raster_path().read_text())
        state = morphogenesis.init_state(cfg.sim_config(raster))
    out_dir.mkdir(parents=True, exist_ok=True)
    snap = _snapshot_writer(out_dir, cfg["render.scale"])
    every = cfg["snapshot_every"]
    with open(out_dir / "metrics.csv", "w", newline="") as fh:
        writer = formats.MetricsWriter(fh, morphogenesis.METRIC_FIELDS)
        state = morphogenesis.run(state, cfg["steps"], every, on_snapshot=snap,
                                  on_metrics=writer.write_row)
    if not every or state.step_index % every:
        snap(state)
    report = audit_all(state.grid, list(state.specs), params=state.dna,
                       extra_sources=cfg.daily_points_mask(state.grid))
    extra = {"step_index": state.step_index, "rng_algorithm": morphogenesis.RNG_ALGORITHM}
    extra.update(cfg.echo())
    with open(out_dir / "report.txt", "w") as fh:
        formats.write_report(fh, report, extra)
    (out_dir / "centralities.txt").write_text(formats.specs_text(state.specs))
    log.info("simulated to step %d: %d centralities, overall_pass=%s",
             state.step_index, len(state.specs), report.overall_pass)
    return EXIT_OK


def load_quality(path):
    rows = [line.split() for line in path.read_text().splitlines() if line.strip()]
    try:
        layer = [[float(x) for x in row] for row in rows]
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not layer or len({len(r) for r in layer}) != 1:
        raise ConfigError(f"{path}: quality layer must be a non-empty rectangle of numbers")
    return layer


def cmd_audit(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    grid = formats.parse_raster(args.input.read_text())
    specs = formats.parse_specs(args.specs.read_text()) if args.specs else None
    f_layer = load_quality(args.quality) if args.quality else None
    report = audit_all(grid, specs, params=cfg.dna(), f_layer=f_layer,
                       extra_sources=cfg.daily_points_mask(grid))
    if args.report is None:
        formats.write_report(sys.stdout, report)
    else:
        with open(args.report, "w") as fh:
            formats.write_report(fh, report)
    for pid in report.failed():
        res = report[pid]
        cells = " ".join(f"({r},{c})" for r, c, _ in res.violations[:10])
        more = "" if len(res.violations) <= 10 else f" ... {len(res.violations) - 10} more"
        print(f"principle {pid} failed: {cells}{more}", file=sys.stderr)
    return EXIT_OK if report.overall_pass else EXIT_VIOLATIONS


def cmd_render(args):
    if args.scale < 1:
        raise UsageError("--scale must be at least 1")
    grid = formats.parse_raster(args.input.read_text())
    args.out.write_bytes(formats.render(grid, args.scale))
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "audit": cmd_audit, "render": cmd_render}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(None if argv is None else [str(a) for a in argv])
        if args.command is None:
            raise UsageError(parser.format_usage().rstrip())
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (IsobenefitError, KeyError, ValueError) as exc:
        print(f"isobenefit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"isobenefit: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
