"""Config-driven command line front end.

    cmcb analyze  CONFIG   -> report.json (+ scan.csv)
    cmcb scan     CONFIG   -> scan.csv
    cmcb crossings CONFIG  -> crossings.json
    cmcb certify  CONFIG   -> certificates.json
    cmcb index    CONFIG   -> index.csv
    cmcb spectrum CONFIG   -> spectrum.csv

Exit codes: 0 success, 1 usage error, 2 config error, 3 degeneracy or
numerical failure (partial outputs are still written).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path
from typing import Any

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .bifurcation import (
    AnalysisConfig,
    DivergenceConfig,
    Grid,
    Summary,
    analyze,
    certify_corsc,
    certify_no_bifurcation,
    scan,
    scan_crossings,
)
from .errors import CMCBError, ConfigError
from .models import CATALOG, SchwarzschildParams, catalog_model, schwarzschild_model, schwarzschild_spectrum
from .spectra import DualLatticeBasis, FiberSpectrum, explicit_spectrum, sphere_spectrum, torus_spectrum
from .warpcore import WarpedModel

EXIT_OK, EXIT_USAGE, EXIT_CONFIG, EXIT_ANALYSIS = 0, 1, 2, 3
COMMANDS = ("analyze", "scan", "crossings", "certify", "index", "spectrum")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


class Job:
    """A parsed and validated configuration."""

    def __init__(self, model: WarpedModel, spectrum: FiberSpectrum, config: AnalysisConfig,
                 out_dir: Path, formats: tuple[str, ...], spectrum_bound: float | None,
                 raw: dict):
        self.model = model
        self.spectrum = spectrum
        self.config = config
        self.out_dir = out_dir
        self.formats = formats
        self.spectrum_bound = spectrum_bound
        self.raw = raw


def _section(raw: dict, name: str, required: bool = True) -> dict:
    sec = raw.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing [{name}] section")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"[{name}] must be a table")
    return sec


def _num(sec: dict, key: str, default: Any = None, kind=float):
    if key not in sec:
        if default is None:
            raise ConfigError(f"missing key {key!r}")
        return default
    value = sec[key]
    if isinstance(value, bool):
        raise ConfigError(f"{key!r} must be numeric")
    try:
        out = kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{key!r} must be numeric") from exc
    if kind is int and out != value:
        raise ConfigError(f"{key!r} must be an integer")
    return out


def _build_model(sec: dict) -> tuple[WarpedModel, FiberSpectrum]:
    kind = sec.get("kind")
    label = sec.get("label")
    if kind == "schwarzschild":
        params = SchwarzschildParams(_num(sec, "K"), _num(sec, "E", 0.0))
        return schwarzschild_model(params, label), schwarzschild_spectrum()
    if kind in CATALOG:
        params = dict(n=_num(sec, "n", kind=int),
                      domain=(_num(sec, "r_lo"), _num(sec, "r_hi", math.inf)))
        for key in ("C", "k"):
            if key in sec:
                params[key] = _num(sec, key)
        if "lattice" in sec:
            params["lattice"] = sec["lattice"]
        model, spec = catalog_model(kind, params)
        if label:
            model = replace(model, label=label)
        return model, spec
    raise ConfigError(f"unknown model kind {kind!r}")


def _build_fiber(sec: dict, default: FiberSpectrum) -> FiberSpectrum:
    kind = sec.get("kind")
    if kind is None:
        return default
    if kind == "sphere":
        return sphere_spectrum(_num(sec, "m", kind=int))
    if kind == "torus":
        basis = sec.get("basis")
        if not isinstance(basis, list):
            raise ConfigError("torus fiber needs a basis (list of rows)")
        return torus_spectrum(DualLatticeBasis(tuple(tuple(row) for row in basis)))
    if kind == "explicit":
        values, mults = sec.get("values"), sec.get("multiplicities")
        if not isinstance(values, list) or not isinstance(mults, list) or len(values) != len(mults):
            raise ConfigError("explicit fiber needs equal-length values and multiplicities")
        return explicit_spectrum(list(zip(values, mults)))
    raise ConfigError(f"unknown fiber kind {kind!r}")


def load_job(path: Path, out_override: Path | None = None) -> Job:
    """Parse and validate a config file; raises :class:`ConfigError`."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    try:
        model, spec = _build_model(_section(raw, "model"))
        fiber = _section(raw, "fiber", required=False)
        spec = _build_fiber(fiber, spec)
        if "scalar_curvature_min" in fiber or "scalar_curvature_max" in fiber:
            rmax = _num(fiber, "scalar_curvature_max")
            rmin = _num(fiber, "scalar_curvature_min", rmax)
            model = replace(model, fiber_scalar_curvature=(rmin, rmax))
        sc = _section(raw, "scan")
        if "epsilon" in sc:
            model = replace(model, warp=replace(model.warp, epsilon=_num(sc, "epsilon")))
        grid = Grid(_num(sc, "r_min"), _num(sc, "r_max"), _num(sc, "points", 2000, int))
        tol = _num(sc, "tol", 1e-10)
        deg = _num(sc, "degeneracy_tol", 1e-9)
        if not (tol > 0 and deg > 0):
            raise ConfigError("tolerances must be positive")
        if not (model.warp.contains(grid.r_min) and model.warp.contains(grid.r_max)):
            lo, hi = model.warp.clamped
            raise ConfigError(f"scan range [{grid.r_min!r}, {grid.r_max!r}] "
                              f"not inside clamped domain [{lo!r}, {hi!r}]")
        dv = _section(raw, "divergence", required=False)
        divergence = DivergenceConfig(
            samples=_num(dv, "samples", 24, int),
            growth_factor=_num(dv, "growth_factor", 0.5),
            threshold=dv.get("threshold"),
            window=dv.get("window"),
        )
        out = _section(raw, "output", required=False)
        formats = tuple(out.get("formats", ["json", "csv"]))
        if out_override is not None:
            out_dir = out_override
        else:
            out_dir = Path(out.get("directory", "cmcb_out"))
            if not out_dir.is_absolute():
                out_dir = path.parent / out_dir
        bound = fiber.get("bound")
        config = AnalysisConfig(grid=grid, tol=tol, degeneracy_tol=deg, divergence=divergence)
    except ConfigError:
        raise
    except (CMCBError, ValueError, TypeError, KeyError) as exc:
        raise ConfigError(f"invalid configuration: {exc}") from exc
    return Job(model, spec, config, out_dir, formats,
               None if bound is None else float(bound), raw)


def _json_safe(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(v) for v in value]
    return value


def dumps_json(payload) -> str:
    return json.dumps(_json_safe(payload), indent=2, allow_nan=False) + "\n"


def _fmt(value) -> str:
    if value is None:
        return ""
    return repr(float(value)) if isinstance(value, float) else str(value)


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def scan_csv(job: Job, samples) -> str:
    hmax = max((s.h for s in samples), default=0.0)
    levels = [v for v, _ in job.spectrum.nonzero_up_to(min(hmax, job.spectrum.max_bound))]
    header = ["r", "h", "alpha_sq", "morse_index"] + [f"level_{v!r}" for v in levels]
    rows = [[s.r, s.h, s.alpha_sq, s.morse_index] + levels for s in samples]
    return _csv_text(header, rows)


def _model_summary(job: Job) -> dict:
    m = job.model
    return {
        "label": m.label,
        "n": m.n,
        "form": m.warp.form.value,
        "domain": list(m.domain),
        "epsilon": m.warp.margin,
        "fiber_scalar_curvature": None if m.fiber_scalar_curvature is None else list(m.fiber_scalar_curvature),
        "fiber": job.spectrum.describe(),
    }


def _cmd_analyze(job: Job) -> int:
    report = analyze(job.model, job.spectrum, job.config)
    payload = {"status": report.status, "summary": report.summary.value,
               "model": _model_summary(job)}
    payload.update(report.to_dict())
    payload.pop("label")
    payload["status"] = report.status
    write_atomic(job.out_dir / "report.json", dumps_json(payload))
    if "csv" in job.formats and report.samples:
        write_atomic(job.out_dir / "scan.csv", scan_csv(job, report.samples))
    for err in report.errors:
        print(err, file=sys.stderr)
    print(f"{report.summary.value}: {len(report.crossings)} crossing(s), "
          f"divergence {report.divergence.value}")
    if report.status != "ok":
        print(f"status: {report.status}", file=sys.stderr)
        return EXIT_ANALYSIS
    return EXIT_OK


def _cmd_scan(job: Job) -> int:
    samples = scan(job.model, job.spectrum, job.config.grid, job.config.degeneracy_tol)
    write_atomic(job.out_dir / "scan.csv", scan_csv(job, samples))
    bad = [s.r for s in samples if s.morse_index is None]
    if bad:
        print(f"degenerate Morse index at {len(bad)} node(s), first r={bad[0]!r}", file=sys.stderr)
        return EXIT_ANALYSIS
    return EXIT_OK


def _cmd_crossings(job: Job) -> int:
    grid = job.config.grid
    crossings, touches = scan_crossings(job.model, job.spectrum, (grid.r_min, grid.r_max),
                                        grid.points, job.config.tol, job.config.degeneracy_tol)
    write_atomic(job.out_dir / "crossings.json", dumps_json([c.to_dict() for c in crossings]))
    for t in touches:
        print(f"touch without crossing: eigenvalue {t.eigenvalue!r} on {t.interval!r}",
              file=sys.stderr)
    print(f"{len(crossings)} crossing(s)")
    return EXIT_OK


def _cmd_certify(job: Job) -> int:
    cfg = job.config
    certs = [certify_no_bifurcation(job.model, job.spectrum, cfg.grid, cfg.degeneracy_tol)]
    if job.model.fiber_scalar_curvature is not None:
        certs.append(certify_corsc(job.model, job.spectrum, cfg.grid, cfg.degeneracy_tol))
    write_atomic(job.out_dir / "certificates.json", dumps_json([c.to_dict() for c in certs]))
    for c in certs:
        print(f"{c.criterion.value}: {c.verdict.value} (margin {c.margin!r})")
    if any(c.verdict.value == "inconclusive_degenerate" for c in certs):
        return EXIT_ANALYSIS
    return EXIT_OK


def _cmd_index(job: Job) -> int:
    samples = scan(job.model, job.spectrum, job.config.grid, job.config.degeneracy_tol)
    rows = [[s.r, s.h, s.morse_index] for s in samples]
    write_atomic(job.out_dir / "index.csv", _csv_text(["r", "h", "morse_index"], rows))
    if any(s.morse_index is None for s in samples):
        print("degenerate Morse index on part of the grid", file=sys.stderr)
        return EXIT_ANALYSIS
    return EXIT_OK


def _cmd_spectrum(job: Job) -> int:
    bound = job.spectrum_bound
    if bound is None:
        samples = scan(job.model, job.spectrum, job.config.grid, job.config.degeneracy_tol)
        bound = max(max(s.h for s in samples), job.spectrum.first_nonzero())
        bound = min(bound, job.spectrum.max_bound)
    entries = job.spectrum.enumerate_up_to(bound)
    write_atomic(job.out_dir / "spectrum.csv",
                 _csv_text(["value", "multiplicity"], [[v, k] for v, k in entries]))
    return EXIT_OK


_HANDLERS = {
    "analyze": _cmd_analyze,
    "scan": _cmd_scan,
    "crossings": _cmd_crossings,
    "certify": _cmd_certify,
    "index": _cmd_index,
    "spectrum": _cmd_spectrum,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cmcb", description="Rigidity and bifurcation of CMC slices in warped products.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", type=Path)
        p.add_argument("--out", type=Path, default=None, help="output directory (overrides [output])")
    return parser


def run_command(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        job = load_job(args.config, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _HANDLERS[args.command](job)
    except CMCBError as exc:
        print(f"analysis error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ANALYSIS


def main() -> None:
    sys.exit(run_command())
