"""Command-line pipelines: construct, rasterize, count, fit and report.

Every run writes into ``--out`` (default ``run``) together with a
``manifest.json`` listing the resolved parameters, seed and library
versions. Settings resolve as flags, then ``--config`` file, then defaults.

Exit codes: 0 success (including negative mathematical findings),
2 usage error, 3 input parse error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import platform
import sys

import numpy as np
import scipy

from . import __version__
from .analysiskit import interior_witness_map
from .boxdim import (Window, box_counts, fit_dimension, interior_witness, rasterize_lines,
                     rasterize_rays3, write_counts_csv, write_estimate, write_pgm)
from .charflow import (CharacteristicField, SensorSet, focal_point, observability_check,
                       read_sensors, write_characteristics_csv)
from .errors import (DomainError, InsufficientScalesError, LinedimError, NoWitnessError,
                     ParseError)
from .fractal import CantorStaircase
from .kakeya3d import (ray_segments, read_faces, total_flux, transversal_face_subset)
from .linefam import (LineFamily, ScalarCurve, read_geometry, sharp_family, tangent_family,
                      write_geometry)

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_NUMERIC = 0, 2, 3, 4

DEFAULTS = {
    "alpha": math.log(2) / math.log(3),
    "depth": 20,
    "samples": None,
    "res": None,
    "window": None,
    "seed": 0,
    "out": "run",
    "eps": 1e-6,
    "horizon": 2.0,
    "gap_gens": 10,
    "min_cells": 16,
    "min_count": 8,
    "keep_finest": False,
    "t_max": 1.0,
    "tol": 1e-3,
    "function": "parabola",
    "param": 0.5,
    "speed": "affine:-1,1",
    "sensors": None,
    "faces": None,
    "geometry": None,
}

# per-subcommand fallbacks for settings whose sensible default differs
COMMAND_DEFAULTS = {
    "sharp-example": {"res": 4096, "window": "0,1,-2,2"},
    "tangent-disk": {"res": 256, "window": "0,1,-1,1", "samples": 512},
    "characteristics": {"samples": 1000, "window": "0,2,-1,2"},
    "flux3d": {"res": 256, "window": "-2,2,-2,2,-2,2"},
    "boxdim": {"res": 1024, "window": "0,1,0,1"},
    "staircase": {"samples": 1025},
}


class UsageError(Exception):
    pass


def read_config(path) -> dict:
    """Flat ``key=value`` file; ``#`` starts a comment, dashes become underscores."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            if "=" not in text:
                raise ParseError(f"expected key=value, got {text!r}", lineno)
            key, value = (s.strip() for s in text.split("=", 1))
            key = key.replace("-", "_")
            if key not in DEFAULTS:
                raise ParseError(f"unknown key {key!r}", lineno)
            out[key] = value
    return out


def _coerce(key, value):
    if value is None:
        return None
    try:
        if key == "keep_finest":
            return value if isinstance(value, bool) else str(value).lower() in ("1", "true", "yes")
        if key in ("depth", "samples", "res", "seed", "gap_gens", "min_cells", "min_count"):
            return int(value)
        if key in ("alpha", "eps", "horizon", "t_max", "tol", "param"):
            return _number(value)
    except ValueError:
        raise UsageError(f"bad value for {key}: {value!r}") from None
    return value


def _number(text):
    """Float, also accepting ``log2/log3``-style ratios of logarithms."""
    if isinstance(text, (int, float)):
        return float(text)
    t = str(text).strip().replace(" ", "")
    if "/" in t and t.startswith("log"):
        num, den = t.split("/")
        return math.log(float(num[3:])) / math.log(float(den[3:]))
    return float(t)


def resolve(ns: argparse.Namespace) -> dict:
    cfg = read_config(ns.config) if ns.config else {}
    cmd_defaults = COMMAND_DEFAULTS.get(ns.command, {})
    params = {}
    for key in DEFAULTS:
        value = getattr(ns, key, None)
        if key == "keep_finest" and value is False:
            value = None
        if value is None:
            value = cfg.get(key)
        if value is None:
            value = cmd_defaults.get(key, DEFAULTS[key])
        params[key] = _coerce(key, value)
    if params["window"] is not None:
        try:
            params["window"] = [float(v) for v in str(params["window"]).split(",")]
        except ValueError:
            raise UsageError(f"bad window {params['window']!r}") from None
    return params


def _window(params, dim) -> Window:
    bounds = params["window"]
    if bounds is None or len(bounds) != 2 * dim:
        raise UsageError(f"--window needs {2 * dim} comma-separated bounds")
    return Window.from_bounds(bounds)


def _fit(counts, params, ambient):
    return fit_dimension(counts, ambient, drop_finest=not params["keep_finest"],
                         min_count=params["min_count"])


def _write_manifest(out, command, params, extra=None):
    manifest = {
        "command": command,
        "parameters": params,
        "seed": params["seed"],
        "versions": {"linedim": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__, "python": platform.python_version()},
    }
    if extra:
        manifest.update(extra)
    with open(os.path.join(out, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_svg(fam: LineFamily, window: Window, path, size: int = 512) -> None:
    """Vector drawing of a line family clipped to a 2-D window."""
    (x0, y0), (x1, y1) = window.lo, window.hi
    sx, sy = size / (x1 - x0), size / (y1 - y0)
    colours = {"sharp-A": "#c03030", "sharp-B": "#3050c0"}
    with open(path, "w") as fh:
        fh.write(f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
                 f'viewBox="0 0 {size} {size}">\n<rect width="100%" height="100%" fill="white"/>\n')
        for a, b, tag in zip(fam.slopes, fam.intercepts, fam.provenance):
            ya, yb = a * x0 + b, a * x1 + b
            fh.write(f'<line x1="0" y1="{(y1 - ya) * sy:.3f}" x2="{size}" '
                     f'y2="{(y1 - yb) * sy:.3f}" stroke="{colours.get(tag, "black")}" '
                     'stroke-width="0.3"/>\n')
        fh.write("</svg>\n")


def _curve(name, params) -> ScalarCurve:
    if name == "parabola":
        return ScalarCurve.parabola()
    if name == "cubic":
        return ScalarCurve.cubic()
    if name == "linear":
        return ScalarCurve.linear(1.0, 0.0)
    if name == "staircase-integral":
        return ScalarCurve.staircase_integral(
            CantorStaircase.from_alpha(params["alpha"], params["depth"]))
    raise UsageError(f"unknown function {name!r}")


def default_cantor_samples(s: CantorStaircase, window: Window, res: int) -> int:
    """Enough Cantor points that neighbouring slope-2 lines sit below a quarter cell apart."""
    cell = (window.hi[1] - window.lo[1]) / res
    k = math.ceil(math.log(cell / 4.0) / math.log(s.ratio))
    return 2 ** max(1, min(k, s.depth, 16))


def cmd_sharp_example(params, out) -> dict:
    s = CantorStaircase.from_alpha(params["alpha"], params["depth"])
    window = _window(params, 2)
    samples = params["samples"] or default_cantor_samples(s, window, params["res"])
    fam = sharp_family(s, params["gap_gens"], samples)
    write_geometry(fam, os.path.join(out, "geometry.txt"),
                   comment=f"sharp family alpha={params['alpha']!r} depth={params['depth']}")
    grid = rasterize_lines(fam, window, params["res"])
    write_pgm(grid, os.path.join(out, "grid.pgm"))
    write_svg(fam, window, os.path.join(out, "family.svg"))
    counts = box_counts(grid)
    write_counts_csv(counts, os.path.join(out, "counts.csv"))
    est = _fit(counts, params, 2)
    write_estimate(est, os.path.join(out, "estimate.txt"))
    part_a = _fit(box_counts(rasterize_lines(fam.select("sharp-A"), window, params["res"])),
                  params, 2)
    stable = max(part_a.slope, 1.0)
    lines = [est.report(),
             f"target={1.0 + s.alpha!r}",
             f"lines_A={len(fam.select('sharp-A'))}",
             f"lines_B={len(fam) - len(fam.select('sharp-A'))}",
             f"slope_A={part_a.slope!r}",
             f"countably_stable_estimate={stable!r}"]
    _write_lines(out, "report.txt", lines)
    return {"slope": est.slope, "r2": est.fit_r2, "slope_A": part_a.slope}


def cmd_tangent_disk(params, out) -> dict:
    curve = _curve(params["function"], params)
    window = _window(params, 2)
    fam = tangent_family(curve, params["samples"])
    grid = rasterize_lines(fam, window, params["res"])
    write_pgm(grid, os.path.join(out, "grid.pgm"))
    wit = interior_witness(grid, params["min_cells"])
    lines = [f"function={params['function']}"]
    if wit is None:
        lines.append("raster_witness=none")
    else:
        lines.append(f"raster_witness=found size={wit.size} lo={wit.lo!r} hi={wit.hi!r}")
    certified = None
    if curve.d2f is None:
        lines.append("certified_witness=skipped reason=no second derivative")
    else:
        try:
            certified = interior_witness_map(curve, params["param"], family="tangent")
            lines.append(f"certified_witness=found center={certified.center!r} "
                         f"half_width={certified.half_width!r} "
                         f"max_forward_error={certified.max_forward_error!r}")
        except NoWitnessError as exc:
            lines.append(f"certified_witness=none reason={exc}")
    _write_lines(out, "witness.txt", lines)
    return {"raster": wit is not None, "certified": certified is not None}


def parse_speed(text, s_samples):
    kind, _, args = str(text).partition(":")
    try:
        if kind == "affine":
            slope, offset = (_number(v) for v in args.split(","))
            return CharacteristicField.affine(slope, offset, s_samples)
        if kind == "staircase":
            s = CantorStaircase.from_alpha(_number(args) if args else DEFAULTS["alpha"])
            return CharacteristicField(s.g, s_samples)
    except (ValueError, TypeError):
        pass
    raise UsageError(f"speed must be 'affine:c,d' or 'staircase:alpha', got {text!r}")


def cmd_characteristics(params, out) -> dict:
    field = parse_speed(params["speed"], params["samples"])
    sensors = read_sensors(params["sensors"]) if params["sensors"] else SensorSet()
    write_characteristics_csv(field, os.path.join(out, "characteristics.csv"))
    foc = focal_point(field, params["tol"])
    cov = observability_check(field, sensors, params["horizon"], params["samples"])
    _write_lines(out, "coverage.txt", cov.lines())
    lines = [f"speed={params['speed']}",
             "focal=none" if foc.point is None else f"focal={foc.point[0]!r},{foc.point[1]!r}",
             f"parallel={int(foc.parallel)}", f"spread={foc.spread!r}",
             f"coverage={cov.fraction!r}", f"uncovered={len(cov.uncovered)}"]
    if params["res"]:
        # lines x = g(s) t + s drawn over the t axis
        rows = np.array([[a, b] for _, a, b in
                         ((s, float(field.speeds(s)), s) for s in field.samples())])
        grid = rasterize_lines(LineFamily(rows[:, 0], rows[:, 1]), _window(params, 2),
                               params["res"])
        counts = box_counts(grid)
        write_counts_csv(counts, os.path.join(out, "counts.csv"))
        try:
            lines.append(_fit(counts, params, 2).report())
        except InsufficientScalesError as exc:
            lines.append(f"fit=unavailable reason={exc}")
    _write_lines(out, "report.txt", lines)
    return {"coverage": cov.fraction, "focal": foc.point}


def cmd_flux3d(params, out) -> dict:
    if not params["faces"]:
        raise UsageError("flux3d needs --faces FILE")
    bf = read_faces(params["faces"])
    flux = total_flux(bf)
    subset = transversal_face_subset(bf, params["eps"])
    lines = [f"flux={flux!r}"]
    result = {"flux": flux, "status": "ok", "slope": None}
    if flux <= 0 or not subset:
        result["status"] = "hypothesis not met"
        lines.append("status=hypothesis not met")
        _write_lines(out, "report.txt", lines)
        return result
    starts, ends = ray_segments(subset, params["t_max"])
    grid = rasterize_rays3((starts, ends), _window(params, 3), params["res"])
    counts = box_counts(grid)
    write_counts_csv(counts, os.path.join(out, "counts.csv"))
    est = _fit(counts, params, 3)
    write_estimate(est, os.path.join(out, "estimate.txt"))
    result["slope"] = est.slope
    lines += ["status=ok", f"rays={len(starts)}", est.report()]
    _write_lines(out, "report.txt", lines)
    return result


def cmd_boxdim(params, out) -> dict:
    if not params["geometry"]:
        raise UsageError("boxdim needs --geometry FILE")
    fam = read_geometry(params["geometry"])
    grid = rasterize_lines(fam, _window(params, 2), params["res"])
    write_pgm(grid, os.path.join(out, "grid.pgm"))
    counts = box_counts(grid)
    write_counts_csv(counts, os.path.join(out, "counts.csv"))
    est = _fit(counts, params, 2)
    write_estimate(est, os.path.join(out, "estimate.txt"))
    return {"slope": est.slope}


def cmd_staircase(params, out) -> dict:
    s = CantorStaircase.from_alpha(params["alpha"], params["depth"])
    n = params["samples"]
    if n < 2:
        raise UsageError("--samples must be at least 2")
    x = np.linspace(0.0, 1.0, n)
    g, f = s.g(x), s.f(x)
    with open(os.path.join(out, "staircase.csv"), "w") as fh:
        fh.write("x,g,f\n")
        for row in zip(x, g, f):
            fh.write("%r,%r,%r\n" % tuple(float(v) for v in row))
    return {"rows": n}


COMMANDS = {
    "sharp-example": cmd_sharp_example,
    "tangent-disk": cmd_tangent_disk,
    "characteristics": cmd_characteristics,
    "flux3d": cmd_flux3d,
    "boxdim": cmd_boxdim,
    "staircase": cmd_staircase,
}


def _write_lines(out, name, lines):
    with open(os.path.join(out, name), "w") as fh:
        fh.write("\n".join(lines) + "\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--alpha")
    common.add_argument("--depth", type=int)
    common.add_argument("--samples", type=int)
    common.add_argument("--res", type=int)
    common.add_argument("--window", help="x0,x1,y0,y1[,z0,z1]")
    common.add_argument("--seed", type=int)
    common.add_argument("--out")
    common.add_argument("--config")
    common.add_argument("--eps", type=float)
    common.add_argument("--horizon", type=float)
    common.add_argument("--gap-gens", dest="gap_gens", type=int)
    common.add_argument("--min-cells", dest="min_cells", type=int)
    common.add_argument("--min-count", dest="min_count", type=int)
    common.add_argument("--keep-finest", dest="keep_finest", action="store_true")
    common.add_argument("--t-max", dest="t_max", type=float)
    common.add_argument("--tol", type=float)
    parser = argparse.ArgumentParser(prog="linedim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("sharp-example", parents=[common])
    p = sub.add_parser("tangent-disk", parents=[common])
    p.add_argument("--function", choices=["parabola", "cubic", "staircase-integral", "linear"])
    p.add_argument("--param", type=float, help="base parameter of the certified witness")
    p = sub.add_parser("characteristics", parents=[common])
    p.add_argument("--speed", help="affine:c,d or staircase:alpha")
    p.add_argument("--sensors")
    p = sub.add_parser("flux3d", parents=[common])
    p.add_argument("--faces")
    p = sub.add_parser("boxdim", parents=[common])
    p.add_argument("--geometry")
    sub.add_parser("staircase", parents=[common])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        params = resolve(ns)
        out = params["out"]
        os.makedirs(out, exist_ok=True)
        result = COMMANDS[ns.command](params, out)
        _write_manifest(out, ns.command, params)
    except (UsageError, DomainError) as exc:
        print(f"linedim {ns.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, OSError) as exc:
        print(f"linedim {ns.command}: input error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (LinedimError, ArithmeticError, ValueError) as exc:
        print(f"linedim {ns.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    for key, value in result.items():
        print(f"{key}={value}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
