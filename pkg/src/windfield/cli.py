"""``windfield <command> --config <file> [--set key=value]... --out <dir>``

Exit codes: 0 success, 1 verification failures (report still written),
2 configuration error, 3 domain or numerical error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .classify import classify_all
from .geodesics import UNIT_TOL, boundary_geodesic, geodesic_ivp, navigate
from .geometry import DomainError
from .models import get_spec, list_models, make_model, sample_points
from .reachability import GridSpec, forward_ball, precompactness_probe
from .sstk import metric_at
from .svg import curves_svg, field_svg
from .wrs import TOL_CONE, Admissible, TOL_LAMBDA, admissible, indicatrix, randers_speed, region_at, speeds, tangent

COMMANDS = ("eval", "indicatrix", "geodesic", "navigate", "ball", "classify", "verify")

REQUIRED = object()

# per-command parameters and their defaults
COMMAND_PARAMS = {
    "eval": {"point": REQUIRED, "vector": REQUIRED},
    "indicatrix": {"point": REQUIRED, "k": 64},
    "geodesic": {"point": REQUIRED, "vector": REQUIRED, "span": 1.0, "samples": 101, "normalize": False},
    "navigate": {"p": REQUIRED, "q": REQUIRED, "t_max": None},
    "ball": {"p0": REQUIRED, "r": REQUIRED, "box": None, "resolution": 128, "backward": False},
    "classify": {"samples": 16, "box": None, "cross_check": True},
    "verify": {"samples": 20, "box": None},
}
TOP_KEYS = {"model", "command", "params", "seed", "output"}
OUTPUT_KEYS = {"dir", "svg", "csv"}

TOLERANCES = {
    "lambda": TOL_LAMBDA,
    "cone": TOL_CONE,
    "unit_speed": UNIT_TOL,
    "geodesic_rtol": 1e-10,
    "geodesic_atol": 1e-12,
    "verify": 1e-9,
}


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------- config


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(cfg: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError(f"--set expects key=value, got {assignment!r}")
    key, value = assignment.split("=", 1)
    parts = key.split(".")
    node = cfg
    for part in parts[:-1]:
        node = node.setdefault(part, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set {key}: {part} is not an object")
    node[parts[-1]] = _parse_value(value)


def normalize_config(raw: dict, command: str | None = None) -> dict:
    """Validate against the strict schema and fill defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    cfg = copy.deepcopy(raw)
    if command is not None:
        if cfg.get("command", command) != command:
            raise ConfigError(f"config command {cfg['command']!r} disagrees with CLI command {command!r}")
        cfg["command"] = command
    unknown = set(cfg) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys: {sorted(unknown)}")
    cmd = cfg.get("command")
    if cmd not in COMMANDS:
        raise ConfigError(f"command must be one of {list(COMMANDS)}")
    model = cfg.get("model")
    if not isinstance(model, dict) or "name" not in model or set(model) - {"name", "params"}:
        raise ConfigError("model must be an object with 'name' and optional 'params'")
    model.setdefault("params", {})
    if not isinstance(model["params"], dict):
        raise ConfigError("model.params must be an object")
    params = cfg.setdefault("params", {})
    if not isinstance(params, dict):
        raise ConfigError("params must be an object")
    schema = COMMAND_PARAMS[cmd]
    unknown = set(params) - set(schema)
    if unknown:
        raise ConfigError(f"unknown params for {cmd}: {sorted(unknown)}")
    for key, default in schema.items():
        if key not in params:
            if default is REQUIRED:
                raise ConfigError(f"missing required parameter params.{key}")
            params[key] = default
    seed = cfg.setdefault("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError("seed must be an integer")
    out = cfg.setdefault("output", {})
    if not isinstance(out, dict) or set(out) - OUTPUT_KEYS:
        raise ConfigError(f"output accepts only {sorted(OUTPUT_KEYS)}")
    out.setdefault("svg", True)
    out.setdefault("csv", True)
    return cfg


def _vec(value, name: str, dim: int) -> np.ndarray:
    try:
        arr = np.asarray(value, dtype=float)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a list of numbers") from None
    if arr.shape != (dim,):
        raise ConfigError(f"{name} must have {dim} components")
    return arr


# ---------------------------------------------------------------- output helpers


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    return x


def write_json(path: Path, cfg: dict, result: dict) -> None:
    doc = {"version": __version__, "config": cfg, "tolerances": TOLERANCES, "result": result}
    path.write_text(json.dumps(_jsonable(doc), sort_keys=True, indent=2, allow_nan=False) + "\n", encoding="utf-8")


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        out = csv.writer(fh, lineterminator="\r\n")
        out.writerow(header)
        for row in rows:
            out.writerow([_csv_cell(v) for v in row])


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "inf" if math.isinf(v) else repr(v)
    return v


# ---------------------------------------------------------------- commands


def _box(cfg, wd, key="box"):
    box = cfg["params"].get(key)
    if box is None:
        same = [s for s in list_models() if s.name == wd.meta.get("name") and len(s.box[0]) == wd.dim]
        exact = [s for s in same if s.params == wd.meta.get("params")]
        if exact or same:
            return (exact or same)[0].box
        raise ConfigError(f"params.{key} is required for this model")
    try:
        lo, hi = box
        return tuple(float(x) for x in lo), tuple(float(x) for x in hi)
    except (TypeError, ValueError):
        raise ConfigError("box must be [[lo...], [hi...]]") from None


def cmd_eval(cfg, wd, out):
    prm = cfg["params"]
    p = _vec(prm["point"], "point", wd.dim)
    v = _vec(prm["vector"], "vector", wd.dim)
    reg = region_at(wd, p)
    f, fl = speeds(wd, tangent(p, v))
    return {"Lambda": reg.Lambda, "region": reg.region.value, "F": f, "F_l": fl,
            "admissible": admissible(wd, tangent(p, v)).value}


def cmd_indicatrix(cfg, wd, out):
    prm = cfg["params"]
    p = _vec(prm["point"], "point", wd.dim)
    samples = indicatrix(wd, p, int(prm["k"]))
    rows = [list(s.vec.components) + [s.piece] for s in samples]
    if cfg["output"]["csv"]:
        write_csv(out / "indicatrix.csv", [f"v{i}" for i in range(wd.dim)] + ["piece"], rows)
    if wd.dim == 2 and cfg["output"]["svg"]:
        conv = [s.vec.components for s in samples if s.piece == "convex"]
        conc = [s.vec.components for s in samples if s.piece == "concave"]
        curves = [np.vstack([conv, conv[:1]])] if conv else []
        if conc:
            curves.append(np.array(conc))
        (out / "indicatrix.svg").write_text(curves_svg(curves, [np.zeros(2)], "indicatrix"), encoding="utf-8")
    counts = {}
    for s in samples:
        counts[s.piece] = counts.get(s.piece, 0) + 1
    return {"region": region_at(wd, p).region.value, "counts": counts, "samples": len(samples)}


def cmd_geodesic(cfg, wd, out):
    prm = cfg["params"]
    p = _vec(prm["point"], "point", wd.dim)
    v = _vec(prm["vector"], "vector", wd.dim)
    if prm["normalize"]:
        v = v / speeds(wd, tangent(p, v))[0]
    span = float(prm["span"])
    ts = np.linspace(0.0, span, int(prm["samples"]))
    if admissible(wd, tangent(p, v)) is Admissible.CONE:
        c = boundary_geodesic(wd, p, v, span, t_eval=ts)
    else:
        c = geodesic_ivp(wd, p, v, span, t_eval=ts)
    if cfg["output"]["csv"]:
        header = ["t"] + [f"x{i}" for i in range(wd.dim)] + [f"v{i}" for i in range(wd.dim)]
        write_csv(out / "geodesic.csv", header, [[t, *x, *u] for t, x, u in zip(c.params, c.points, c.velocities)])
    if wd.dim >= 2 and cfg["output"]["svg"]:
        (out / "geodesic.svg").write_text(curves_svg([c.points], [p], "geodesic"), encoding="utf-8")
    result = {"case": c.meta["case"], "status": c.meta["status"], "boundary": c.meta["boundary"],
              "end": c.points[-1], "t_end": c.params[-1]}
    result.update({k: c.meta[k] for k in ("energy_drift", "null_drift", "speed_drift") if k in c.meta})
    return result


def cmd_navigate(cfg, wd, out):
    prm = cfg["params"]
    p = _vec(prm["p"], "p", wd.dim)
    q = _vec(prm["q"], "q", wd.dim)
    res = navigate(wd, p, q, t_max=prm["t_max"])
    if res.curve is not None and wd.dim >= 2 and cfg["output"]["svg"]:
        chord = np.array([p, q])
        (out / "navigate.svg").write_text(curves_svg([res.curve.points, chord], [p, q], "navigation"), encoding="utf-8")
    result = {"time": res.time, "status": res.status}
    result.update({k: v for k, v in res.meta.items() if k in ("heading", "t_max")})
    return result


def cmd_ball(cfg, wd, out):
    prm = cfg["params"]
    p0 = _vec(prm["p0"], "p0", wd.dim)
    r = float(prm["r"])
    grid = GridSpec.auto(wd, _box(cfg, wd), int(prm["resolution"]))
    field = forward_ball(wd, p0, r, grid, backward=bool(prm["backward"]))
    if cfg["output"]["csv"]:
        field.to_csv(out / "ball.csv")
    if wd.dim == 2 and cfg["output"]["svg"]:
        svg = field_svg(grid.axes(), field.times, field.closed_ball(), f"wind ball r={r:g}", [p0])
        (out / "ball.svg").write_text(svg, encoding="utf-8")
    pts = field.points("closed")
    bbox = [pts.min(axis=0), pts.max(axis=0)] if len(pts) else None
    return {"cells_closed": int(field.closed_ball().sum()), "cells_open": int(field.open_ball().sum()),
            "cells_ever": int(field.ever_reached().sum()), "bbox": bbox, "dt": grid.dt,
            "center_in_ball": bool(field.closed_ball()[grid.index_of(p0)])}


def _samples(cfg, wd, n):
    rng = np.random.default_rng(cfg["seed"])
    return sample_points(wd, _box(cfg, wd), n, rng)


def cmd_classify(cfg, wd, out):
    pts = _samples(cfg, wd, int(cfg["params"]["samples"]))
    return classify_all(wd, pts, cross_check=bool(cfg["params"]["cross_check"])).to_dict()


def cmd_verify(cfg, wd, out):
    """Pointwise invariants on random samples; returns a report and a pass flag."""
    pts = _samples(cfg, wd, int(cfg["params"]["samples"]))
    tol = TOLERANCES["verify"]
    worst = {"indicatrix": 0.0, "null_lift": 0.0, "determinant": 0.0, "randers": 0.0}
    signature_ok = True
    for p in pts:
        G = metric_at(wd, p)
        eig = np.linalg.eigvalsh(G)
        signature_ok &= int(np.sum(eig < 0)) == 1
        dg = np.linalg.det(wd.g(p))
        worst["determinant"] = max(worst["determinant"], abs(np.linalg.det(G) + dg) / abs(dg))
        for s in indicatrix(wd, p, 32):
            if s.piece == "zero":
                continue
            f, fl = speeds(wd, s.vec)
            err = {"convex": abs(f - 1), "concave": abs(fl - 1), "cone": abs(f - fl)}[s.piece]
            worst["indicatrix"] = max(worst["indicatrix"], err)
            y = np.concatenate([[1.0], s.vec.components])
            worst["null_lift"] = max(worst["null_lift"], abs(y @ G @ y) / (y @ y))
            if region_at(wd, p).Lambda > 1e-6:
                rs = randers_speed(wd, s.vec)
                worst["randers"] = max(worst["randers"], abs(rs - f) / abs(f))
    checks = {
        "indicatrix": worst["indicatrix"] < tol,
        "null_lift": worst["null_lift"] < tol,
        "determinant": worst["determinant"] < tol,
        "randers": worst["randers"] < 1e-12,
        "signature": bool(signature_ok),
    }
    return {"checks": checks, "worst": worst, "passed": all(checks.values()), "samples": len(pts)}


HANDLERS = {
    "eval": cmd_eval,
    "indicatrix": cmd_indicatrix,
    "geodesic": cmd_geodesic,
    "navigate": cmd_navigate,
    "ball": cmd_ball,
    "classify": cmd_classify,
    "verify": cmd_verify,
}


def run(cfg: dict, out: Path) -> int:
    """Execute a validated config, writing ``result.json`` (and CSV/SVG) into ``out``."""
    out.mkdir(parents=True, exist_ok=True)
    try:
        wd = make_model(cfg["model"]["name"], cfg["model"]["params"])
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"model: {exc}") from None
    result = HANDLERS[cfg["command"]](cfg, wd, out)
    write_json(out / "result.json", cfg, result)
    if cfg["command"] == "verify" and not result["passed"]:
        return 1
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="windfield", description="Wind Riemannian structure toolkit")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config leaf by dotted path (value parsed as JSON when possible)")
    parser.add_argument("--out", help="output directory (overrides output.dir)")
    args = parser.parse_args(argv)
    try:
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        raw.setdefault("command", args.command)
        for item in args.set:
            apply_override(raw, item)
        cfg = normalize_config(raw, args.command)
        out_dir = args.out or cfg["output"].get("dir")
        if not out_dir:
            raise ConfigError("no output directory: pass --out or set output.dir")
        return run(cfg, Path(out_dir))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DomainError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
