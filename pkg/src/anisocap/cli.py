"""``anisocap`` command line.

Settings come from an optional flat ``key = value`` config file and from
flags; flags win.  Exit status: 0 when every requested check passes, 1 when
a check fails, 2 for invalid configuration, 3 when the solver fails.
"""

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from .anisotropy import parse_anisotropy
from .capacity import capacity_sweep, check_sandwich, relative_capacity, thread_count
from .errors import ConvergenceError, GeometryError
from .grid import write_scalar_csv, write_vector_csv
from .solver import Schedule, solve_annulus
from .verify import calculus_properties, check_p1_example, lipschitz_check
from .wulff import AnnulusProblem, annulus_capacity_exact, parse_domain, radius_bounds

COMMANDS = ("solve", "capacity", "sweep", "verify-barriers", "verify-lipschitz", "verify-p1",
            "calculus-props")

# config key -> (type, default)
OPTIONS = {
    "aniso": (str, "euclidean"),
    "domain": (str, "wulff(1)"),
    "p": (float, 1.5),
    "R": (str, "2"),
    "h": (float, None),
    "out": (str, "."),
    "seed": (int, 0),
    "threads": (int, None),
    "lam0": (float, None),
    "mu0": (float, None),
    "eps0": (float, None),
    "stages": (int, None),
    "tol": (float, None),
    "max_iter": (int, None),
    "lam_floor": (float, None),
    "mu_floor": (float, None),
    "eps_floor": (float, None),
    "init": (str, "multilevel"),
    "r": (float, None),
    "R0": (float, None),
    "r1": (float, None),
    "r2": (float, None),
    "c_tol": (float, 5.0),
    "set": (str, "E2"),
    "n": (int, 1000),
    "timing": (bool, True),
}

SCHEDULE_KEYS = ("lam0", "mu0", "eps0", "stages", "tol", "max_iter", "lam_floor", "mu_floor",
                 "eps_floor")


class ConfigError(ValueError):
    pass


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _convert(key, value):
    kind = OPTIONS[key][0]
    try:
        if kind is bool:
            return _bool(value)
        return kind(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {key}: {value!r}") from exc


def _canon(key):
    key = key.strip().replace("-", "_")
    if key not in OPTIONS:
        raise ConfigError(f"unknown config key {key!r}")
    return key


def read_config(path):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key == "command":
            out["command"] = value
            continue
        out[_canon(key)] = _convert(_canon(key), value)
    return out


def build_parser():
    ap = argparse.ArgumentParser(prog="anisocap",
                                 description="Anisotropic p-capacity solver and certifiers.")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="flat key = value file; flags override it")
    for key, (kind, _) in OPTIONS.items():
        if kind is bool:
            continue
        flag = "--" + key.replace("_", "-")
        ap.add_argument(flag, dest=key, default=None, help=argparse.SUPPRESS
                        if key in SCHEDULE_KEYS else None)
    ap.add_argument("--no-timing", dest="timing", action="store_const", const=False,
                    default=None, help="write zero wall times (byte-identical outputs)")
    return ap


def resolve_config(argv):
    args = build_parser().parse_args(argv)
    cfg = {k: d for k, (_, d) in OPTIONS.items()}
    base_dir = None
    if args.config:
        file_cfg = read_config(args.config)
        base_dir = Path(args.config).parent
        if file_cfg.pop("command", args.command) != args.command:
            raise ConfigError("config file names a different command")
        cfg.update(file_cfg)
    for key in OPTIONS:
        val = getattr(args, key)
        if val is not None:
            cfg[key] = _convert(key, val) if isinstance(val, str) else val
    cfg["command"] = args.command
    cfg["base_dir"] = base_dir
    return cfg


def _schedule(cfg):
    over = {k: cfg[k] for k in SCHEDULE_KEYS if cfg[k] is not None}
    return Schedule(**over)


def _problem(cfg, R=None):
    a = parse_anisotropy(cfg["aniso"])
    dom = parse_domain(cfg["domain"], a, cfg["base_dir"])
    if R is None:
        R = _radii(cfg)[0]
    return AnnulusProblem(dom, R, a, cfg["p"])


def _radii(cfg):
    try:
        vals = [float(v) for v in str(cfg["R"]).split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad R list {cfg['R']!r}") from exc
    if not vals:
        raise ConfigError("R is empty")
    return vals


def _need_h(cfg):
    if cfg["h"] is None:
        raise ConfigError("--h is required for this command")
    return cfg["h"]


def _dump(path, obj):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _clean(obj):
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_profile(path, result):
    """``x u`` along the ray ``x >= 0`` on the first axis, other coordinates zero."""
    g = result.grid
    centre = tuple(n for n in g.half_width)
    idx = list(centre)
    with open(path, "w") as fh:
        fh.write("# x u\n")
        for i in range(g.half_width[0], g.shape[0]):
            idx[0] = i
            fh.write("%.12g %.12g\n" % ((i - g.half_width[0]) * g.h, result.u.values[tuple(idx)]))


def _solve(cfg, problem=None):
    problem = _problem(cfg) if problem is None else problem
    h = _need_h(cfg)
    init = cfg["init"]
    if init not in ("multilevel", "zero", "barrier"):
        raise ConfigError(f"unknown init {init!r}")
    return problem, solve_annulus(problem, h, _schedule(cfg), init=init)


def _write_fields(out, result, summary):
    write_scalar_csv(out / "u.csv", result.grid, result.u)
    write_vector_csv(out / "z.csv", result.grid, result.flux)
    write_profile(out / "profile.dat", result)
    _dump(out / "summary.json", summary)


def cmd_solve(cfg, out):
    problem, res = _solve(cfg)
    _write_fields(out, res, res.summary(timing=cfg["timing"]))
    return 0 if res.converged else 3


def cmd_capacity(cfg, out):
    problem = _problem(cfg)
    value, res = relative_capacity(problem, _need_h(cfg), _schedule(cfg), init=cfg["init"])
    summary = res.summary(timing=cfg["timing"])
    summary.update({"capacity": value, "R": problem.R, "p": problem.p})
    if problem.domain.name.startswith("wulff"):
        r = float(problem.domain.name[len("wulff("):-1])
        summary["capacity_exact"] = annulus_capacity_exact(problem.aniso, problem.p, r, problem.R)
    _write_fields(out, res, summary)
    return 0 if res.converged else 3


def cmd_sweep(cfg, out):
    a = parse_anisotropy(cfg["aniso"])
    dom = parse_domain(cfg["domain"], a, cfg["base_dir"])
    curve = capacity_sweep(dom, a, cfg["p"], _radii(cfg), h=cfg["h"], sched=_schedule(cfg),
                           threads=thread_count(cfg["threads"]), seed=cfg["seed"])
    (out / "curve.csv").write_text(curve.to_csv(timing=cfg["timing"]))
    _dump(out / "summary.json", curve.to_json(timing=cfg["timing"]))
    return 0 if all(e.converged for e in curve.entries) else 3


def cmd_verify_barriers(cfg, out):
    problem, res = _solve(cfg)
    b = radius_bounds(problem.aniso, problem.domain)
    r1 = b.r1 if cfg["r1"] is None else cfg["r1"]
    r2 = b.r2 if cfg["r2"] is None else cfg["r2"]
    rep = check_sandwich(problem, res, r1, r2, cfg["c_tol"]).to_json()
    rep.update({"r1": r1, "r2": r2})
    _dump(out / "report.json", rep)
    _write_fields(out, res, res.summary(timing=cfg["timing"]))
    if not res.converged:
        return 3
    return 0 if rep["pass"] else 1


def cmd_verify_lipschitz(cfg, out):
    problem, res = _solve(cfg)
    b = radius_bounds(problem.aniso, problem.domain)
    r = b.r1 if cfg["r"] is None else cfg["r"]
    rep = lipschitz_check(problem, res, r, R0=cfg["R0"], c_slack=cfg["c_tol"], bounds=b)
    _dump(out / "report.json", rep.to_json())
    _write_fields(out, res, res.summary(timing=cfg["timing"]))
    if not res.converged:
        return 3
    return 0 if rep.passed else 1


def cmd_verify_p1(cfg, out):
    h = cfg["h"] if cfg["h"] is not None else 1 / 64
    reps = check_p1_example(cfg["set"], h)
    _dump(out / "report.json", [r.to_json() for r in reps])
    return 0 if all(r.passed is not False for r in reps) else 1


def cmd_calculus_props(cfg, out):
    reps = calculus_properties(n=cfg["n"], seed=cfg["seed"], p=cfg["p"])
    _dump(out / "report.json", [r.to_json() for r in reps])
    return 0 if all(r.passed for r in reps) else 1


HANDLERS = {
    "solve": cmd_solve,
    "capacity": cmd_capacity,
    "sweep": cmd_sweep,
    "verify-barriers": cmd_verify_barriers,
    "verify-lipschitz": cmd_verify_lipschitz,
    "verify-p1": cmd_verify_p1,
    "calculus-props": cmd_calculus_props,
}


def run(argv=None):
    try:
        cfg = resolve_config(argv)
        out = Path(cfg["out"])
        out.mkdir(parents=True, exist_ok=True)
        thread_count(cfg["threads"])
        return HANDLERS[cfg["command"]](cfg, out)
    except SystemExit as exc:
        return 2 if exc.code not in (0, None) else 0
    except (ConfigError, GeometryError, ValueError, OSError) as exc:
        print(f"anisocap: configuration error: {exc}", file=sys.stderr)
        return 2
    except ConvergenceError as exc:
        print(f"anisocap: solver failure: {exc}", file=sys.stderr)
        return 3


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
