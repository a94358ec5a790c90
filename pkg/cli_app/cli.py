# cli_app/cli.py
"""Command-line surface of the toolkit.

    rays     ray polylines l_m and their double points
    kernel   kernel report of F'(0) at one (alpha, beta)
    scan     smallest singular values over a box of the (alpha, beta) plane
    detect   eigenvalue crossings along a straight path
    reduce   Lyapunov-Schmidt probes around a double point
    branch   pitchfork branch from a simple bifurcation point (JSON lines)
    verify   acceptance suite

Settings come from flags, then from an optional `--config FILE` of
`key = value` lines, then from the defaults below.
"""
import argparse
import logging
import sys
from dataclasses import dataclass

import numpy as np

from analysis_app.continuation import (
    bifurcation_on_ray, branch_switch, continue_branch, ray_params,
)
from analysis_app.linear_analysis import (
    PathSegment, detect_sign_changes, kernel_analysis_at_params, scan_bifurcation_set,
)
from analysis_app.lyapunov_schmidt import build_context, probe_batch
from analysis_app.newton import NewtonConfig
from cli_app import verify
from cli_app.output import (
    kernel_record, open_output, probe_record, write_branch_jsonl, write_json,
    write_rays_csv, write_scan_csv, write_scan_json,
)
from common.errors import (
    ConfigError, ConvergenceError, DomainError, IndeterminateDegreeError,
    ShapeError, SingularityError,
)
from common.log import setup_logging
from common.protocol import (
    BRANCH_COMPLETE, DEFAULT_N, DEFAULT_R, DETECT_FIELDS, EXIT_CONFIG, EXIT_OK,
    EXIT_PARTIAL, EXIT_SOLVER, EXIT_VERIFY_FAILED, FMT_CSV, FMT_JSON, MAX_WORKERS,
    M_MAX, NEWTON_MAX_ITER, NEWTON_TOL, PROBE_OFFSET, RAY_SAMPLES, RAYS_CSV_HEADER,
    STATUS_INDETERMINATE, STATUS_SOLVER_FAILURE, VERIFY_FIELDS, WINDING_RADIUS,
    WINDING_SAMPLES,
)
from rod_app.core_model import (
    Params, double_points_in_window, mode_coefficient, ray_beta,
)
from rod_app.discretization import build_grid

logger = logging.getLogger(__name__)


def _floats(value):
    parts = value.replace(",", " ").split() if isinstance(value, str) else list(value)
    return tuple(float(p) for p in parts)


def _pair(value):
    values = _floats(value)
    if len(values) != 2:
        raise ValueError(f"expected two numbers, got {len(values)}")
    return values


# setting name -> converter for flag and config-file text
SETTINGS = {
    "r": float, "n": int, "alpha": float, "beta": float, "gamma": float,
    "tol": float, "max_iter": int, "workers": int,
    "m": int, "m1": int, "m2": int, "m_max": int, "alpha_max": float,
    "threshold": float, "alpha_range": _pair, "beta_range": _pair, "resolution": int,
    "start": _pair, "end": _pair, "steps": int,
    "gamma0": float, "offsets": _floats, "slopes": _floats, "radius": float, "samples": int,
    "free": str, "fixed_alpha": float, "fixed_beta": float, "dt": float, "t0": float,
    "direction": int, "downsample": int,
    "level": str, "output": str, "out": str,
}

DEFAULTS = {
    "r": DEFAULT_R, "n": DEFAULT_N, "gamma": 1.0, "tol": NEWTON_TOL,
    "max_iter": NEWTON_MAX_ITER, "workers": MAX_WORKERS,
    "m_max": M_MAX, "alpha_max": 2.0,
    "alpha_range": (0.1, 1.5), "beta_range": (0.01, 0.3), "resolution": 64,
    "m1": 1, "m2": 2, "gamma0": 1.0, "offsets": (PROBE_OFFSET,), "slopes": (0.3, 1.0),
    "radius": WINDING_RADIUS, "samples": WINDING_SAMPLES,
    "dt": 5e-3, "t0": 1e-3, "direction": 1, "downsample": 1,
    "level": "quick", "output": FMT_JSON,
}

COMMAND_DEFAULTS = {
    "rays": {"output": FMT_CSV},
    "scan": {"output": FMT_CSV},
    "detect": {"steps": 64},
    "branch": {"steps": 20},
}

FORMATS = {
    "rays": (FMT_CSV, FMT_JSON),
    "kernel": (FMT_JSON,),
    "scan": (FMT_CSV, FMT_JSON),
    "detect": (FMT_JSON,),
    "reduce": (FMT_JSON,),
    "branch": (FMT_JSON,),
    "verify": (FMT_JSON,),
}


@dataclass(frozen=True)
class RunConfig:
    command: str
    r: float = None
    n: int = None
    alpha: float = None
    beta: float = None
    gamma: float = None
    tol: float = None
    max_iter: int = None
    workers: int = None
    m: int = None
    m1: int = None
    m2: int = None
    m_max: int = None
    alpha_max: float = None
    threshold: float = None
    alpha_range: tuple = None
    beta_range: tuple = None
    resolution: int = None
    start: tuple = None
    end: tuple = None
    steps: int = None
    gamma0: float = None
    offsets: tuple = None
    slopes: tuple = None
    radius: float = None
    samples: int = None
    free: str = None
    fixed_alpha: float = None
    fixed_beta: float = None
    dt: float = None
    t0: float = None
    direction: int = None
    downsample: int = None
    level: str = None
    output: str = None
    out: str = None

    def require(self, *names):
        for name in names:
            if getattr(self, name) is None:
                raise ConfigError(f"--{name.replace('_', '-')} is required for `{self.command}`",
                                  field=name)

    def grid(self):
        return build_grid(self.n, self.r)

    def newton(self):
        return NewtonConfig(residual_tol=self.tol, max_iter=self.max_iter)


def convert_setting(key, value):
    try:
        return SETTINGS[key](value)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid value {value!r} for {key}: {e}", field=key) from e


def read_config_file(path):
    """Settings from `key = value` lines; `#` starts a comment."""
    try:
        with open(path, encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}", field="config") from e
    values = {}
    for lineno, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, text = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'", field="config")
        key = key.strip().replace("-", "_")
        if key not in SETTINGS:
            raise ConfigError(f"{path}:{lineno}: unknown setting {key!r}", field=key)
        values[key] = convert_setting(key, text.strip())
    return values


def resolve_config(args):
    """RunConfig from parsed flags; flags beat the config file, which beats defaults."""
    flags = dict(vars(args))
    command = flags.pop("command")
    config_path = flags.pop("config", None)
    flags.pop("verbose", None)

    merged = dict(DEFAULTS)
    merged.update(COMMAND_DEFAULTS.get(command, {}))
    if config_path:
        merged.update(read_config_file(config_path))
    for key, value in flags.items():
        if value is not None:
            merged[key] = convert_setting(key, value)
    cfg = RunConfig(command=command, **merged)
    validate(cfg)
    return cfg


def validate(cfg):
    """Reject settings that break a module precondition; the error names the field."""
    if cfg.output not in FORMATS[cfg.command]:
        raise ConfigError(f"`{cfg.command}` writes {' or '.join(FORMATS[cfg.command])}, "
                          f"not {cfg.output!r}", field="output")
    if not cfg.r > 0:
        raise ConfigError(f"r must be > 0, got {cfg.r}", field="r")
    for name in ("alpha", "beta", "fixed_alpha", "fixed_beta"):
        value = getattr(cfg, name)
        if value is not None and not value > 0:
            raise ConfigError(f"{name} must be > 0, got {value}", field=name)
    for name in ("gamma", "gamma0"):
        if not getattr(cfg, name) >= 0:
            raise ConfigError(f"{name} must be >= 0, got {getattr(cfg, name)}", field=name)
    if cfg.workers < 1:
        raise ConfigError(f"workers must be >= 1, got {cfg.workers}", field="workers")
    if cfg.command != "rays":
        cfg.grid()
    cfg.newton()


def ray_rows(r, m_max, alpha_max, samples=RAY_SAMPLES):
    """(kind, m1, m2, alpha, beta) rows: each l_m where beta > 0, then the double points."""
    if m_max < 1:
        raise ConfigError(f"m-max must be >= 1, got {m_max}", field="m_max")
    if not alpha_max > 0:
        raise ConfigError(f"alpha-max must be > 0, got {alpha_max}", field="alpha_max")
    rows = []
    for m in range(1, m_max + 1):
        alpha_start = -mode_coefficient(m, r)  # beta = 0 on l_m
        if alpha_start >= alpha_max:
            continue
        for alpha in np.linspace(alpha_start, alpha_max, samples + 1)[1:]:
            rows.append(("ray", m, None, float(alpha), ray_beta(m, alpha, r)))
    for dp in double_points_in_window(m_max, alpha_max, r):
        rows.append(("double_point", dp.m1, dp.m2, dp.alpha0, dp.beta0))
    return rows


def cmd_rays(cfg):
    rows = ray_rows(cfg.r, cfg.m_max, cfg.alpha_max)
    logger.info("%d ray rows for m <= %d, alpha <= %g", len(rows), cfg.m_max, cfg.alpha_max)
    with open_output(cfg.out) as stream:
        if cfg.output == FMT_CSV:
            write_rays_csv(rows, stream)
        else:
            write_json([dict(zip(RAYS_CSV_HEADER, row)) for row in rows], stream)
    return EXIT_OK


def cmd_kernel(cfg):
    cfg.require("alpha", "beta")
    p = Params(alpha=cfg.alpha, beta=cfg.beta, gamma=cfg.gamma, r=cfg.r)
    report = kernel_analysis_at_params(p, cfg.grid(), cfg.threshold)
    with open_output(cfg.out) as stream:
        write_json(kernel_record(report), stream)
    return EXIT_OK


def cmd_scan(cfg):
    scan = scan_bifurcation_set(cfg.alpha_range, cfg.beta_range, cfg.resolution, cfg.grid(),
                                max_workers=cfg.workers)
    with open_output(cfg.out) as stream:
        if cfg.output == FMT_CSV:
            write_scan_csv(scan, stream)
        else:
            write_scan_json(scan, stream)
    return EXIT_OK


def cmd_detect(cfg):
    cfg.require("start", "end")
    path = PathSegment(start=cfg.start, end=cfg.end)
    crossings = detect_sign_changes(path, cfg.grid(), cfg.steps, m_max=cfg.m_max)
    records = [dict(zip(DETECT_FIELDS, (c.s, c.alpha, c.beta, c.mode.m, c.similarity)))
               for c in crossings]
    with open_output(cfg.out) as stream:
        write_json(records, stream)
    return EXIT_OK


def cmd_reduce(cfg):
    ctx = build_context(cfg.m1, cfg.m2, cfg.grid(), gamma0=cfg.gamma0, newton=cfg.newton())
    reports = probe_batch(cfg.offsets, cfg.slopes, ctx, max_workers=cfg.workers,
                          radius=cfg.radius, samples=cfg.samples)
    with open_output(cfg.out) as stream:
        write_json([probe_record(rep) for rep in reports], stream)
    for rep in reports:
        if rep.status in (STATUS_SOLVER_FAILURE, STATUS_INDETERMINATE):
            logger.error("probe (%g, %g) slope=%g %s: %s",
                         rep.alpha, rep.beta, rep.slope, rep.status, rep.message)
    statuses = [rep.status for rep in reports]
    if STATUS_SOLVER_FAILURE in statuses:
        logger.error("%d of %d probes failed to converge",
                     statuses.count(STATUS_SOLVER_FAILURE), len(reports))
        return EXIT_SOLVER
    if STATUS_INDETERMINATE in statuses:
        logger.warning("%d of %d probes have an indeterminate degree",
                       statuses.count(STATUS_INDETERMINATE), len(reports))
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_branch(cfg):
    cfg.require("m", "free")
    if cfg.free not in ("alpha", "beta"):
        raise ConfigError(f"--free must be alpha or beta, got {cfg.free!r}", field="free")
    fixed_name = "fixed_beta" if cfg.free == "alpha" else "fixed_alpha"
    cfg.require(fixed_name)
    grid = cfg.grid()
    p = ray_params(cfg.m, cfg.free, getattr(cfg, fixed_name), cfg.gamma, grid)
    bif = bifurcation_on_ray(cfg.m, p, cfg.free, grid)
    seed = branch_switch(bif, cfg.direction, cfg.t0, cfg.free, p, grid, newton=cfg.newton())
    branch = continue_branch(seed, cfg.steps, cfg.dt)
    with open_output(cfg.out) as stream:
        write_branch_jsonl(branch, stream, cfg.downsample)
    return EXIT_OK if branch.status == BRANCH_COMPLETE else EXIT_PARTIAL


def cmd_verify(cfg):
    if cfg.level not in ("quick", "full"):
        raise ConfigError(f"--level must be quick or full, got {cfg.level!r}", field="level")
    results = verify.run_checks(verify.checks_for(cfg.level))
    for name, passed, message in results:
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {message}", file=sys.stderr)
    failed = [name for name, passed, _ in results if not passed]
    summary = {
        "level": cfg.level,
        "passed": len(results) - len(failed),
        "failed": len(failed),
        "checks": [dict(zip(VERIFY_FIELDS, row)) for row in results],
    }
    with open_output(cfg.out) as stream:
        write_json(summary, stream)
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


COMMANDS = {
    "rays": cmd_rays,
    "kernel": cmd_kernel,
    "scan": cmd_scan,
    "detect": cmd_detect,
    "reduce": cmd_reduce,
    "branch": cmd_branch,
    "verify": cmd_verify,
}


def _common_options():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--verbose", action="store_true", help="DEBUG logging on stderr")
    common.add_argument("--config", metavar="FILE", help="file of `key = value` settings")
    common.add_argument("--output", choices=(FMT_JSON, FMT_CSV), help="output format")
    common.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    return common


def _grid_options():
    grid = argparse.ArgumentParser(add_help=False)
    grid.add_argument("--r", help="half-length of the rod")
    grid.add_argument("--n", help="grid nodes (odd, >= 11)")
    return grid


def _solver_options():
    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--tol", help="Newton residual tolerance")
    solver.add_argument("--max-iter", help="Newton iteration limit")
    return solver


def build_parser():
    parser = argparse.ArgumentParser(
        prog="run_cli.py",
        description="Two-parameter bifurcation analysis of a rod on an elastic foundation.")
    sub = parser.add_subparsers(dest="command", required=True)
    common, grid, solver = _common_options(), _grid_options(), _solver_options()

    rays = sub.add_parser("rays", parents=[common], help="ray polylines and double points")
    rays.add_argument("--r", help="half-length of the rod")
    rays.add_argument("--m-max", help="highest mode index")
    rays.add_argument("--alpha-max", help="right end of the alpha window")

    kernel = sub.add_parser("kernel", parents=[common, grid], help="kernel report at one point")
    kernel.add_argument("--alpha")
    kernel.add_argument("--beta")
    kernel.add_argument("--gamma")
    kernel.add_argument("--threshold", help="singular-value threshold (default 10 h^2 scale)")

    scan = sub.add_parser("scan", parents=[common, grid], help="singular-value scan of a box")
    scan.add_argument("--alpha-range", nargs=2, metavar=("LO", "HI"))
    scan.add_argument("--beta-range", nargs=2, metavar=("LO", "HI"))
    scan.add_argument("--resolution", help="cells per axis")
    scan.add_argument("--workers")

    detect = sub.add_parser("detect", parents=[common, grid], help="crossings along a path")
    detect.add_argument("--start", nargs=2, metavar=("ALPHA", "BETA"))
    detect.add_argument("--end", nargs=2, metavar=("ALPHA", "BETA"))
    detect.add_argument("--steps", help="coarse samples before bisection")
    detect.add_argument("--m-max", help="highest mode tried when naming a crossing")

    reduce = sub.add_parser("reduce", parents=[common, grid, solver], help="degree probes at a double point")
    reduce.add_argument("--m1")
    reduce.add_argument("--m2")
    reduce.add_argument("--gamma0")
    reduce.add_argument("--offsets", nargs="+", help="alpha offsets from the double point")
    reduce.add_argument("--slopes", nargs="+", help="beta offset / alpha offset")
    reduce.add_argument("--radius", help="xi-circle radius for the winding number")
    reduce.add_argument("--samples", help="points on the xi-circle")
    reduce.add_argument("--workers")

    branch = sub.add_parser("branch", parents=[common, grid, solver], help="pitchfork branch (JSON lines)")
    branch.add_argument("--m")
    branch.add_argument("--free", choices=("alpha", "beta"))
    branch.add_argument("--fixed-alpha")
    branch.add_argument("--fixed-beta")
    branch.add_argument("--gamma")
    branch.add_argument("--steps")
    branch.add_argument("--dt")
    branch.add_argument("--t0", help="seed amplitude")
    branch.add_argument("--direction", choices=("1", "-1"))
    branch.add_argument("--downsample", help="keep every k-th sample of x")

    check = sub.add_parser("verify", parents=[common], help="acceptance suite")
    check.add_argument("--level", choices=("quick", "full"))
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    setup_logging(args.verbose)
    try:
        cfg = resolve_config(args)
        return COMMANDS[cfg.command](cfg)
    except (ConfigError, DomainError, ShapeError) as e:
        field = getattr(e, "field", None)
        logger.error("invalid configuration%s: %s", f" ({field})" if field else "", e)
        return EXIT_CONFIG
    except (ConvergenceError, SingularityError, IndeterminateDegreeError) as e:
        logger.error("solver failure: %s", e)
        return EXIT_SOLVER
