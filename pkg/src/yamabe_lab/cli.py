"""Command-line front end: ``invariants``, ``scan``, ``minimize``, ``static-check``.

Exit codes: 0 success, 1 numerical failure, 2 usage error.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from . import geometry as geo
from .functional import PositivityError, aubin_constant, eh_energy, minimize_quotient
from .reports import SCAN_COLUMNS, TRACE_COLUMNS, scan_svg, to_csv, to_json
from .static import static_check
from .threshold import classify, critical_parameter, scan

COMMANDS = ("invariants", "scan", "minimize", "static-check")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    k: int = 2
    l: int = 2
    t: float | None = None
    t_min: float = 1.0
    t_max: float = 2.5
    steps: int = 16
    lmax: int = 6
    degree: int | None = None
    restarts: int = 8
    seed: int = 42
    tol: float = 1e-6
    out: str | None = None
    format: str | None = None
    with_minimizer: bool = False

    def validate(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.t is not None and not self.t >= 1:
            raise UsageError("t must be ≥ 1")
        if self.t_min < 1:
            raise UsageError("t must be ≥ 1")
        if self.command == "scan" and (self.steps < 1 or (self.steps > 1 and not self.t_min < self.t_max)):
            raise UsageError(f"empty t-range [{self.t_min}, {self.t_max}] with {self.steps} steps")
        if self.tol <= 0:
            raise UsageError("tol must be positive")
        if self.lmax < 1 or self.restarts < 1:
            raise UsageError("lmax and restarts must be >= 1")
        if self.format not in (None, "csv", "json", "svg"):
            raise UsageError(f"unknown format {self.format!r}")

    @property
    def grid_degree(self) -> int:
        return self.degree if self.degree is not None else 4 * self.lmax

    def family(self, t: float | None = None) -> geo.ProductFamily:
        return geo.ProductFamily.spheres(self.k, self.l, self.t if t is None else t)


_TYPES = {f.name: f.type for f in fields(RunConfig)}


def _coerce(key: str, raw: str):
    kind = _TYPES[key]
    if "bool" in kind:
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if "int" in kind:
        return int(raw)
    if "float" in kind:
        return float(raw)
    return raw.strip()


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment."""
    values = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        key, raw = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _TYPES or key == "command":
            raise UsageError(f"{path}:{n}: unknown key {key!r}")
        try:
            values[key] = _coerce(key, raw)
        except ValueError as exc:
            raise UsageError(f"{path}:{n}: bad value for {key}: {raw!r}") from exc
    return values


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--k", type=int, help="sphere factor dimension (default 2)")
    common.add_argument("--l", type=int, help="Einstein factor dimension (default 2)")
    common.add_argument("--t", type=float, help="squeezing parameter, t >= 1")
    common.add_argument("--t-min", dest="t_min", type=float)
    common.add_argument("--t-max", dest="t_max", type=float)
    common.add_argument("--steps", type=int, help="number of t values in a scan")
    common.add_argument("--lmax", type=int, help="harmonic degree cutoff (default 6)")
    common.add_argument("--degree", type=int, help="quadrature degree (default 4*lmax)")
    common.add_argument("--restarts", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--tol", type=float)
    common.add_argument("--out", help="output path (default: stdout)")
    common.add_argument("--format", choices=["csv", "json", "svg"])
    common.add_argument("--with-minimizer", dest="with_minimizer", action="store_true")
    common.add_argument("--config", help="file of 'key = value' lines")
    parser = argparse.ArgumentParser(prog="yamabe-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def resolve_config(argv) -> RunConfig:
    args = vars(build_parser().parse_args(argv))
    command = args.pop("command")
    merged = {}
    path = args.pop("config", None)
    if path is not None:
        merged.update(read_config_file(path))
    merged.update(args)
    cfg = RunConfig(command=command, **merged)
    cfg.validate()
    return cfg


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def cmd_invariants(cfg: RunConfig) -> int:
    fam = cfg.family(1.0 if cfg.t is None else cfg.t)
    s = geo.scalar_curvature(fam)
    row = {
        "family": fam.to_json(),
        "scalar": s,
        "volume": geo.volume(fam),
        "energy": eh_energy(fam),
        "aubin_constant": aubin_constant(fam.n),
        "lambda1": geo.product_lambda1(fam),
        "threshold": s / (fam.n - 1),
        "lichnerowicz_bound": geo.lichnerowicz_lower_bound(fam),
        "critical_t": critical_parameter(fam.k),
        "classification": classify(fam),
    }
    config = asdict(cfg)
    if cfg.format == "csv":
        flat = {**{k: v for k, v in row.items() if k != "family"}, "t": fam.t}
        _emit(to_csv([flat], list(flat), config), cfg.out)
    else:
        _emit(to_json(row, config), cfg.out)
    return 0


def _scan_rows(cfg: RunConfig):
    records = scan(
        geo.ProductFamily.spheres(cfg.k, cfg.l, cfg.t_min),
        cfg.t_min,
        cfg.t_max,
        cfg.steps,
        with_minimizer=cfg.with_minimizer,
        l_max=cfg.lmax,
        degree=cfg.grid_degree,
        restarts=cfg.restarts,
        seed=cfg.seed,
        tol=cfg.tol,
    )
    return [r.row() for r in records]


def cmd_scan(cfg: RunConfig) -> int:
    rows = _scan_rows(cfg)
    config = asdict(cfg)
    fmt = cfg.format or "csv"
    if fmt == "json":
        _emit(to_json({"columns": SCAN_COLUMNS, "records": rows}, config), cfg.out)
    elif fmt == "svg":
        _emit(scan_svg(rows, critical_parameter(cfg.k), config), cfg.out)
    else:
        columns = SCAN_COLUMNS if cfg.with_minimizer else [c for c in SCAN_COLUMNS if c != "estimate"]
        _emit(to_csv(rows, columns, config), cfg.out)
    return 0


def cmd_minimize(cfg: RunConfig) -> int:
    fam = cfg.family(1.0 if cfg.t is None else cfg.t)
    res = minimize_quotient(
        fam, l_max=cfg.lmax, restarts=cfg.restarts, seed=cfg.seed, tol=cfg.tol, degree=cfg.grid_degree
    )
    config = asdict(cfg)
    payload = {
        "family": fam.to_json(),
        "estimate": res.estimate,
        "energy": res.energy,
        "gap_to_energy": res.gap,
        "aubin_constant": res.aubin_bound,
        "gap_to_aubin": res.aubin_gap,
        "seed": res.seed,
        "basis_size": res.minimizer.space.size,
        "restart_values": res.restart_values,
        "best_restart": res.best_restart,
        "min_u": float(res.minimizer.values.min()),
        "note": "the estimate is an upper bound on the Yamabe constant of [h_t], not a certified value",
    }
    _emit(to_json(payload, config), cfg.out)
    if cfg.out is not None:
        trace_path = Path(cfg.out).with_suffix(".trace.csv")
        trace_rows = [asdict(row) for row in res.trace]
        trace_path.write_text(to_csv(trace_rows, TRACE_COLUMNS, config))
    return 0


def cmd_static_check(cfg: RunConfig) -> int:
    _emit(to_json(static_check(cfg.k, cfg.l, cfg.t), asdict(cfg)), cfg.out)
    return 0


HANDLERS = {
    "invariants": cmd_invariants,
    "scan": cmd_scan,
    "minimize": cmd_minimize,
    "static-check": cmd_static_check,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    except (UsageError, TypeError) as exc:
        print(f"yamabe-lab: error: {exc}", file=sys.stderr)
        return 2
    try:
        return HANDLERS[cfg.command](cfg)
    except PositivityError as exc:
        print(f"yamabe-lab: numerical failure: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"yamabe-lab: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
