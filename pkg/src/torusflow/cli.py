"""Command-line front end: experiments to CSV/graymap files, plus the
acceptance-suite driver.

Configuration is flat key=value lines; command-line flags override the file,
and the TORUSFLOW_OUTDIR environment variable overrides the configured
output directory. Exit codes: 0 success, 1 a quantitative check failed,
2 usage or configuration error. All emitted files are byte-deterministic
for a fixed (config, seed).
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cfrac, circle
from .acceptance import run_criteria
from .dfa import BETA_MIN, DfaParams, TorusPoint, basin_grid
from .flow import (
    OBSERVABLES,
    FlowConfig,
    Section,
    build_return_map,
    first_return,
    log_growth_experiment,
    orbit_order_check,
)


class ConfigError(ValueError):
    """Bad key, bad value, or unreadable configuration file."""


@dataclass
class RunConfig:
    """Flat run configuration with the pinned experimental defaults."""

    beta: float = -2.0
    bump: str = "quartic"
    step: float = 1e-3
    series_tol: float = 1e-8
    series_max_terms: int = 200
    p: int = 1
    q: int = 1
    margin_min: float = 0.1
    T_max: float = 1e4
    samples: int = 48
    seed: int = 20260819
    observable: str = "sin_x"
    x0: float = 0.25
    y0: float = 0.5
    grid: int = 256
    n_iter: int = 2000
    n_points: int = 500
    n_returns: int = 3000
    max_iter: int = 300
    capture_radius: float = 1e-3
    renormalized: bool = True
    out_dir: str = "."

    def __post_init__(self):
        if not (BETA_MIN < self.beta <= 0.0):
            raise ConfigError(
                f"beta must lie in ({BETA_MIN:.6f}, 0], got {self.beta}")
        if math.gcd(self.p, self.q) != 1 or self.p < 1 or self.q < 1:
            raise ConfigError(f"(p, q) = ({self.p}, {self.q}) must be coprime positives")
        if self.observable not in OBSERVABLES:
            raise ConfigError(
                f"observable must be one of {sorted(OBSERVABLES)}, got {self.observable!r}")
        for key in ("step", "series_tol", "T_max", "capture_radius", "margin_min"):
            if not getattr(self, key) > 0:
                raise ConfigError(f"{key} must be positive")
        for key in ("samples", "grid", "n_iter", "n_points", "n_returns",
                    "max_iter", "series_max_terms"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be >= 1")

    def dfa_params(self) -> DfaParams:
        return DfaParams(beta=self.beta, bump=self.bump,
                         series_tol=self.series_tol,
                         series_max_terms=self.series_max_terms)

    def flow_config(self) -> FlowConfig:
        return FlowConfig(params=self.dfa_params(), step=self.step)

    def section(self) -> Section:
        return Section(self.p, self.q, margin_min=self.margin_min)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}


def _parse_value(key: str, raw: str):
    kind = _FIELD_TYPES[key]
    raw = raw.strip()
    try:
        if kind == "bool":
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for {key}: {raw!r}") from exc


def read_config_file(path: str) -> dict:
    """Parse flat key=value lines; '#' starts a comment."""
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {body!r}")
        key, raw = body.split("=", 1)
        key = key.strip()
        if key not in _FIELD_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _parse_value(key, raw)
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then config file, then environment, then explicit flags."""
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    env_out = os.environ.get("TORUSFLOW_OUTDIR")
    if env_out:
        values["out_dir"] = env_out
    for key in _FIELD_TYPES:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    try:
        return RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


def _out_path(cfg: RunConfig, args: argparse.Namespace, default_name: str) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return out_dir / default_name


def _write_csv(path: Path, header: str, rows, footer_lines=()) -> None:
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(repr(v) if isinstance(v, float) else str(v)
                              for v in row) + "\n")
        for line in footer_lines:
            fh.write(line + "\n")


def _parse_real(text: str) -> object:
    try:
        return cfrac.named_real(text)
    except cfrac.DomainError:
        pass
    try:
        float(text)
    except ValueError:
        raise ConfigError(f"not a real number or named constant: {text!r}")
    return text  # pass the string through so no precision is lost


# --------------------------------------------------------------- subcommands

def cmd_cfrac(args) -> int:
    if args.max_terms < 1:
        print("error: max_terms must be >= 1", file=sys.stderr)
        return 2
    value = _parse_real(args.value)
    import mpmath

    with mpmath.workprec(300):
        x = mpmath.mpf(value)
        whole = int(mpmath.floor(x))
        frac = x - whole
    if whole:
        print(f"integer part {whole}; expanding the fractional part")
    else:
        frac = value  # keep the caller's form so string inputs parse exactly
    try:
        cf = cfrac.expand(frac, args.max_terms, precision_bits=256)
    except cfrac.PrecisionExhausted:
        print("terminating expansion: the input looks rational, "
              "no certified quotient window")
        return 0
    except cfrac.DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    table = cfrac.convergents(cf)
    print(f"{'k':>3} {'a_k':>6} {'p_k':>14} {'q_k':>14}")
    for k, a in enumerate(cf.quotients, start=1):
        print(f"{k:>3} {a:>6} {table.p[k]:>14} {table.q[k]:>14}")
    note = " (window truncated)" if cf.truncated else ""
    print(f"constant-type window bound B = {cfrac.constant_type_bound(cf)}{note}")
    return 0


def cmd_dk(args) -> int:
    cfg = build_config(args)
    alpha_in = _parse_real(args.alpha)
    try:
        cf = cfrac.expand(alpha_in, 30, precision_bits=256)
    except cfrac.PrecisionExhausted:
        print("error: rational rotation number, no convergent denominators "
              "to test", file=sys.stderr)
        return 2
    except cfrac.DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    table = cfrac.convergents(cf)
    alpha = float(cf.value())
    if args.obs == "one":
        phi = circle.const_observable(1.0)
    elif args.obs in circle.OBSERVABLES:
        phi = circle.OBSERVABLES[args.obs]
    else:
        print(f"error: unknown observable {args.obs!r} "
              f"(use one of {sorted(circle.OBSERVABLES)} or 'one')", file=sys.stderr)
        return 2
    qs = sorted({q for q in table.q if 1 <= q <= args.q_max})
    if not qs:
        print("error: no convergent denominators below q_max", file=sys.stderr)
        return 2
    rng = np.random.default_rng(cfg.seed)
    starts = rng.random(args.n_points)
    var = phi.var()
    rows = []
    for x in starts:
        orbit = (x + alpha * np.arange(max(qs), dtype=np.float64)) % 1.0
        cs = np.cumsum(phi.fn(orbit))
        for q in qs:
            rows.append((q, float(x), abs(float(cs[q - 1]) - q * phi.mean), var))
    path = _out_path(cfg, args, "dk.csv")
    _write_csv(path, "q,x,residual,var", rows)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def cmd_logbound(args) -> int:
    cfg = build_config(args)
    series, fit = log_growth_experiment(
        cfg.flow_config(), OBSERVABLES[cfg.observable],
        TorusPoint(cfg.x0, cfg.y0), cfg.T_max, cfg.samples)
    rows = [(float(T), float(H), float(abs(H) / math.log1p(T)))
            for T, H in zip(series.T, series.H)]
    footer = [
        f"# K1 = {fit.k1!r}, K2 = {fit.k2!r}",
        f"# max_ratio = {fit.max_ratio!r}",
        f"# mean_used = {series.mean_used!r}, mean_error_est = "
        f"{series.mean_error_est!r}, flagged = {fit.mean_flagged}",
    ]
    path = _out_path(cfg, args, "logbound.csv")
    _write_csv(path, "T,H,ratio", rows, footer)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def cmd_basin(args) -> int:
    cfg = build_config(args)
    width = args.width if args.width is not None else cfg.grid
    height = args.height if args.height is not None else width
    img = basin_grid(cfg.dfa_params(), width, height,
                     max_iter=cfg.max_iter, capture_radius=cfg.capture_radius)
    path = _out_path(cfg, args, "basin.pgm")
    with open(path, "wb") as fh:
        fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
        fh.write(img.tobytes())
    n_att = int((img == 255).sum())
    print(f"wrote {path}: {width}x{height}, attracted {n_att}, "
          f"undecided {img.size - n_att}")
    return 0


def cmd_poincare(args) -> int:
    cfg = build_config(args)
    fcfg = cfg.flow_config()
    sec = cfg.section()
    rows = []
    for k in range(cfg.grid):
        theta = k / cfg.grid
        tp, u = first_return(fcfg, sec, theta, cfg.renormalized)
        rows.append((float(theta), float(tp), float(u)))
    data = build_return_map(fcfg, sec, cfg.renormalized)
    est, err = circle.rotation_number(data.R, cfg.n_iter)
    footer = [f"# rho = {est!r} +- {err!r} ({cfg.n_iter} iterations)"]
    path = _out_path(cfg, args, "poincare.csv")
    _write_csv(path, "theta,theta_next,u", rows, footer)
    print(f"wrote {len(rows)} rows to {path}; rho = {est:.8f} +- {err:.1e}")
    return 0


def cmd_orbit_order(args) -> int:
    cfg = build_config(args)
    rep = orbit_order_check(cfg.flow_config(), cfg.section(),
                            n_points=cfg.n_points, n_returns=cfg.n_returns,
                            renormalized=cfg.renormalized)
    print(f"rotation number in [{rep.rho_lo:.9f}, {rep.rho_hi:.9f}] "
          f"(width {rep.rho_width:.2e}, decoder consistent: {rep.decoder_consistent})")
    print(f"naive estimate {rep.naive_estimate:.9f}; rigid comparison alpha "
          f"{rep.alpha_used:.9f}")
    if rep.isomorphic:
        print(f"circular order of the first {rep.n_points} returns matches "
              f"the rigid rotation")
        return 0
    print(f"order mismatch at index {rep.first_mismatch}")
    return 1


def cmd_verify(args) -> int:
    cfg = build_config(args)
    indices = None
    if args.criteria:
        try:
            indices = sorted({int(tok) for tok in args.criteria.split(",")})
        except ValueError:
            raise ConfigError(f"bad criteria list: {args.criteria!r}")
    results = run_criteria(indices, report=print, step=cfg.step)
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} criteria passed")
    return 1 if n_fail else 0


# --------------------------------------------------------------- driver

def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", help="flat key=value configuration file")
    sp.add_argument("--out", help="output file path (overrides out_dir)")
    for key, kind in _FIELD_TYPES.items():
        flag = "--" + key.replace("_", "-")
        if kind == "bool":
            sp.add_argument(flag, default=None,
                            type=lambda s: _parse_value("renormalized", s),
                            metavar="BOOL")
        elif kind == "int":
            sp.add_argument(flag, default=None, type=int)
        elif kind == "float":
            sp.add_argument(flag, default=None, type=float)
        else:
            sp.add_argument(flag, default=None)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="torusflow",
        description="Numerical workbench for a slow-growth flow on the torus")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cfrac", help="continued-fraction table of a real")
    p.add_argument("value", help="a real in decimal or golden/silver/lambda")
    p.add_argument("max_terms", type=int, help="number of quotients to attempt")
    p.set_defaults(fn=cmd_cfrac)

    p = sub.add_parser("dk", help="rotation sums at convergent denominators")
    p.add_argument("alpha", help="rotation number (decimal or named constant)")
    p.add_argument("obs", metavar="observable", help="sin, cos, triangle, or one")
    p.add_argument("--q-max", type=int, default=10_000)
    _add_common(p)
    p.set_defaults(fn=cmd_dk)

    p = sub.add_parser("logbound", help="ergodic-integral growth experiment")
    _add_common(p)
    p.set_defaults(fn=cmd_logbound)

    p = sub.add_parser("basin", help="attracted/undecided graymap image")
    p.add_argument("--width", type=int, default=None)
    p.add_argument("--height", type=int, default=None)
    _add_common(p)
    p.set_defaults(fn=cmd_basin)

    p = sub.add_parser("poincare", help="section return map, time, and rho")
    _add_common(p)
    p.set_defaults(fn=cmd_poincare)

    p = sub.add_parser("orbit-order", help="orbit order vs rigid rotation")
    _add_common(p)
    p.set_defaults(fn=cmd_orbit_order)

    p = sub.add_parser("verify", help="run the acceptance criteria")
    p.add_argument("--criteria", help="comma-separated indices, default all")
    _add_common(p)
    p.set_defaults(fn=cmd_verify)
    return ap


def main(argv=None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
