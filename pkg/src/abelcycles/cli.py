"""Command line front end.

Exit codes: 0 success, 1 malformed input (bad JSON, bad flags), 2 domain
errors, 3 numerical failures (including realizations or checks that did not
certify).
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import chebyshev as cb
from .domain import AbelEquation, CaseTag, DomainError, NumericalError, parse_angle
from .melnikov import default_window, m1_combination, m2_direct, m2_structured, pick_branch
from .synthesis import DEFAULT_PQ, realize_table1, z1, z2_lower, z2_upper
from .validate import (
    DEFAULT_LADDER,
    count_limit_cycles,
    hilbert_table,
    match_cycles,
    melnikov_estimate,
    return_map,
    write_csv,
)

EXIT_OK, EXIT_INPUT, EXIT_DOMAIN, EXIT_NUMERIC = 0, 1, 2, 3
CASES = (CaseTag.GENERIC_LOW, CaseTag.PI, CaseTag.TWO_PI)


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise InputError(message)


@dataclass
class RunConfig:
    command: str
    eq_path: Optional[str] = None
    window: Optional[tuple] = None
    grid: int = 256
    eps: tuple = (1e-3,)
    output: Optional[str] = None
    json_path: Optional[str] = None
    seed: int = 0
    jobs: int = 1
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.grid < 16:
            raise DomainError("grid sizes must be >= 16")
        if self.window is not None and not self.window[1] > self.window[0]:
            raise DomainError(f"empty window {self.window}")
        if self.jobs < 1:
            raise DomainError("--jobs must be >= 1")


# ---------------------------------------------------------------------------
# io helpers


def load_equation(path: str) -> AbelEquation:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise InputError(f"{path}:1:1: expected a JSON object")
    return AbelEquation.from_json(data)


def _clean(obj):
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return _clean(obj.item())
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


def dump_json(obj, path: Optional[str], out=None) -> str:
    text = json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        (out or sys.stdout).write(text)
    return text


def dump_csv(header: Sequence[str], rows, path: Optional[str]) -> None:
    if not path:
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([f"{v:.17g}" if isinstance(v, (float, np.floating)) else v for v in row])
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


def parse_window(text: str) -> tuple:
    try:
        lo, hi = (float(x) for x in text.split(":"))
    except ValueError:
        raise InputError(f"window must look like lo:hi, got {text!r}") from None
    return lo, hi


def parse_floats(text: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise InputError(f"expected comma separated numbers, got {text!r}") from None


def _window(eq: AbelEquation, cfg: RunConfig, branch: Optional[str]) -> tuple:
    interval = pick_branch(eq, branch)
    lo, hi = cfg.window or default_window(interval)
    if not (interval[0] < lo < hi < interval[1]):
        raise DomainError(f"window {(lo, hi)} not inside the branch {interval}")
    return lo, hi


# ---------------------------------------------------------------------------
# subcommands


def cmd_m1(args, cfg: RunConfig) -> int:
    eq = load_equation(cfg.eq_path)
    lo, hi = _window(eq, cfg, args.branch)
    lc = m1_combination(eq, args.branch)
    grid = np.linspace(lo, hi, cfg.grid)
    vals = lc(grid)
    dump_csv(["rho", "M1"], zip(grid, vals), cfg.output)
    rep = cb.count_zeros(lc, (lo, hi), n0=cfg.grid)
    dump_json({"window": [lo, hi], "case": eq.case.value, "combination": lc.pruned().to_json(),
               "zeros": rep.to_json()}, cfg.json_path)
    return EXIT_OK


def cmd_m2(args, cfg: RunConfig) -> int:
    eq = load_equation(cfg.eq_path)
    lo, hi = _window(eq, cfg, args.branch)
    grid = np.linspace(lo, hi, cfg.grid)
    mode = args.mode or "direct"
    out = {"window": [lo, hi], "case": eq.case.value, "mode": mode}
    cols, header = [grid], ["rho"]
    direct = structured = None
    if mode in ("direct", "both"):
        direct = m2_direct(eq, grid)
        cols.append(direct)
        header.append("M2_direct")
    if mode in ("structured", "both"):
        res = m2_structured(eq, args.branch, window=(lo, hi))
        structured = res(grid)
        cols.append(structured)
        header.append("M2_structured")
        out["combination"] = res.form.to_json()
        out["fit_residual"] = res.residual
    if direct is not None and structured is not None:
        scale = float(np.max(np.abs(direct))) or 1.0
        out["max_relative_difference"] = float(np.max(np.abs(direct - structured)) / scale)
    f = res if structured is not None else (lambda r: m2_direct(eq, r))
    rep = cb.count_zeros(f, (lo, hi), n0=cfg.grid)
    out["zeros"] = rep.to_json()
    dump_csv(header, zip(*cols), cfg.output)
    dump_json(out, cfg.json_path)
    return EXIT_OK


def _family(args) -> dict:
    name = args.family
    split = parse_angle(args.split) if args.split is not None else math.pi / 2
    if name == "reference":
        return cb.reference_families()
    builders = {
        "theta-sine": lambda: cb.theta_sine_family(args.n),
        "theta-cos": lambda: cb.theta_cos_family(args.n),
        "cos-sine": lambda: cb.cos_sine_family(args.n),
        "mixed": lambda: cb.mixed_trig_family(args.n0, args.k0, args.l0),
        "two-interval": lambda: cb.two_interval_family(args.n, split, args.beta, args.branch),
        "one-sided-d": lambda: cb.one_sided_d_family(args.m, args.n, split, args.beta, args.branch),
        "two-sided-d": lambda: cb.two_sided_d_family(args.m, args.n, split, args.beta, args.branch),
        "power": lambda: cb.power_family(args.m, args.beta, args.branch),
    }
    return {name: builders[name]()}


def cmd_ect(args, cfg: RunConfig) -> int:
    out, ok = {}, True
    for name, fam in _family(args).items():
        rep = cb.verify_ect(fam, n_grid=cfg.grid, seed=cfg.seed)
        entry = {"size": fam.size, "wronskian": rep.to_json()}
        ok &= rep.is_ect
        if args.trials:
            bc = cb.cheb_bound_check(fam, trials=args.trials, seed=cfg.seed)
            entry["bound_check"] = bc.to_json()
            ok &= bc.passed
        out[name] = entry
    dump_json(out, cfg.json_path)
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_synth(args, cfg: RunConfig) -> int:
    kw = {}
    if cfg.window is not None:
        kw["window"] = cfg.window
    if args.theta1 is not None:
        kw["theta1"] = parse_angle(args.theta1)
    rec = realize_table1(args.m, CaseTag(args.case), order=args.order, p=args.p, q=args.q,
                         strict=False, **kw)
    dump_json(rec.to_json(), cfg.json_path)
    if cfg.output:
        grid = np.linspace(rec.window[0], rec.window[1], cfg.grid)
        dump_csv(["rho", "value"], zip(grid, rec.extended()(grid)), cfg.output)
    return EXIT_OK if rec.ok else EXIT_NUMERIC


def cmd_validate(args, cfg: RunConfig) -> int:
    eq = load_equation(cfg.eq_path)
    lo, hi = _window(eq, cfg, args.branch)
    out = {"window": [lo, hi], "case": eq.case.value}
    if args.rho is not None:
        m1 = float(m1_combination(eq)(np.array([args.rho]))[0])
        est = melnikov_estimate(eq, args.rho, cfg.eps if len(cfg.eps) >= 3 else
                                DEFAULT_LADDER, m1_closed=m1)
        out["melnikov"] = est.to_json()
    lc = m1_combination(eq)
    m1z = cb.count_zeros(lc, (lo, hi), n0=max(cfg.grid, 256))
    out["m1_zeros"] = [float(r) for r in m1z.roots]
    samples, runs = [], []
    for e in cfg.eps:
        samples += return_map(eq, e, np.linspace(lo, hi, cfg.grid), jobs=cfg.jobs)
        rep = count_limit_cycles(eq, e, (lo, hi), grid=max(16, min(cfg.grid, 128)), jobs=cfg.jobs)
        match = match_cycles(rep.fixed_points, m1z.roots, args.radius * e)
        runs.append({**rep.to_json(), "matches": [
            {"m1_zero": z, "fixed_point": f, "distance": d, "unique": u} for z, f, d, u in match]})
    out["runs"] = runs
    if cfg.output:
        write_csv(samples, cfg.output)
    dump_json(out, cfg.json_path)
    return EXIT_OK


def cmd_table(args, cfg: RunConfig) -> int:
    m = args.m
    if args.which == "Z1":
        vals = [z1(m, c) for c in CASES]
    elif args.which == "Z2":
        vals = [z2_lower(m, c) for c in CASES]
    elif args.which == "Z2max":
        vals = [z2_upper(m, c) for c in CASES]
    else:
        ests = [hilbert_table(m, c, args.p_odd, args.pq_positive) for c in CASES]
        vals = [e.value for e in ests]
    line = " / ".join(str(v) for v in vals)
    print(line)
    if cfg.json_path:
        body = {"which": args.which, "m": m, "cases": [c.value for c in CASES], "values": vals}
        if args.which == "H":
            body["notes"] = [e.note for e in ests]
        dump_json(body, cfg.json_path)
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="abelcycles", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, eq=True):
        if eq:
            p.add_argument("--eq", required=True, help="equation JSON file")
            p.add_argument("--branch", choices=("positive", "negative"))
        p.add_argument("--window", type=parse_window, help="lo:hi")
        p.add_argument("--grid", type=int, default=256)
        p.add_argument("--out", help="CSV output path")
        p.add_argument("--json", dest="json_path", help="JSON output path (default stdout)")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("m1", help="first order Melnikov function")
    common(p)
    p = sub.add_parser("m2", help="second order Melnikov function")
    common(p)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--structured", dest="mode", action="store_const", const="structured")
    g.add_argument("--direct", dest="mode", action="store_const", const="direct")
    g.add_argument("--both", dest="mode", action="store_const", const="both")
    p = sub.add_parser("ect", help="Wronskian and zero-bound checks for a kernel family")
    common(p, eq=False)
    p.set_defaults(grid=400)
    p.add_argument("--family", required=True, choices=(
        "reference", "theta-sine", "theta-cos", "cos-sine", "mixed", "two-interval",
        "one-sided-d", "two-sided-d", "power"))
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--n0", type=int, default=1)
    p.add_argument("--k0", type=int, default=2)
    p.add_argument("--l0", type=int, default=0)
    p.add_argument("--split", help="split angle in [0, pi] (pi-literals allowed)")
    p.add_argument("--beta", type=float, default=-0.5)
    p.add_argument("--branch", choices=("positive", "negative"), default="positive")
    p.add_argument("--trials", type=int, default=0, help="random zero-bound trials")
    p = sub.add_parser("synth", help="realize the lower-bound zero count for a case")
    common(p, eq=False)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--case", required=True, choices=[c.value for c in CaseTag])
    p.add_argument("--order", type=int, choices=(1, 2), default=1)
    p.add_argument("--theta1")
    p.add_argument("--p", type=int, default=DEFAULT_PQ[0])
    p.add_argument("--q", type=int, default=DEFAULT_PQ[1])
    p = sub.add_parser("validate", help="return map, fixed points, Melnikov from the flow")
    common(p)
    p.set_defaults(grid=64)
    p.add_argument("--eps", type=parse_floats, default=(1e-3,))
    p.add_argument("--rho", type=float, help="also extrapolate M1, M2 at this rho")
    p.add_argument("--radius", type=float, default=10.0, help="match radius in units of eps")
    p = sub.add_parser("table", help="zero counts and cycle lower bounds for the three switching cases")
    p.add_argument("--which", choices=("Z1", "Z2", "Z2max", "H"), required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--p-odd", action="store_true")
    p.add_argument("--pq-positive", action="store_true")
    p.add_argument("--json", dest="json_path")
    return ap


COMMANDS = {"m1": cmd_m1, "m2": cmd_m2, "ect": cmd_ect, "synth": cmd_synth,
            "validate": cmd_validate, "table": cmd_table}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        cfg = RunConfig(
            command=args.command,
            eq_path=getattr(args, "eq", None),
            window=getattr(args, "window", None),
            grid=getattr(args, "grid", 256),
            eps=getattr(args, "eps", (1e-3,)),
            output=getattr(args, "out", None),
            json_path=getattr(args, "json_path", None),
            seed=getattr(args, "seed", 0),
            jobs=getattr(args, "jobs", 1),
        )
        return COMMANDS[args.command](args, cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
