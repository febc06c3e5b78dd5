"""Command-line front end.

    ovalbowl solve  --a 0.2 --xi -500 [--nx 801 --nr 401] [--tau0 -5]
    ovalbowl sweep  --a-values 0.05:0.32:0.03,1/3 --xi -500
    ovalbowl verify SOLUTION [--tau0 -5:-9]
    ovalbowl diff   SOL1 SOL2 --tau0 -5
    ovalbowl bowl   --dimension 2 [--speed 0.7071] [--r-max 4] [--step 1e-3]

Options may also come from ``--config file.json`` (a flat object keyed by
option name, dashes or underscores); explicit flags win.  Exit status is 2
for rejected configuration, 1 for failed solves or checks, 0 otherwise.
The worker count for sweeps is read from OVALBOWL_WORKERS.
"""
import argparse
import csv
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import __version__
from .bowl_ode import integrate_bowl
from .errors import ConfigError, FormatError, OvalBowlError, RangeError
from .grid import A_MAX, A_MIN
from .level_profile import CAP
from .spectral import QUAD_ORDER, THETA, GaussQuadrature, find_shift
from .translator import (FORMAT_VERSION, NEWTON_TOL, DEPTH_RTOL, FamilyRecord, find_R_for_depth,
                         load_solution, save_solution, sweep_family, tip_curvatures)
from . import verification as V

log = logging.getLogger("ovalbowl")
WORKERS_ENV = "OVALBOWL_WORKERS"


@dataclass
class RunConfig:
    command: str = ""
    a: float = None
    a_values: list = None
    xi: float = None
    nx: int = 801
    nr: int = 401
    tol: float = DEPTH_RTOL
    newton_tol: float = NEWTON_TOL
    theta: float = THETA
    tau0: list = None
    quad_order: int = QUAD_ORDER
    cap: float = CAP
    out: str = "."
    tag: str = "sol"
    dimension: int = 2
    speed: float = None
    r_max: float = 4.0
    step: float = 1e-3
    inputs: list = field(default_factory=list)
    format_version: int = FORMAT_VERSION

    def validate(self):
        c = self.command
        if c in ("solve", "sweep"):
            if self.xi is None or not self.xi < 0:
                raise ConfigError(f"xi must be negative, got {self.xi}")
            if self.nx < 5 or self.nx % 2 == 0 or self.nr < 3:
                raise ConfigError(f"grid {self.nx}x{self.nr}: need odd nx >= 5 and nr >= 3")
            if not (self.tol > 0 and self.newton_tol > 0):
                raise ConfigError("tolerances must be positive")
            avals = [self.a] if c == "solve" else self.a_values
            if not avals or any(v is None for v in avals):
                raise ConfigError("a (solve) or a_values (sweep) required")
            for v in avals:
                if not (A_MIN <= v <= A_MAX + 1e-12):
                    raise ConfigError(f"a={v} outside [{A_MIN}, 1/3]")
            if c == "sweep" and any(b <= a for a, b in zip(avals, avals[1:])):
                raise ConfigError("a_values must be strictly increasing")
        if c == "bowl":
            if self.dimension not in (2, 3):
                raise ConfigError(f"dimension {self.dimension} not supported (2 or 3)")
            if self.speed is not None and not self.speed > 0:
                raise ConfigError("speed must be positive")
            if not (0 < self.step <= self.r_max / 100):
                raise ConfigError("need 0 < step <= r_max/100")
        if not (self.theta > 0 and 2 * self.theta < np.sqrt(2)):
            raise ConfigError(f"theta={self.theta}: need 0 < 2 theta < sqrt 2")
        if not (0 < self.cap < 1):
            raise ConfigError(f"cap={self.cap} outside (0, 1)")
        if self.quad_order < 40:
            raise ConfigError(f"quadrature order {self.quad_order} < 40")
        if self.tau0 is not None and any(not t < 0 for t in self.tau0):
            raise ConfigError("tau0 values must be negative")
        return self

    def to_dict(self):
        return {k: v for k, v in asdict(self).items()}


# ----------------------------------------------------------------- parsing

def parse_a_values(text):
    """'0.05:0.32:0.03,1/3' -> [0.05, 0.08, ..., 0.32, 0.3333...]."""
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if part.count(":") == 2:
            lo, hi, st = (float(Fraction(p)) for p in part.split(":"))
            n = int(np.floor((hi - lo) / st + 1e-9)) + 1
            out.extend(round(lo + i * st, 12) for i in range(n))
        else:
            out.append(float(Fraction(part)))
    return out


def parse_taus(text):
    """'-5' -> [-5]; '-5:-9' -> [-5,-6,...,-9]; '-5,-6.5' -> list; '' -> []."""
    if text is None:
        return None
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, (list, tuple)):
        return [float(v) for v in text]
    text = str(text).strip()
    if not text:
        return []
    out = []
    for part in text.split(","):
        if ":" in part.strip()[1:]:
            lo, hi = (float(p) for p in part.split(":") if p != "")
            stp = -1.0 if hi < lo else 1.0
            n = int(np.floor(abs(hi - lo) + 1e-9)) + 1
            out.extend(lo + stp * i for i in range(n))
        else:
            out.append(float(part))
    return out


def _a_number(text):
    return float(Fraction(text))


def build_parser():
    p = argparse.ArgumentParser(prog="ovalbowl", description="oval-bowl translator construction and checks")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON file with option values")
        sp.add_argument("--out", help="output directory")
        sp.add_argument("--theta", type=float)
        sp.add_argument("--tau0", help="tau0, a list -5,-6 or a ladder -5:-9")
        sp.add_argument("--quad-order", type=int)
        sp.add_argument("--cap", type=float, help="contamination cap fraction of |xi|")
        sp.add_argument("-v", "--verbose", action="store_true")

    def grid(sp):
        sp.add_argument("--xi", type=float)
        sp.add_argument("--nx", type=int)
        sp.add_argument("--nr", type=int)
        sp.add_argument("--tol", type=float, help="relative depth tolerance")
        sp.add_argument("--newton-tol", type=float)
        sp.add_argument("--tag")

    s = sub.add_parser("solve", help="solve at one (a, xi)")
    s.add_argument("--a", type=_a_number)
    grid(s)
    common(s)
    s = sub.add_parser("sweep", help="family sweep over a at fixed xi")
    s.add_argument("--a-values", help="e.g. 0.05:0.32:0.03,1/3")
    grid(s)
    common(s)
    s = sub.add_parser("verify", help="asymptotics ladder for a saved solution")
    s.add_argument("inputs", nargs=1)
    common(s)
    s = sub.add_parser("diff", help="difference diagnostics for two saved solutions")
    s.add_argument("inputs", nargs=2)
    common(s)
    s = sub.add_parser("bowl", help="radial bowl profile CSV")
    s.add_argument("--dimension", type=int)
    s.add_argument("--speed", type=float)
    s.add_argument("--r-max", type=float)
    s.add_argument("--step", type=float)
    common(s)
    return p


_SKIP = {"config", "verbose"}


def resolve_config(args):
    """Defaults < config file < explicit flags."""
    vals = {}
    if getattr(args, "config", None):
        try:
            raw = json.loads(Path(args.config).read_text())
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}")
        if not isinstance(raw, dict):
            raise ConfigError("config file must hold a JSON object")
        vals.update({k.replace("-", "_"): v for k, v in raw.items()})
    for k, v in vars(args).items():
        if k not in _SKIP and v is not None:
            vals[k] = v
    known = {f.name for f in fields(RunConfig)}
    unknown = set(vals) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        if "a_values" in vals:
            vals["a_values"] = parse_a_values(vals["a_values"])
        if "a" in vals and vals["a"] is not None:
            vals["a"] = _a_number(str(vals["a"]))
        if "tau0" in vals:
            vals["tau0"] = parse_taus(vals["tau0"])
        for k in ("nx", "nr", "quad_order", "dimension"):
            if k in vals:
                vals[k] = int(vals[k])
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"malformed option: {exc}")
    return RunConfig(**vals).validate()


# ---------------------------------------------------------------- commands

def _write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _csv_comment(cfg):
    return f"# ovalbowl format_version={FORMAT_VERSION} config={json.dumps(cfg.to_dict(), sort_keys=True)}\n"


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def cmd_solve(cfg):
    out = Path(cfg.out)
    sol = find_R_for_depth(cfg.a, cfg.xi, cfg.tol, cfg.nx, cfg.nr, newton_tol=cfg.newton_tol)
    stem = save_solution(sol, out, cfg.tag, extra=cfg.to_dict())
    k, lam = tip_curvatures(sol, check=False)
    print(f"{stem.name}: R={sol.R:.12g} xi={sol.xi:.12g} residual={sol.residual_inf:.3g} "
          f"iters={sol.newton_iters} k={k:.8f} lambda={lam:.8f}")
    result = {"config": cfg.to_dict(), "format_version": FORMAT_VERSION, "R": sol.R, "xi": sol.xi,
              "k": k, "lambda": lam, "flags": sol.flags, "spectral": []}
    status = 0
    q = GaussQuadrature(cfg.quad_order)
    for t0 in cfg.tau0 or []:
        try:
            _, rep = find_shift(sol, t0, theta=cfg.theta, q=q, cap=cfg.cap)
            print(rep.to_text())
            result["spectral"].append(rep.to_dict())
        except OvalBowlError as exc:
            print(f"tau0={t0}: {exc}", file=sys.stderr)
            result["spectral"].append({"tau0": t0, "status": str(exc)})
            status = 1
    _write_json(out / f"{stem.name}_report.json", result)
    return status


def _sweep_chunk(args):
    a_values, cfg = args
    return sweep_family(a_values, cfg.xi, cfg.nx, cfg.nr, cfg.tol,
                        analysis=V.sweep_analysis(cfg.tau0[0] if cfg.tau0 else None, cfg.theta, cfg.cap,
                                                  cfg.quad_order))


def cmd_sweep(cfg):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"family_xi{cfg.xi:.6g}.csv".replace("-", "m")
    cols = FamilyRecord.fields() + ["k_increasing"]
    workers = max(1, int(os.environ.get(WORKERS_ENV, "1") or 1))
    avals = sorted(cfg.a_values)
    fh = open(path, "w", newline="")
    fh.write(_csv_comment(cfg))
    wr = csv.writer(fh, lineterminator="\n")
    wr.writerow(cols)
    fh.flush()
    prev = [None]

    def emit(rec):
        ok = prev[0] is None or (np.isfinite(rec.k) and rec.k - prev[0] >= V.MONOTONE_BAND)
        prev[0] = rec.k
        row = asdict(rec)
        wr.writerow([_fmt(row[c]) for c in cols[:-1]] + [ok])
        fh.flush()

    try:
        if workers == 1 or len(avals) < 2:
            records = sweep_family(avals, cfg.xi, cfg.nx, cfg.nr, cfg.tol, on_record=emit,
                                   analysis=V.sweep_analysis(cfg.tau0[0] if cfg.tau0 else None,
                                                             cfg.theta, cfg.cap, cfg.quad_order))
        else:
            chunks = [list(c) for c in np.array_split(avals, min(workers, len(avals))) if len(c)]
            with ProcessPoolExecutor(len(chunks)) as ex:
                parts = list(ex.map(_sweep_chunk, [(c, cfg) for c in chunks]))
            records = [r for part in parts for r in part]
            for r in records:
                emit(r)
    finally:
        fh.close()
    mono, bad = V.check_monotone_tip_map(records)
    failed = [r for r in records if r.status != "ok"]
    print(f"{path}: {len(records)} rows, k strictly increasing: {mono}")
    for b in bad:
        print(f"  k not increasing between a={b[0]:.6g} (k={b[2]:.6g}) and a={b[1]:.6g} (k={b[3]:.6g})")
    for r in failed:
        print(f"  a={r.a:.6g}: {r.status}", file=sys.stderr)
    return 0 if mono and not failed else 1


def cmd_verify(cfg):
    sol = load_solution(cfg.inputs[0])
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    taus = cfg.tau0 if cfg.tau0 is not None else V.tau_ladder(sol.xi, cfg.cap)
    chk = V.CheckConfig(cap=cfg.cap, theta=cfg.theta, quad_order=cfg.quad_order)
    reps = V.asymptotics_ladder(sol, taus, chk)
    stem = Path(cfg.inputs[0]).name
    for ext in (".json", ".csv"):
        stem = stem[:-len(ext)] if stem.endswith(ext) else stem
    path = out / f"{stem}_asymptotics.csv"
    cols = V.AsymptoticsReport.fields()
    with open(path, "w", newline="") as fh:
        fh.write(_csv_comment(cfg))
        wr = csv.writer(fh, lineterminator="\n")
        wr.writerow(cols)
        for r in reps:
            d = asdict(r)
            wr.writerow([_fmt(d[c]) for c in cols])
    summary = V.ladder_summary(reps, sol.grid.spacing)
    _write_json(out / f"{stem}_asymptotics.json",
                {"config": cfg.to_dict(), "format_version": FORMAT_VERSION,
                 "reports": [r.to_dict() for r in reps], "summary": summary})
    print(",".join(cols))
    for r in reps:
        print(",".join(f"{v:.6g}" if isinstance(v, float) else str(v) for v in asdict(r).values()))
    w = max([len(k) for k in summary] + [1])
    for k, v in summary.items():
        print(f"{k:<{w}}  {v}")
    return 0 if all(summary.values()) else 1


def cmd_diff(cfg):
    s1, s2 = (load_solution(p) for p in cfg.inputs)
    t0 = (cfg.tau0 or [-5.0])[0]
    q = GaussQuadrature(cfg.quad_order)
    a1, _ = find_shift(s1, t0, theta=cfg.theta, q=q, cap=cfg.cap)
    a2, _ = find_shift(s2, t0, theta=cfg.theta, q=q, cap=cfg.cap)
    labels = tuple(Path(p).name for p in cfg.inputs)
    rep = V.diff_solutions(s1.shifted(a1), s2.shifted(a2), t0, cfg.theta, cfg.cap, cfg.quad_order,
                           labels=labels)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    d = rep.to_dict()
    d.update(config=cfg.to_dict(), format_version=FORMAT_VERSION, alpha1=a1, alpha2=a2)
    _write_json(out / "diff_report.json", d)
    with open(out / "diff_hausdorff.csv", "w", newline="") as fh:
        fh.write(_csv_comment(cfg))
        fh.write("h,D\n")
        for h, D in rep.hausdorff_by_h:
            fh.write(f"{h:.17g},{D:.17g}\n")
    for k, v in rep.to_dict().items():
        if k != "hausdorff_by_h":
            print(f"{k:<16} {v}")
    for h, D in rep.hausdorff_by_h:
        print(f"  h={h:.6g}  D={D:.6g}")
    return 0


def cmd_bowl(cfg):
    speed = cfg.speed if cfg.speed is not None else (2 ** -0.5 if cfg.dimension == 2 else 1.0)
    prof = integrate_bowl(cfg.dimension, speed, cfg.r_max, cfg.step)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"bowl_d{cfg.dimension}_c{speed:.6g}.csv"
    prof.to_csv(path)
    print(f"{path}: u''(0)={prof.curvature_at_axis():.12g} u(r_max)={prof.u_samples[-1]:.12g}")
    return 0


COMMANDS = {"solve": cmd_solve, "sweep": cmd_sweep, "verify": cmd_verify, "diff": cmd_diff,
            "bowl": cmd_bowl}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[cfg.command](cfg)
    except FormatError as exc:
        print(f"format error: {exc}", file=sys.stderr)
        return 2
    except (OvalBowlError, RangeError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
