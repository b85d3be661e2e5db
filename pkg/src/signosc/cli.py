"""Command-line interface: simulate, certify, find-nstar, mesh, verify, bounded.

All file output is atomic (write-to-temp + rename) and floats are printed
with 17 significant digits so runs are diffable.  Exit codes: 0 ok,
2 configuration error, 3 degenerate crossing, 4 certification failure.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
import tempfile

import numpy as np

from .forcing import load_forcing, PeriodicForcing
from .flow import State, evolve, DegenerateCrossing, DegenerateStart
from .torus import TorusSpec, build_mesh, contains_many
from .certify import (
    certify_torus, find_min_certified_n, verify_invariance,
    NonZeroAverageError, InconclusiveError,
)

EXIT_CONFIG = 2
EXIT_DEGENERATE = 3
EXIT_CERTIFICATION = 4

N_ENCLOSE_CAP = 64


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", text=True)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: str, obj) -> None:
    _atomic_write(path, json.dumps(_round_trip(obj), indent=2) + "\n")


def _round_trip(obj):
    """Normalize numbers so JSON output round-trips at 17 significant digits."""
    if isinstance(obj, dict):
        return {k: _round_trip(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_trip(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(f"{float(obj):.17g}")
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def _smallest_enclosing_certified(f: PeriodicForcing, phi, x, y,
                                  n_cap: int = N_ENCLOSE_CAP) -> int | None:
    """Smallest certified n whose torus holds every sampled point inside-or-on."""
    for n in range(1, n_cap + 1):
        spec = TorusSpec(n, f)
        if (contains_many(spec, phi, x, y) >= 0).all():
            try:
                if certify_torus(f, n).certified:
                    return n
            except NonZeroAverageError:
                return None
    return None


# ------------------------------------------------------------------ commands

def cmd_simulate(args) -> int:
    f = load_forcing(args.forcing)
    try:
        phi0, x0, y0 = (float(v) for v in args.start.split(","))
    except ValueError:
        print(f"error: bad --start {args.start!r}, expected 'phi,x,y'", file=sys.stderr)
        return EXIT_CONFIG
    step = args.sample_step if args.sample_step else f.period / 32.0
    tr = evolve(f, State(phi0, x0, y0), args.duration)
    rows = tr.sample(step)
    lines = ["t,phi,x,y,branch,is_event"]
    for t, phi, x, y, branch, is_event in rows:
        lines.append(",".join([_fmt(float(t)), _fmt(float(phi)), _fmt(float(x)),
                               _fmt(float(y)), str(int(branch)), str(int(is_event))]))
    _atomic_write(os.path.join(args.out, "orbit.csv"), "\n".join(lines) + "\n")

    sup = float(np.max(np.abs(rows[:, 2]) + np.abs(rows[:, 3])))
    n_enc = _smallest_enclosing_certified(f, rows[:, 1], rows[:, 2], rows[:, 3])
    summary = {
        "forcing": f.name,
        "start": [phi0, x0, y0],
        "duration": args.duration,
        "sample_step": step,
        "events": len(tr.events),
        "sup_abs_x_plus_abs_y": sup,
        "smallest_enclosing_certified_n": n_enc,
    }
    _write_json(os.path.join(args.out, "summary.json"), summary)
    if n_enc is None:
        print(f"no certified torus up to n={N_ENCLOSE_CAP} encloses the orbit",
              file=sys.stderr)
        return EXIT_CERTIFICATION
    print(f"simulate: sup(|x|+|y|) = {_fmt(sup)}, enclosed by torus n = {n_enc}")
    return 0


def cmd_certify(args) -> int:
    f = load_forcing(args.forcing)
    try:
        rep = certify_torus(f, args.n)
    except InconclusiveError as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATION
    doc = rep.to_dict()
    doc["timestamp"] = datetime.datetime.now(datetime.timezone.utc).isoformat()
    _write_json(os.path.join(args.out, "certify.json"), doc)
    print(f"certify: n={args.n} certified={rep.certified} "
          f"(cond1 margin {_fmt(rep.cond1.margin)}, cond2 {rep.cond2_status})")
    return 0 if rep.certified else EXIT_CERTIFICATION


def cmd_find_nstar(args) -> int:
    f = load_forcing(args.forcing)
    n_min, ladder = find_min_certified_n(f, args.n_max)
    doc = {"forcing": f.name, "n_max": args.n_max,
           "n_min_certified": n_min, "ladder_checked": ladder}
    _write_json(os.path.join(args.out, "nstar.json"), doc)
    if n_min is None:
        print(f"no certified n up to {args.n_max}", file=sys.stderr)
        return EXIT_CERTIFICATION
    print(f"find-nstar: smallest certified n = {n_min} (ladder checked: {ladder})")
    return 0


def cmd_mesh(args) -> int:
    f = load_forcing(args.forcing)
    try:
        n_phi, n_y = (int(v) for v in args.resolution.split("x"))
    except ValueError:
        print(f"error: bad --resolution {args.resolution!r}, expected 'NxM'",
              file=sys.stderr)
        return EXIT_CONFIG
    mesh = build_mesh(TorusSpec(args.n, f), n_phi, n_y)
    if args.format == "tri":
        lines = []
        for tri in mesh.triangles():
            lines.append(" ".join(_fmt(c) for v in tri for c in v))
        _atomic_write(os.path.join(args.out, "mesh.tri"), "\n".join(lines) + "\n")
    else:
        lines = ["sign,i,j,phi,x,y"]
        for sign, i, j, phi, x, y in mesh.rows():
            lines.append(",".join([str(sign), str(i), str(j),
                                   _fmt(phi), _fmt(x), _fmt(y)]))
        _atomic_write(os.path.join(args.out, "mesh.csv"), "\n".join(lines) + "\n")
    print(f"mesh: n={args.n} resolution {n_phi}x{n_y} written")
    return 0


def cmd_verify(args) -> int:
    f = load_forcing(args.forcing)
    rep = certify_torus(f, args.n)
    if not rep.certified:
        print(f"n={args.n} is not certified; verification skipped", file=sys.stderr)
        return EXIT_CERTIFICATION
    inv = verify_invariance(f, args.n, args.n_phi)
    _write_json(os.path.join(args.out, "invariance.json"), inv.to_dict())
    print(f"verify: n={args.n} rel1 violations {inv.rel1_violations}, "
          f"rel2 defect {_fmt(inv.rel2_max_defect)}, "
          f"return defect {_fmt(inv.return_max_defect)}")
    return 0 if inv.passed else EXIT_CERTIFICATION


def cmd_bounded(args) -> int:
    f = load_forcing(args.forcing)
    rng = np.random.default_rng(args.seed)
    T = f.period
    results = []
    ok = True
    for i in range(args.starts):
        phi0 = float(rng.uniform(0.0, T))
        x0 = float(rng.uniform(-args.box, args.box))
        y0 = float(rng.uniform(-args.box, args.box))
        if abs(x0) < 1e-6 and abs(y0) < 1e-3:
            x0 = args.box / 2.0  # avoid a degenerate start at the origin
        duration = args.periods * T
        tr = evolve(f, State(phi0, x0, y0), duration)
        rows = tr.sample(T / 8.0)
        phi, x, y = rows[:, 1], rows[:, 2], rows[:, 3]
        n_enc = _smallest_enclosing_certified(f, phi[:1], x[:1], y[:1])
        if n_enc is None:
            ok = False
            results.append({"start": [phi0, x0, y0], "enclosing_n": None})
            continue
        spec = TorusSpec(n_enc, f)
        outside = int((contains_many(spec, phi, x, y) < 0).sum())
        g = np.abs(x) + np.abs(y)
        # running sup at checkpoints every 2nT beyond the first window
        window = 2.0 * n_enc * T
        t_samp = rows[:, 0]
        checkpoints = np.arange(window, duration + window / 2.0, window)
        running = np.maximum.accumulate(g)
        idx = np.clip(np.searchsorted(t_samp, checkpoints, side="right") - 1,
                      0, len(running) - 1)
        sups = running[idx]
        sup_flat = float(sups.max() - sups[0]) if len(sups) else 0.0
        results.append({
            "start": [phi0, x0, y0],
            "enclosing_n": n_enc,
            "samples_outside": outside,
            "sup_abs_x_plus_abs_y": float(np.max(g)),
            "sup_growth_after_first_window": sup_flat,
        })
        if outside > 0:
            ok = False
    doc = {"forcing": f.name, "starts": args.starts, "periods": args.periods,
           "seed": args.seed, "results": results}
    _write_json(os.path.join(args.out, "bounded.json"), doc)
    print(f"bounded: {args.starts} starts, {args.periods} periods each, "
          f"all enclosed: {ok}")
    return 0 if ok else EXIT_CERTIFICATION


# ------------------------------------------------------------------ entry point

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="signosc",
        description="Simulator and invariant-torus certifier for x'' + sign(x) = p(t)")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--forcing", required=True, help="forcing config JSON")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--format", choices=["csv", "json", "tri"], default="csv")

    p = sub.add_parser("simulate", help="integrate one orbit and export it")
    common(p)
    p.add_argument("--start", default="0,0,1", help="initial state 'phi,x,y'")
    p.add_argument("--duration", type=float, required=True)
    p.add_argument("--sample-step", type=float, default=None)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("certify", help="certify the index-n torus")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("find-nstar", help="search the smallest certified index")
    common(p)
    p.add_argument("--n-max", type=int, default=64)
    p.set_defaults(func=cmd_find_nstar)

    p = sub.add_parser("mesh", help="export the torus surface mesh")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--resolution", default="64x33")
    p.set_defaults(func=cmd_mesh)

    p = sub.add_parser("verify", help="flow-level invariance verification")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--n-phi", type=int, default=64)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bounded", help="long-horizon boundedness experiment")
    common(p)
    p.add_argument("--starts", type=int, default=10)
    p.add_argument("--periods", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--box", type=float, default=2.0,
                   help="half-width of the random start box in (x, y)")
    p.set_defaults(func=cmd_bounded)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    # the specific failures first: both are ValueError subclasses
    except (DegenerateCrossing, DegenerateStart) as exc:
        print(f"degenerate crossing: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except NonZeroAverageError as exc:
        print(f"certification failure: {exc}", file=sys.stderr)
        return EXIT_CERTIFICATION
    except (FileNotFoundError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
