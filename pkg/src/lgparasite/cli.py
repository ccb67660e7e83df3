"""Command-line front end.

    lgparasite classify -c fig2.toml
    lgparasite basin -c fig2.toml --resolution 200x200 --out results/
    lgparasite bifurcate -c fig3.toml --sweep bS1=2:20:0.5

Exit status is 0 on success, 1 when a model operation rejects its input and
2 for configuration or usage errors.  Non-convergence is reported in the
output files, not through the exit status.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import analysis, experiments, reduction
from .config import Config, load_config, parse_axis, parse_sweep
from .errors import ConfigError, DomainError
from .model import full_step

COMMANDS = ("step", "simulate", "reduce", "equilibria", "classify", "basin",
            "bifurcate", "converge", "correspond")


def _fmt(x):
    return format(float(x), ".17g")


def write_atomic(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _json(obj):
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _reduced_params(cfg: Config, nu):
    if nu is not None:
        return reduction.reduce_params_at_nu(cfg.demography, nu)
    return reduction.reduce_params(cfg.demography, cfg.disease)


def _x0(cfg, length=None):
    x0 = cfg.run.x0
    if x0 is None:
        raise ConfigError("this command needs x0 in [run]")
    if length is not None and len(x0) != length:
        raise ConfigError(f"this command needs x0 with {length} entries")
    return x0


def cmd_step(cfg, args, out):
    state = full_step(cfg.demography, cfg.disease, cfg.run.k, _x0(cfg, 4))
    report = {"x0": list(cfg.run.x0), "k": cfg.run.k, "state": list(state)}
    write_atomic(out / "step.json", _json(report))
    print(_json(report), end="")


def cmd_simulate(cfg, args, out):
    x0 = _x0(cfg)
    if len(x0) == 2:
        rp = _reduced_params(cfg, args.nu)
        orbit = experiments.simulate_orbit(rp, x0, cfg.run.max_iter, cfg.run.tol)
        rows = [(t, *s) for t, s in zip(orbit.sample_index, orbit.samples)]
        write_atomic(out / "orbit.csv", _csv(["t", "n1", "n2"], rows))
        report = {"model": "reduced", "limit": None if orbit.limit is None else list(orbit.limit),
                  "iterations": orbit.iterations, "monotone_from": orbit.monotone_from}
    else:
        samples, index, limit = experiments.simulate_full_orbit(
            cfg.demography, cfg.disease, cfg.run.k, x0, cfg.run.max_iter, cfg.run.tol)
        rows = [(t, *s) for t, s in zip(index, samples)]
        write_atomic(out / "orbit.csv", _csv(["t", "nS1", "nI1", "nS2", "nI2"], rows))
        report = {"model": "full", "k": cfg.run.k,
                  "limit": None if limit is None else list(limit), "iterations": index[-1]}
    write_atomic(out / "orbit.json", _json(report))
    print(_json(report), end="")


def cmd_reduce(cfg, args, out):
    rp = _reduced_params(cfg, args.nu)
    report = rp.as_dict()
    report["R0"] = 1 / rp.nu
    write_atomic(out / "reduce.json", _json(report))
    print(_json(report), end="")


def cmd_equilibria(cfg, args, out):
    eqs = analysis.find_equilibria(_reduced_params(cfg, args.nu))
    report = {"equilibria": [e.as_dict() for e in eqs], "nongeneric": eqs.nongeneric,
              "notes": list(eqs.notes)}
    rows = [(e.name, e.kind.value, *e.location, *(abs(z) for z in e.eigenvalues),
             e.stability.value) for e in eqs]
    write_atomic(out / "equilibria.json", _json(report))
    write_atomic(out / "equilibria.csv", _csv(
        ["name", "kind", "n1", "n2", "abs_eig1", "abs_eig2", "stability"], rows))
    print(_json(report), end="")


def cmd_classify(cfg, args, out):
    result = analysis.classify(_reduced_params(cfg, args.nu))
    write_atomic(out / "classify.json", _json(result.as_dict()))
    print(result.label.value)


def _pgm(labels, levels):
    ny, nx = labels.shape
    lines = ["P2", f"{nx} {ny}", "255"]
    for row in labels[::-1]:
        lines.append(" ".join(str(levels[int(v)]) for v in row))
    return "\n".join(lines) + "\n"


def cmd_basin(cfg, args, out):
    rp = _reduced_params(cfg, args.nu)
    resolution = args.resolution or cfg.run.resolution
    grid = experiments.basin_grid(rp, resolution, cfg.run.bounds, cfg.run.max_iter,
                                  cfg.run.tol, workers=args.threads)
    n = len(grid.equilibria)
    levels = {experiments.UNRESOLVED: 0}
    levels.update({k: round(255 * (k + 1) / n) for k in range(n)})
    write_atomic(out / "basin.pgm", _pgm(grid.labels, levels))
    xs, ys = grid.cell_centres()
    names = {k: e.name for k, e in enumerate(grid.equilibria)}
    names[experiments.UNRESOLVED] = "unresolved"
    rows = [(float(xs[c]), float(ys[r]), int(grid.labels[r, c]), names[int(grid.labels[r, c])])
            for r in range(len(ys)) for c in range(len(xs))]
    write_atomic(out / "basin.csv", _csv(["n1", "n2", "label", "equilibrium"], rows))
    report = {
        "bounds": [list(b) for b in grid.bounds],
        "resolution": list(grid.resolution),
        "counts": grid.counts(),
        "gray_levels": {names[k]: v for k, v in levels.items()},
        "equilibria": [e.as_dict() for e in grid.equilibria],
        "case": analysis.classify_case(rp).value,
    }
    write_atomic(out / "basin.json", _json(report))
    print(_json(report["counts"]), end="")


def cmd_bifurcate(cfg, args, out):
    param, values = parse_sweep(args.sweep or cfg.run.sweep)
    nu_axis = parse_axis(cfg.run.nu_axis)
    scan = experiments.bifurcation_scan(cfg.demography, nu_axis, param, values,
                                        workers=args.threads)
    rows = [(scan.nu_axis[a], scan.p_axis[b], scan.labels[a][b].value)
            for b in range(len(scan.p_axis)) for a in range(len(scan.nu_axis))]
    write_atomic(out / "bifurcation.csv", _csv(["nu", param, "case"], rows))
    columns = []
    for b, value in enumerate(scan.p_axis):
        cases, transitions = experiments.case_sequence(scan.column(b), scan.nu_axis)
        columns.append({param: value, "cases": [c.value for c in cases],
                        "transitions_nu": transitions})
    report = {"param": param, "nu_axis": list(scan.nu_axis), "p_axis": list(scan.p_axis),
              "columns": columns}
    write_atomic(out / "bifurcation.json", _json(report))
    for col in columns:
        print(f"{param}={_fmt(col[param])}: {' '.join(col['cases'])}")


def cmd_converge(cfg, args, out):
    rng = np.random.default_rng(cfg.run.seed)
    grid = experiments.random_interior_states(rng, cfg.run.n_states,
                                              np.full(4, cfg.run.max_total / 2))
    report = reduction.certify_convergence(cfg.disease, grid, cfg.run.k_max)
    write_atomic(out / "converge.json", _json(report.as_dict()))
    write_atomic(out / "converge.csv", _csv(
        ["k", "sup_error"], zip(report.k_values, report.sup_errors)))
    print(f"fitted ratio {_fmt(report.fitted_ratio)}, bound {_fmt(report.bound_c)}")


def cmd_correspond(cfg, args, out):
    if cfg.run.x0 is not None and len(cfg.run.x0) == 4:
        starts = np.array([cfg.run.x0])
    else:
        rng = np.random.default_rng(cfg.run.seed)
        rp = _reduced_params(cfg, None)
        box = np.repeat(rp.trapping_box() / 2, 2)
        starts = experiments.random_interior_states(rng, cfg.run.n_starts, box)
    tol = args.tol if args.tol is not None else cfg.run.correspondence_tol
    reports = experiments.correspondence_check(cfg.demography, cfg.disease, cfg.run.k,
                                               starts, tol, cfg.run.max_iter)
    write_atomic(out / "correspond.json", _json({"k": cfg.run.k, "tol": tol,
                                                 "reports": [r.as_dict() for r in reports]}))
    def cell(v):
        return "" if v is None else v
    rows = [(*r.x0, cell(r.discrepancy), cell(r.raw_discrepancy),
             cell(r.totals_discrepancy), cell(r.passed)) for r in reports]
    write_atomic(out / "correspond.csv", _csv(
        ["nS1", "nI1", "nS2", "nI2", "discrepancy", "raw_discrepancy",
         "totals_discrepancy", "passed"], rows))
    worst = max((r.discrepancy for r in reports if r.discrepancy is not None), default=None)
    print(f"{sum(r.passed is True for r in reports)}/{len(reports)} within {tol}; "
          f"worst discrepancy {worst}")


HANDLERS = {name: globals()[f"cmd_{name}"] for name in COMMANDS}


def _resolution(text):
    try:
        nx, ny = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected NxM, got {text!r}") from None
    if nx <= 0 or ny <= 0:
        raise argparse.ArgumentTypeError("resolution must be positive")
    return nx, ny


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lgparasite",
        description="Two competing species sharing a parasite: full and reduced models.")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("-c", "--config", required=True, help="TOML config file")
    parser.add_argument("--out", default=".", help="directory for output files")
    parser.add_argument("--resolution", type=_resolution, help="basin grid size NxM")
    parser.add_argument("--k", type=int, help="disease episodes per demographic step")
    parser.add_argument("--nu", type=float, help="use this nu instead of gamma/beta")
    parser.add_argument("--sweep", help="PARAM=lo:hi:step for bifurcate")
    parser.add_argument("--tol", type=float, help="tolerance override")
    parser.add_argument("--threads", type=int, default=1, help="worker processes")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        run = cfg.run
        if args.k is not None:
            run = replace(run, k=args.k)
        if args.tol is not None and args.command in ("simulate",):
            run = replace(run, tol=args.tol)
        cfg = replace(cfg, run=run)
        status = HANDLERS[args.command](cfg, args, Path(args.out))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return status or 0


if __name__ == "__main__":
    sys.exit(main())
