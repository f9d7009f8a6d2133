"""Command-line front end: solve, sweep, verify.

Exit codes: 0 success, 2 configuration / input error, 3 solver failure,
4 certificate failure, 5 verification failure or incompatible state.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (
    ConfigError,
    IncompatibleState,
    LinearSolveFailed,
    MaxIterations,
    MemsPlateError,
    StalledDescent,
)
from .hermite import PlateState
from .io_files import (
    ConfigBundle,
    parse_config,
    potential_meta,
    read_plate_csv,
    sha256_of,
    write_contact_csv,
    write_force_csv,
    write_json,
    write_plate_csv,
    write_potential_csv,
    write_trajectory,
)
from .minimize import SolveContext, continuation_pipeline, make_context, minimize_Ek
from .verify import check_coincidence_interval, run_suite

log = logging.getLogger("memsplate")


def _setup_logging():
    level = os.environ.get("MEMS_LOG_LEVEL", "info").strip().lower()
    mapping = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    logging.basicConfig(
        level=mapping.get(level, logging.INFO),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _context_from_bundle(bundle: ConfigBundle) -> SolveContext:
    return make_context(
        bundle.params,
        n_elems=bundle.n_elems,
        field_grid=bundle.field_grid,
        settings=bundle.settings,
    )


def _manifest(bundle: ConfigBundle, ctx: SolveContext, outdir: Path, files: list, timings: dict) -> dict:
    return {
        "tool": "memsplate",
        "version": __version__,
        "config": bundle.snapshot,
        "constants": ctx.constants.as_dict(),
        "grid": {
            "n_elems": ctx.plate.n_elems,
            "n_x": ctx.field_grid.n_x,
            "n_z1": ctx.field_grid.n_z1,
            "n_z2": ctx.field_grid.n_z2,
        },
        "outputs": {
            name: {"path": name, "sha256": sha256_of(outdir / name)} for name in sorted(files)
        },
        "timings": timings,
    }


def _write_state_outputs(ctx: SolveContext, u, outdir: Path) -> list:
    """u.csv, psi.csv, g.csv, contact.csv, psi_meta.json for one state."""
    from .forces import compute_force

    pf = ctx.field.solve(u)
    gprof = compute_force(u, pf, ctx.family, ctx.p)
    write_plate_csv(outdir / "u.csv", u)
    write_potential_csv(outdir / "psi.csv", pf, ctx.p.H)
    write_contact_csv(outdir / "contact.csv", pf)
    write_json(outdir / "psi_meta.json", potential_meta(pf))
    write_force_csv(outdir / "g.csv", gprof)
    return ["u.csv", "psi.csv", "contact.csv", "psi_meta.json", "g.csv"]


def cmd_solve(args) -> int:
    t_start = time.time()
    try:
        bundle = parse_config(args.config)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    ctx = _context_from_bundle(bundle)

    t_solve = time.time()
    try:
        u, report, certificate = continuation_pipeline(ctx)
    except (StalledDescent, MaxIterations) as exc:
        log.error("solver failed: %s", exc)
        if exc.state is not None:
            write_plate_csv(outdir / "u.csv", exc.state)
        return 3
    except (LinearSolveFailed, MemsPlateError) as exc:
        log.error("solver failed: %s", exc)
        return 3
    t_solved = time.time()

    files = _write_state_outputs(ctx, u, outdir)
    write_json(outdir / "energy.json", report.as_dict())
    write_json(outdir / "certificate.json", certificate)
    write_trajectory(outdir / "trajectory.jsonl", report.trajectory)
    files += ["energy.json", "certificate.json", "trajectory.jsonl"]

    timings = {"total_s": time.time() - t_start, "solve_s": t_solved - t_solve}
    write_json(outdir / "manifest.json", _manifest(bundle, ctx, outdir, files, timings))
    log.info(
        "solved: E=%.8g vi=%.3e (tol %.1e) iterations=%d",
        report.E, report.vi_residual, report.tol_vi, report.iterations,
    )

    cert_ok = (
        certificate["converged"]
        and certificate["bound_pass"]
        and not certificate["reg_active"]
        and certificate["lower_bound_pass"]
        and certificate["energy_below_rest"]
    )
    return 0 if cert_ok else 4


def _sweep_point(payload):
    """One sweep voltage, cold-started (used by the process pool)."""
    config_path, V = payload
    bundle = parse_config(config_path).with_V(V)
    ctx = _context_from_bundle(bundle)
    return _run_sweep_point(ctx, None, V)


def _run_sweep_point(ctx: SolveContext, warm: PlateState, V: float) -> dict:
    u0 = warm if warm is not None else ctx.zero_state()
    k = max(ctx.constants.kappa0, ctx.p.H)
    status = "converged"
    try:
        u, report = minimize_Ek(u0, k, ctx)
    except (StalledDescent, MaxIterations) as exc:
        u, report = exc.state, exc.report
        status = type(exc).__name__
    coin = check_coincidence_interval(u, ctx.p.H, constant_potential=ctx.family.constant_potential)
    return {
        "V": V,
        "status": status,
        "E": report.E, "E_m": report.E_m, "E_e": report.E_e,
        "min_u": float(u.values.min()),
        "contact_measure": coin.n_contact * ctx.plate.h,
        "is_interval": coin.is_interval,
        "vi_residual": report.vi_residual,
        "dofs": u.dofs.tolist(),
    }


def cmd_sweep(args) -> int:
    t_start = time.time()
    try:
        bundle = parse_config(args.config)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    if args.vmin > args.vmax or args.steps < 1:
        log.error("need vmin <= vmax and steps >= 1")
        return 2
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    volts = np.linspace(args.vmin, args.vmax, args.steps)

    rows = []
    if args.workers > 1:
        payloads = [(args.config, float(V)) for V in volts]
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_point, payloads))
    else:
        warm = None
        for V in volts:
            ctx = _context_from_bundle(bundle.with_V(float(V)))
            row = _run_sweep_point(ctx, warm, float(V))
            warm = PlateState(ctx.plate, np.array(row["dofs"]))
            rows.append(row)
            log.info(
                "V=%.4g: %s min_u=%.5f contact=%.4g", V, row["status"],
                row["min_u"], row["contact_measure"],
            )

    files = []
    import csv as _csv

    with open(outdir / "sweep.csv", "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["V", "E", "E_m", "E_e", "min_u", "contact_measure", "is_interval"])
        for row in sorted(rows, key=lambda r: r["V"]):
            w.writerow([
                repr(row["V"]), repr(row["E"]), repr(row["E_m"]), repr(row["E_e"]),
                repr(row["min_u"]), repr(row["contact_measure"]), int(row["is_interval"]),
            ])
    files.append("sweep.csv")

    for row in rows:
        sub = outdir / f"V_{row['V']:.6g}"
        sub.mkdir(exist_ok=True)
        ctx = _context_from_bundle(bundle.with_V(row["V"]))
        u = PlateState(ctx.plate, np.array(row["dofs"]))
        write_plate_csv(sub / "u.csv", u)
        write_json(sub / "point.json", {k: v for k, v in row.items() if k != "dofs"})

    ctx = _context_from_bundle(bundle)
    timings = {"total_s": time.time() - t_start}
    write_json(outdir / "manifest.json", _manifest(bundle, ctx, outdir, files, timings))

    n_fail = sum(1 for r in rows if r["status"] != "converged")
    log.info("sweep finished: %d/%d points converged", len(rows) - n_fail, len(rows))
    return 0 if n_fail < len(rows) else 3


def cmd_verify(args) -> int:
    try:
        bundle = parse_config(args.config)
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    ctx = _context_from_bundle(bundle)
    try:
        u = read_plate_csv(args.state, ctx.plate)
    except IncompatibleState as exc:
        log.error("state incompatible with config: %s", exc)
        return 5
    except OSError as exc:
        log.error("cannot read state: %s", exc)
        return 2

    report = run_suite(u, ctx)
    report["state"] = str(args.state)
    write_json(outdir / "verify_report.json", report)
    for chk in report["checks"]:
        log.info(
            "%-22s %s%s", chk["name"], "pass" if chk.get("pass") else "FAIL",
            "" if chk["mandatory"] else " (advisory)",
        )
    return 0 if report["mandatory_pass"] else 5


def main(argv=None) -> int:
    _setup_logging()
    ap = argparse.ArgumentParser(
        prog="memsplate",
        description="Equilibrium deformations of an electrostatically actuated "
        "plate over a dielectric-coated ground electrode.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="minimize the energy and write the state + certificate")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--out", required=True)
    p_solve.set_defaults(fn=cmd_solve)

    p_sweep = sub.add_parser("sweep", help="solve over a voltage range with warm starts")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--vmin", type=float, required=True)
    p_sweep.add_argument("--vmax", type=float, required=True)
    p_sweep.add_argument("--steps", type=int, required=True)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.set_defaults(fn=cmd_sweep)

    p_verify = sub.add_parser("verify", help="run the verification battery on a stored state")
    p_verify.add_argument("--config", required=True)
    p_verify.add_argument("--state", required=True)
    p_verify.add_argument("--out", required=True)
    p_verify.set_defaults(fn=cmd_verify)

    args = ap.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
