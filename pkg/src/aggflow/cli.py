"""Command line interface.

Exit codes: 0 success, 1 configuration, usage or file error, 2 solver
failure, 3 invariant failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import RunConfig, load_config
from .errors import ConfigError, IoError, SolverError
from .io import (DIAGNOSTIC_COLUMNS, CsvStream, diagnostics_row, energy_row, write_manifest,
                 write_snapshot, write_vtk)
from .model import Variant
from .stepper import CSV_COLUMNS, audit_energy_inequality, initial_report, initial_state, iterate
from .studies import compare_matched, temporal_convergence
from .verify import SUITES

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_INVARIANT = 0, 1, 2, 3

log = logging.getLogger("aggflow")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="aggflow", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"aggflow {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    r = sub.add_parser("run", help="run a scenario and write energy CSV, snapshots, manifest")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides output.dir)")
    r.add_argument("--steps", type=int, help="number of steps (overrides stepper.steps)")

    v = sub.add_parser("verify", help="run invariant suites")
    v.add_argument("--suite", choices=[*SUITES, "all"], default="all")

    c = sub.add_parser("convergence", help="temporal self-convergence study")
    c.add_argument("config")
    c.add_argument("--levels", type=int, default=3,
                   help="number of step sizes h, h/2, ... compared with the finest")
    c.add_argument("--ref-refine", type=int, default=1,
                   help="reference uses the finest h divided by this factor")

    m = sub.add_parser("compare-matched", help="equal-density AGG run vs the Model-H path")
    m.add_argument("config")
    m.add_argument("--steps", type=int)
    m.add_argument("--tol", type=float, default=1e-12)
    return ap


def _cmd_run(cfg: RunConfig, out: Path, steps: int) -> int:
    grid, params, scfg = cfg.grid(), cfg.params(), cfg.stepper()
    scen = cfg.scenario()
    state = initial_state(grid, params, scen.initial_phi(), scen.initial_velocity())
    out.mkdir(parents=True, exist_ok=True)
    echo = cfg.echo()
    (out / "config.resolved.json").write_text(echo)
    snap_every = cfg["output.snapshot_every"]
    init = initial_report(grid, params, state)
    E0, m0 = init.E_tot, init.mass
    failures: list[str] = []
    energy = CsvStream(out / "energy.csv", CSV_COLUMNS)
    diag = CsvStream(out / "diagnostics.csv", DIAGNOSTIC_COLUMNS) if cfg["output.diagnostics"] else None
    energy.write(energy_row(init))
    if diag:
        diag.write(diagnostics_row(init))
    write_snapshot(grid, state, out / "snapshots" / "step_000000")
    done, h = 0, scfg.h
    prev_E = E0
    t0 = time.perf_counter()
    try:
        for state, rep in iterate(grid, params, state, scfg, steps):
            done, h = state.step, rep.h
            energy.write(energy_row(rep))
            if diag:
                diag.write(diagnostics_row(rep))
            audit = audit_energy_inequality(rep, scfg, E0)
            if not audit.passed:
                failures.append(f"step {rep.step}: energy audit residual {audit.residual:.3e}")
            if rep.E_tot > prev_E + 1e-12 * abs(E0):
                failures.append(f"step {rep.step}: E_tot increased by {rep.E_tot - prev_E:.3e}")
            if abs(rep.mass - m0) > 1e-10 * grid.area:
                failures.append(f"step {rep.step}: mass drift {rep.mass - m0:.3e}")
            if not all(np.isfinite(x) for x in rep.diagnostics.values()):
                failures.append(f"step {rep.step}: non-finite diagnostics")
            prev_E = rep.E_tot
            if snap_every and state.step % snap_every == 0:
                write_snapshot(grid, state, out / "snapshots" / f"step_{state.step:06d}")
            log.info("step %d t=%.6g E=%.12g outer=%d newton=%d", rep.step, rep.time, rep.E_tot,
                     rep.outer_iters, rep.newton_iters)
    finally:
        energy.close()
        if diag:
            diag.close()
        write_snapshot(grid, state, out / "snapshots" / "final")
        if cfg["output.vtk"]:
            write_vtk(grid, state, out / "final.vtk")
        write_manifest(out / "manifest.json", echo, cfg["scenario.seed"],
                       {"steps_requested": steps, "steps_completed": done, "h_initial": scfg.h,
                        "h_final": h, "wall_seconds": round(time.perf_counter() - t0, 3),
                        "invariant_failures": failures})
    print(f"{done} steps, t = {state.t:.6g}, E_tot {E0:.12g} -> {prev_E:.12g}; output in {out}")
    for f in failures:
        print(f"FAIL {f}")
    return EXIT_INVARIANT if failures else EXIT_OK


def _cmd_verify(suite: str) -> int:
    names = list(SUITES) if suite == "all" else [suite]
    ok = True
    for name in names:
        print(f"[{name}]")
        for check in SUITES[name]():
            print("  " + check.line())
            ok &= check.passed
    return EXIT_OK if ok else EXIT_INVARIANT


def _cmd_convergence(cfg: RunConfig, levels: int, refine: int) -> int:
    if levels < 2 or refine < 1:
        raise ConfigError("need --levels >= 2 and --ref-refine >= 1")
    grid, params, scfg = cfg.grid(), cfg.params(), cfg.stepper()
    scen = cfg.scenario()
    h0 = scfg.h
    T = h0 * cfg["stepper.steps"]
    hs = [h0 / 2 ** i for i in range(levels)]
    # with refine == 1 the finest level is its own reference
    h_ref = hs[-1] / refine
    if refine == 1:
        hs = hs[:-1]
    res = temporal_convergence(grid, params, scen.initial_phi(), scfg, hs, h_ref, T,
                               scen.initial_velocity())
    print(f"final time {T:.6g}, reference h = {h_ref:.6g}")
    print(f"{'h':>12s} {'L2 error':>14s} {'order':>8s}")
    for i, (h, e) in enumerate(zip(res.hs, res.errors)):
        order = f"{res.pairwise_orders[i - 1]:8.3f}" if i else " " * 8
        print(f"{h:12.6g} {e:14.6e} {order}")
    print(f"fitted order {res.fitted_order:.4f}")
    return EXIT_OK


def _cmd_compare(cfg: RunConfig, steps: int, tol: float) -> int:
    grid, params, scfg = cfg.grid(), cfg.params(), cfg.stepper()
    phi0 = cfg.scenario().initial_phi()
    scfg = dataclasses.replace(scfg, variant=Variant.AGG)
    cmp = compare_matched(grid, params, phi0, scfg, steps)
    print(f"{steps} steps, rho1 = rho2 = {params.rho_mean:.6g}")
    print(f"max |dphi| {cmp.max_phi:.3e}  max |dmu| {cmp.max_mu:.3e}  max |dv| {cmp.max_v:.3e}")
    passed = cmp.max_discrepancy <= tol
    print(f"{'PASS' if passed else 'FAIL'} max field discrepancy {cmp.max_discrepancy:.3e} <= {tol:.1e}")
    return EXIT_OK if passed else EXIT_INVARIANT


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "verify":
            return _cmd_verify(args.suite)
        cfg = load_config(args.config)
        if args.command == "run":
            out = Path(args.out) if args.out else Path(cfg["output.dir"])
            steps = cfg["stepper.steps"] if args.steps is None else args.steps
            if steps < 0:
                raise ConfigError("--steps must be >= 0")
            return _cmd_run(cfg, out, steps)
        if args.command == "convergence":
            return _cmd_convergence(cfg, args.levels, args.ref_refine)
        steps = cfg["stepper.steps"] if args.steps is None else args.steps
        return _cmd_compare(cfg, steps, args.tol)
    except ConfigError as exc:
        print(f"aggflow: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"aggflow: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except IoError as exc:
        print(f"aggflow: i/o error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
