"""Command-line entry point: validate, simulate, steady, eigen, analyze.

Exit codes: 0 success, 1 runtime failure, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import spectral as sp
from .config import ConfigError, RunConfig, dump_config, load_config
from .dynamics import RunError, SimState, run
from .longtime import InsufficientSamples, NonPositiveDistances, compare_models, detect_limit, fit_decay
from .material import MaterialError
from .presets import band_limited_noise, make_initial
from .spectral import Grid, GridError
from .steady import (
    SingularLinearization,
    SteadyProblem,
    classify,
    energy_I,
    lambda2,
    seeded_initial,
    solve_gradient_flow,
    solve_newton,
)
from .storage import (
    CSVFormatError,
    OutputConflict,
    SnapshotError,
    claim_output_dir,
    read_series,
    read_snapshot,
    write_csv,
    write_snapshot,
)

log = logging.getLogger("nematic2d")

EXIT_OK, EXIT_RUNTIME, EXIT_INVALID = 0, 1, 2


class InvalidInput(Exception):
    pass


def _emit(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def _load(args) -> RunConfig:
    if not args.config:
        raise InvalidInput("--config is required")
    return load_config(args.config).with_seed(args.seed)


def _out_dir(args, cfg: RunConfig) -> Path | None:
    out = args.out or cfg.output_dir
    return Path(out) if out else None


# ---------------------------------------------------------------- commands

def cmd_validate(args) -> int:
    cfg = _load(args)
    rels = cfg.relations()
    ok = all(passed for _, passed, _ in rels)
    print(f"alphas = {cfg.alphas}")
    if cfg.alpha3 - cfg.alpha2 > 0:
        g1 = cfg.alpha3 - cfg.alpha2
        g2 = cfg.alpha5 - cfg.alpha6
        print(f"gamma1 = {g1:g}")
        print(f"gamma2 = {g2:g}")
        print(f"mu1 = {1 / g1:g}")
        print(f"mu2 = {g2 / g1:g}")
        b = (cfg.alpha1 + g2**2 / g1, cfg.alpha4, cfg.alpha5 + cfg.alpha6 - g2**2 / g1)
        print(f"beta = ({b[0]:g}, {b[1]:g}, {b[2]:g})")
    for name, passed, detail in rels:
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_INVALID


def _initial_state(cfg: RunConfig):
    if cfg.init_snapshot:
        s0 = read_snapshot(cfg.init_snapshot)
        if s0.grid.n != cfg.n or s0.theta.winding != cfg.winding:
            raise InvalidInput("init.snapshot grid or winding differs from the configuration")
        return s0
    return make_initial(Grid(cfg.n), cfg.preset, cfg.winding, cfg.seed,
                        cfg.amplitude, cfg.v_amplitude, cfg.modes)


def _reference(cfg: RunConfig, s0, p):
    if cfg.reference_snapshot:
        ref = read_snapshot(cfg.reference_snapshot)
        if ref.grid.n != cfg.n or ref.theta.winding != cfg.winding:
            raise InvalidInput("reference.snapshot grid or winding differs from the configuration")
        return ref.theta
    if cfg.reference_steady:
        prob = SteadyProblem(s0.grid, p.h_field, cfg.winding)
        sol = solve_newton(prob, 2 * s0.theta.remainder, tol=cfg.steady_tol)
        if not sol.converged:
            sol = solve_gradient_flow(prob, 2 * s0.theta.remainder, tol=cfg.steady_tol)
        if not sol.converged:
            raise RuntimeError(f"reference steady solve did not converge (residual {sol.residual_l2:.3e})")
        return sol.theta()
    return None


def cmd_simulate(args) -> int:
    cfg = _load(args)
    p = cfg.material()
    out = _out_dir(args, cfg)
    if out is None:
        raise InvalidInput("an output directory is required (--out or output.dir)")
    chash = cfg.config_hash()
    claim_output_dir(out, chash)
    (out / "config.txt").write_text(dump_config(cfg))
    s0 = _initial_state(cfg)
    ref = _reference(cfg, s0, p)

    def snap(i, state):
        if cfg.snapshot_every and i % cfg.snapshot_every == 0:
            write_snapshot(out / f"snap_{i:08d}.els", state, chash)
            log.info("step %d t=%.6g snapshot written", i, state.t)

    try:
        records, final = run(s0, p, cfg.dt, cfg.t_end, cfg.sample_every, integrator=cfg.integrator,
                             coupling_off=cfg.coupling_off, reference=ref, callback=snap)
    except RunError as exc:
        write_csv(out / "diagnostics.csv", exc.records)
        write_snapshot(out / "failure.els", exc.state, chash, {"error": str(exc)})
        log.error("%s", exc)
        return EXIT_RUNTIME
    write_csv(out / "diagnostics.csv", records)
    write_snapshot(out / "final.els", final, chash)
    last = records[-1]
    summary = {"config_hash": chash, "t": final.t, "samples": len(records),
               "energy_E": last.energy_E, "energy_EH": last.energy_EH,
               "theta_residual": last.theta_residual, "dist_h2": last.dist_h2}
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    if not args.quiet:
        _emit(summary)
    return EXIT_OK


def _steady_init(cfg: RunConfig, grid: Grid):
    if cfg.steady_init == "seeded":
        return seeded_initial(grid, cfg.steady_seed_amplitude)
    if cfg.steady_init == "zero":
        return np.zeros(grid.shape)
    if cfg.steady_init == "pi":
        return np.full(grid.shape, np.pi)
    rng = np.random.default_rng(cfg.seed)
    return cfg.steady_seed_amplitude * band_limited_noise(grid, rng, cfg.modes)


def cmd_steady(args) -> int:
    cfg = _load(args)
    grid = Grid(cfg.n)
    if cfg.steady_h_ratio is not None:
        h_squared = cfg.steady_h_ratio * lambda2(grid)
    else:
        h_squared = cfg.field_strength**2
    if not np.isfinite(h_squared) or h_squared < 0:
        raise InvalidInput(f"invalid field strength H^2 = {h_squared}")
    prob = SteadyProblem(grid, float(np.sqrt(h_squared)), cfg.winding)
    psi0 = _steady_init(cfg, grid)
    if cfg.steady_method == "newton":
        sol = solve_newton(prob, psi0, tol=cfg.steady_tol, max_iter=cfg.steady_max_iter)
    else:
        sol = solve_gradient_flow(prob, psi0, tol=cfg.steady_tol, max_time=cfg.steady_max_time)
    dev = sol.psi - sol.psi.mean()
    report = {
        "converged": sol.converged,
        "residual": sol.residual_l2,
        "class": classify(sol) if sol.converged else None,
        "method": sol.method,
        "iterations": sol.iterations,
        "h_squared": h_squared,
        "lambda2": lambda2(grid),
        "winding": list(cfg.winding),
        "energy_I": energy_I(grid, sol.psi, prob.h_field, cfg.winding),
        "psi_mean": float(sol.psi.mean()),
        "psi_deviation_l2": float(np.sqrt(sp.integrate(grid, dev**2))),
    }
    out = _out_dir(args, cfg)
    if out is not None:
        chash = cfg.config_hash()
        claim_output_dir(out, chash)
        state = SimState(grid, np.zeros((2,) + grid.shape), sol.theta())
        write_snapshot(out / "steady.els", state, chash, {"h_squared": h_squared})
        (out / "steady.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    _emit(report)
    if not sol.converged:
        log.error("steady solve did not converge; best residual %.3e", sol.residual_l2)
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_eigen(args) -> int:
    n = args.n
    if n is None:
        n = load_config(args.config).n if args.config else 64
    _emit({"lambda2": lambda2(Grid(n)), "n": n})
    return EXIT_OK


def cmd_analyze(args) -> int:
    series = read_series(args.csv, required=("t", args.column))
    t, dist = series["t"], series[args.column]
    keep = np.isfinite(dist)
    t, dist = t[keep], dist[keep]
    band = tuple(args.band)
    if args.model == "both":
        report = compare_models(t, dist, band)
    else:
        report = fit_decay(t, dist, args.model, band).report()
    if "energy_EH" in series:
        status = detect_limit(series["energy_EH"])
        report["limit"] = {"converged": status.converged, "energy_EH": status.residual}
    if args.out:
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    _emit(report)
    return EXIT_OK


# ---------------------------------------------------------------- plumbing

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value configuration file")
    common.add_argument("--out", help="output directory (or report file for analyze)")
    common.add_argument("--seed", type=int, help="override init.seed")
    common.add_argument("--quiet", action="store_true", help="suppress progress logging")

    ap = argparse.ArgumentParser(prog="nematic2d", description="2D nematic liquid crystal flow in a periodic box")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check material coefficients")
    sub.add_parser("simulate", parents=[common], help="run the coupled flow")
    sub.add_parser("steady", parents=[common], help="solve for a steady director")
    e = sub.add_parser("eigen", parents=[common], help="print the principal periodic eigenvalue")
    e.add_argument("--n", type=int, help="grid size (defaults to grid.n or 64)")
    a = sub.add_parser("analyze", parents=[common], help="fit decay of a diagnostics CSV")
    a.add_argument("csv", help="diagnostics CSV")
    a.add_argument("--model", choices=("exponential", "algebraic", "both"), default="exponential")
    a.add_argument("--column", default="dist_h2", help="distance column to fit")
    a.add_argument("--band", nargs=2, type=float, default=(1e-8, 1e-1), metavar=("LO", "HI"))
    return ap


COMMANDS = {
    "validate": cmd_validate,
    "simulate": cmd_simulate,
    "steady": cmd_steady,
    "eigen": cmd_eigen,
    "analyze": cmd_analyze,
}

_INVALID = (InvalidInput, ConfigError, MaterialError, GridError, SnapshotError, CSVFormatError,
            OutputConflict, InsufficientSamples, NonPositiveDistances)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s %(message)s", stream=sys.stderr)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_INVALID
    try:
        return COMMANDS[args.command](args)
    except _INVALID as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (RuntimeError, SingularLinearization, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
