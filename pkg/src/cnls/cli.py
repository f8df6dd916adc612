"""Command-line entry point.

Subcommands: groundstate, evolve, stability, check, diag.  Every run reads
one TOML config, writes delimited data plus rendered figures into a
command-scoped subdirectory of the output directory, and is byte-for-byte
reproducible for a fixed config and seed.

Exit codes: 0 success, 1 numerical or convergence failure, 2 usage or
validation error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, load_config
from .diagnostics import run_diagnostics
from .dynamics import BlowUpError, conservation_report, evolve
from .energy import EnergyContext, InconsistentNonlinearityError
from .fieldio import read_fields, write_fields
from .groundstate import minimize
from .nonlinearity import HypothesisSampler, check_consistency, check_hypotheses
from .stability import delta_eps_sweep, make_orbit_proxy
from . import plotting

_OK, _NUMERICAL_FAILURE, _USAGE_ERROR = 0, 1, 2


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _header(cfg: RunConfig, seed: int) -> list[str]:
    return [
        f"# cnls {__version__}",
        f"# config_sha256 = {cfg.sha256}",
        f"# seed = {seed}",
    ]


def _write_lines(path: Path, lines: list[str]) -> None:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _write_csv(path: Path, cfg: RunConfig, seed: int, columns: list[str],
               rows) -> None:
    lines = _header(cfg, seed)
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(v) if isinstance(v, float) else str(v) for v in row))
    _write_lines(path, lines)


def _outdir(cfg: RunConfig, override: str | None, command: str) -> Path:
    base = Path(override) if override else Path(cfg.output_directory)
    path = base / command
    path.mkdir(parents=True, exist_ok=True)
    return path


def _build_context(cfg: RunConfig) -> EnergyContext:
    spec = cfg.build_spec()
    grid = cfg.build_grid()
    try:
        return EnergyContext(grid, spec)
    except InconsistentNonlinearityError as exc:
        # An inconsistent coupling cannot be run; the config selected it.
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_groundstate(cfg: RunConfig, args) -> int:
    seed = cfg.seed if args.seed is None else args.seed
    ctx = _build_context(cfg)
    constraints = cfg.build_constraints()
    opts = cfg.build_minimize_options(seed=seed)
    out = _outdir(cfg, args.output_dir, "groundstate")

    result = minimize(ctx, constraints, opts)

    write_fields(out / "groundstate.nlsf", result.state)
    meta = _header(cfg, seed) + [
        f"family = {ctx.spec.name}",
        f"value = {_fmt(result.value)}",
        "multipliers = " + " ".join(_fmt(v) for v in result.multipliers),
        f"residual = {_fmt(result.residual)}",
        f"grad_norm = {_fmt(result.grad_norm)}",
        f"iterations = {result.iterations}",
        f"converged = {result.converged}",
        f"stop_reason = {result.stop_reason}",
        f"boundary_decay = {_fmt(result.boundary_decay)}",
    ]
    _write_lines(out / "groundstate_meta.txt", meta)
    _write_csv(out / "groundstate_trace.csv", cfg, seed, ["step", "energy"],
               [(i, float(e)) for i, e in enumerate(result.energy_trace)])
    if cfg.plots_enabled:
        plotting.profile_figure(out / "groundstate_profile.png", result.state)
        plotting.trace_figure(out / "groundstate_trace.png", result.energy_trace)

    print(f"constrained minimum {result.value:.9g} after {result.iterations} "
          f"iterations (residual {result.residual:.3e}, converged {result.converged})")
    if args.verbose:
        print(f"  multipliers: {result.multipliers}")
        print(f"  stop reason: {result.stop_reason}, "
              f"boundary decay {result.boundary_decay:.3e}")
    print(f"outputs in {out}")
    return _OK if result.converged else _NUMERICAL_FAILURE


def cmd_evolve(cfg: RunConfig, args) -> int:
    seed = cfg.seed if args.seed is None else args.seed
    ctx = _build_context(cfg)
    opts = cfg.build_evolve_options()
    out = _outdir(cfg, args.output_dir, "evolve")

    try:
        state = read_fields(args.initial)
    except (OSError, ValueError) as exc:
        print(f"error: cannot read initial state: {exc}", file=sys.stderr)
        return _USAGE_ERROR
    if state.grid != ctx.grid:
        print("error: initial state grid does not match the configured grid",
              file=sys.stderr)
        return _USAGE_ERROR
    if state.ell != ctx.spec.ell:
        print(f"error: initial state has {state.ell} components, coupling expects "
              f"{ctx.spec.ell}", file=sys.stderr)
        return _USAGE_ERROR

    blow_up = None
    try:
        traj = evolve(ctx, state, opts)
    except BlowUpError as exc:
        blow_up = exc.time
        traj = exc.trajectory

    columns = ["t"] + [f"Q_{j}" for j in range(1, state.ell + 1)] + ["E"]
    rows = []
    if traj is not None:
        rows = [
            (float(t), *[float(q) for q in qrow], float(e))
            for t, qrow, e in zip(traj.times, traj.charges_series, traj.energy_series)
        ]
    _write_csv(out / "trajectory.csv", cfg, seed, columns, rows)
    if traj is not None:
        for i, (t, snap) in enumerate(traj.snapshots):
            write_fields(out / f"snapshot_{i:02d}.nlsf", snap)

    summary = _header(cfg, seed)
    if blow_up is None:
        rep = conservation_report(traj)
        summary += [
            "status = completed",
            f"t_final = {_fmt(traj.times[-1])}",
            "charge_drift = " + " ".join(_fmt(v) for v in rep.charge_drift),
            f"energy_drift = {_fmt(rep.energy_drift)}",
        ]
        print(f"evolved to t = {traj.times[-1]:g}; {rep}")
    else:
        summary += ["status = blow-up", f"blow_up_time = {_fmt(blow_up)}"]
        print(f"blow-up detected at t = {blow_up:g} (see {out})")
    if traj is not None:
        summary.append("snapshots = " + " ".join(_fmt(t) for t, _ in traj.snapshots))
    _write_lines(out / "evolve_summary.txt", summary)
    if cfg.plots_enabled and traj is not None and traj.times.size > 1:
        plotting.conservation_figure(out / "conservation.png", traj.times,
                                     traj.charges_series, traj.energy_series)
    print(f"outputs in {out}")
    return _OK if blow_up is None else _NUMERICAL_FAILURE


def cmd_stability(cfg: RunConfig, args) -> int:
    seed = cfg.seed if args.seed is None else args.seed
    ctx = _build_context(cfg)
    constraints = cfg.build_constraints()
    deltas = cfg.stability_deltas()
    seeds = cfg.stability_seeds()
    opts = cfg.build_stability_evolve_options()
    out = _outdir(cfg, args.output_dir, "stability")

    result = minimize(ctx, constraints, cfg.build_minimize_options(seed=seed))
    if not result.converged:
        print(f"error: reference ground state did not converge "
              f"({result.stop_reason}); no orbit to perturb", file=sys.stderr)
        return _NUMERICAL_FAILURE
    proxy = make_orbit_proxy(ctx, result, constraints)

    sweep = delta_eps_sweep(ctx, proxy, deltas, seeds, opts)
    _write_csv(out / "sweep.csv", cfg, seed, ["delta", "eps"],
               [(float(d), float(e)) for d, e in sweep.rows()])
    for rep in sweep.runs:
        name = f"distance_d{rep.delta:g}_s{rep.seed}.csv"
        _write_csv(out / name, cfg, seed, ["t", "distance"],
                   list(zip(map(float, rep.times), map(float, rep.distances))))
    summary = _header(cfg, seed) + [
        f"note = {sweep.note}",
        f"monotone = {sweep.monotone}",
        f"dt = {_fmt(opts.dt)}",
        f"t_final = {_fmt(opts.t_final)}",
    ]
    for rep in sweep.runs:
        summary.append(f"run delta={_fmt(rep.delta)} seed={rep.seed} "
                       f"sup_distance={_fmt(rep.sup_distance)}")
    blew_up = [r for r in sweep.runs if r.blow_up_time is not None]
    for rep in blew_up:
        summary.append(f"blow_up delta={rep.delta:g} seed={rep.seed} "
                       f"t={_fmt(rep.blow_up_time)}")
    _write_lines(out / "stability_summary.txt", summary)
    if cfg.plots_enabled:
        plotting.sweep_figure(out / "sweep.png", sweep.deltas, sweep.epsilons)
        plotting.distance_figure(out / "distances.png", sweep.runs)

    print(sweep)
    if blew_up:
        print(f"{len(blew_up)} run(s) blew up; see stability_summary.txt")
    print(f"outputs in {out}")
    return _OK


def cmd_check(cfg: RunConfig, args) -> int:
    seed = cfg.seed if args.seed is None else args.seed
    spec = cfg.build_spec()
    out = _outdir(cfg, args.output_dir, "check")
    sampler = HypothesisSampler(n_dims=cfg.problem["n_dims"], seed=seed)

    consistency = check_consistency(spec, sampler)
    lines = _header(cfg, seed) + [f"family = {spec.name}", str(consistency)]
    rows = [("consistency", "pass" if consistency.passed else "fail",
             f"{consistency.max_deviation:.6e}", str(consistency.n_samples))]

    hp = cfg.build_hypothesis_params()
    if hp is not None:
        try:
            report = check_hypotheses(spec, hp, sampler)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return _USAGE_ERROR
        lines.append(str(report))
        rows.extend(report.rows())
    else:
        lines.append("no hypothesis constants configured; structural checks skipped")

    _write_lines(out / "check_report.txt", lines)
    _write_csv(out / "check_report.csv", cfg, seed,
               ["check", "status", "margin", "n_samples"], rows)

    print("\n".join(lines[3:]))
    print(f"outputs in {out}")
    return _OK if consistency.passed else _NUMERICAL_FAILURE


def cmd_diag(cfg: RunConfig, args) -> int:
    seed = cfg.seed if args.seed is None else args.seed
    ctx = _build_context(cfg)
    constraints = cfg.build_constraints()
    opts = cfg.build_minimize_options(seed=seed)
    out = _outdir(cfg, args.output_dir, "diag")

    rows = run_diagnostics(ctx, constraints, opts, seed=seed)
    lines = _header(cfg, seed) + [str(r) for r in rows]
    _write_lines(out / "diag_report.txt", lines)
    _write_csv(out / "diag_report.csv", cfg, seed,
               ["check", "value", "tolerance", "passed", "note"],
               [(r.name,
                 "" if r.value is None else _fmt(r.value),
                 "" if r.tolerance is None else _fmt(r.tolerance),
                 str(r.passed), r.note) for r in rows])
    if cfg.plots_enabled:
        plotting.diagnostics_figure(out / "diag.png", rows)

    for r in rows:
        print(r)
    print(f"outputs in {out}")
    return _OK if all(r.passed for r in rows) else _NUMERICAL_FAILURE


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cnls",
        description="Constrained ground states, evolution and stability "
                    "experiments for coupled Schrodinger systems.")
    parser.add_argument("--version", action="version", version=f"cnls {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="path to the TOML run configuration")
        p.add_argument("--output-dir", default=None, help="override [output].directory")
        p.add_argument("--seed", type=int, default=None, help="override the seed")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("groundstate", help="solve the constrained minimization")
    common(p)
    p = sub.add_parser("evolve", help="integrate an initial state in time")
    common(p)
    p.add_argument("initial", help="field dump with the initial state")
    p = sub.add_parser("stability", help="perturb-and-evolve response sweep")
    common(p)
    p = sub.add_parser("check", help="coupling consistency and hypothesis checks")
    common(p)
    p = sub.add_parser("diag", help="energy-identity diagnostic suite")
    common(p)
    return parser


_COMMANDS = {
    "groundstate": cmd_groundstate,
    "evolve": cmd_evolve,
    "stability": cmd_stability,
    "check": cmd_check,
    "diag": cmd_diag,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        return _COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
