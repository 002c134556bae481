"""Command-line front end.

Four subcommands cover the workflows the library supports:

* ``run``    one simulation, diagnostics CSV plus snapshots;
* ``sweep``  the experiment suite (E1-E4) with its manifest;
* ``audit``  the inequality table on the seeded initial state;
* ``norms``  the norm and energy report of that state.

Every subcommand accepts ``--config`` (flat key = value file),
``--out`` and ``--smoke``; viscosities come from ``--nu`` as a
comma-separated list.  Exit status is 0 on success, 1 when a run
fails or a hard audit row exceeds its constant.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

from .analytic_norms import domain_from_config, energy_functionals, field_norm_suite, write_norm_reports
from .config import SolverConfig, load_config
from .diagnostics_harness import (
    inequality_audit,
    initial_data,
    norm_checkpoint_hook,
    run_experiment_suite,
    write_diagnostics_csv,
)
from .nse_solver import run_simulation

EXPERIMENTS = ("E1", "E2", "E3", "E4")


def _parse_nus(raw: str) -> list:
    try:
        return [float(part) for part in raw.split(",") if part.strip()]
    except ValueError:
        raise SystemExit(f"--nu expects comma-separated numbers, got {raw!r}") from None


def _load(args) -> SolverConfig:
    try:
        cfg = load_config(args.config) if args.config else SolverConfig()
    except (OSError, ValueError) as exc:
        raise SystemExit(f"config error: {exc}") from None
    if args.smoke:
        cfg = cfg.smoke()
    return cfg


def _echo(pairs, stream=None) -> None:
    stream = stream or sys.stdout
    for key, value in pairs:
        print(f"{key} = {value}", file=stream)


def cmd_run(args) -> int:
    cfg = _load(args)
    nus = _parse_nus(args.nu) if args.nu else []
    if len(nus) > 1:
        raise SystemExit("run takes a single --nu value; use sweep for several")
    if nus:
        import dataclasses

        cfg = dataclasses.replace(cfg, nu=nus[0])
    out_dir = args.out or cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    omega0 = initial_data(cfg)
    hook = norm_checkpoint_hook(cfg)
    prefix = cfg.experiment or "run"
    result = run_simulation(cfg, omega0, out_dir=out_dir, snapshot_prefix=prefix, on_checkpoint=hook)
    csv_path = os.path.join(out_dir, f"{prefix}_diagnostics.csv")
    write_diagnostics_csv(csv_path, result.records)
    last = result.records[-1]
    _echo(
        [
            ("nu", cfg.nu),
            ("steps", result.n_steps),
            ("dt", f"{result.dt:.6g}"),
            ("wall_seconds", f"{result.wall_seconds:.2f}"),
            ("boundary_sup", f"{last.boundary_sup:.6g}"),
            ("energy", f"{last.energy:.6g}"),
            ("enstrophy", f"{last.enstrophy:.6g}"),
            ("diagnostics", csv_path),
            ("snapshots", len(result.snapshot_paths)),
        ]
    )
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    experiments = args.experiment or list(EXPERIMENTS)
    nus = _parse_nus(args.nu) if args.nu else None
    suite = run_experiment_suite(
        cfg, experiments, out_dir=args.out, nus=nus, smoke=args.smoke
    )
    failed = list(suite.errors)
    for name in sorted(suite.results):
        res = suite.results[name]
        status = "ok" if not res.errors else f"error: {'; '.join(res.errors)}"
        print(f"{name}: {status}")
        failed.extend(res.errors)
    print(f"manifest = {suite.manifest_path}")
    for msg in suite.errors:
        print(f"error: {msg}", file=sys.stderr)
    return 1 if failed else 0


def cmd_audit(args) -> int:
    cfg = _load(args)
    table = inequality_audit(initial_data(cfg), cfg)
    width = max(len(r.name) for r in table.rows)
    for r in table.rows:
        if r.skipped:
            print(f"{r.name:<{width}}  skipped (no mass)")
        else:
            mark = " hard" if r.hard else ""
            print(f"{r.name:<{width}}  lhs={r.lhs:.6e}  rhs={r.rhs:.6e}  ratio={r.ratio:.4f}{mark}")
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "audit.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["seed", "name", "lhs", "rhs", "ratio", "hard", "skipped"])
            for r in table.rows:
                w.writerow([cfg.seed, r.name, repr(r.lhs), repr(r.rhs), repr(r.ratio), int(r.hard), int(r.skipped)])
        print(f"audit = {path}")
    if table.failed:
        print("hard inequality exceeded", file=sys.stderr)
        return 1
    return 0


def cmd_norms(args) -> int:
    cfg = _load(args)
    omega0 = initial_data(cfg)
    domain = domain_from_config(cfg)
    rep = field_norm_suite(omega0, domain, k=cfg.k_norm)
    energy = energy_functionals(omega0, cfg, tau=0.0)
    _echo(
        [
            ("rho", rep.rho),
            ("k", rep.k),
            ("L1", f"{rep.l1:.9e}"),
            ("Linf", f"{rep.linf:.9e}"),
            ("Wk1", f"{rep.wk1[rep.k]:.9e}"),
            ("Hk", f"{rep.hk[rep.k]:.9e}"),
            ("tail_k", f"{rep.tail_k:.9e}"),
            ("tail5", f"{rep.tail5:.9e}"),
            ("E", f"{energy.E:.9e}"),
            ("D", f"{energy.D:.9e}"),
            ("A_k", f"{energy.A_k:.9e}"),
        ]
    )
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        path = os.path.join(args.out, "norms.csv")
        write_norm_reports(path, [(0.0, rep)])
        print(f"norms = {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="exodisk", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    handlers = {
        "run": ("simulate one viscosity and write diagnostics", cmd_run),
        "sweep": ("drive the experiment suite and write the manifest", cmd_sweep),
        "audit": ("evaluate the inequality table on the seeded state", cmd_audit),
        "norms": ("print the norm and energy report of the seeded state", cmd_norms),
    }
    for name, (help_text, handler) in handlers.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--nu", help="comma-separated viscosities")
        p.add_argument("--out", help="output directory")
        p.add_argument("--smoke", action="store_true", help="shrunk resolution for pipeline checks")
        if name == "sweep":
            p.add_argument(
                "--experiment",
                action="append",
                choices=EXPERIMENTS,
                help="experiment to run (repeatable; default: all)",
            )
        p.set_defaults(handler=handler)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.handler(args)


if __name__ == "__main__":
    raise SystemExit(main())
