"""Command-line front end: model checking, diagram evaluation, protocol runs.

Exit codes: 0 success, 2 usage error, 3 validation or input-content failure,
4 I/O failure.  All randomness comes from the mandatory ``--seed``; rerunning
any command with the same arguments reproduces its outputs byte for byte.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

import numpy as np

from . import diagrams, kernel, protocols
from .category import (CategoryError, builtin_names, check_pentagon,
                       monodromy, omega_coefficients, resolve_category,
                       smatrix_report, verify_detection)
from .diagrams import DiagramError
from .measure import MeasurementError
from .protocols import ProtocolError
from .rng import derive_seed

RESIDUAL_LIMIT = 1e-9

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_IO = 4


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CategoryError, DiagramError, MeasurementError, ProtocolError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def build_parser():
    parser = argparse.ArgumentParser(
        prog="anyonsim",
        description="Simulate interferometric and projective measurement of anyons.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_check = sub.add_parser(
        "check", help="validate a model: pentagon, unitarity, Verlinde, modularity")
    p_check.add_argument("category",
                         help=f"built-in name ({', '.join(builtin_names())}) or file path")
    p_check.set_defaults(func=cmd_check)

    p_eval = sub.add_parser("eval", help="evaluate a closed diagram file")
    p_eval.add_argument("diagram", help="path to a diagram DSL file")
    p_eval.add_argument("--category", required=True)
    p_eval.add_argument("--anyon", default=None,
                        help="charge bound to the A / Abar placeholders")
    p_eval.add_argument("--normalize-by", default=None,
                        help="second diagram file; print the ratio of values")
    p_eval.set_defaults(func=cmd_eval)

    p_run = sub.add_parser("run", help="run a measurement protocol")
    run_sub = p_run.add_subparsers(dest="protocol", required=True)

    p_forced = run_sub.add_parser("forced", help="forced measurement on a vacuum pair")
    p_forced.add_argument("--category", required=True)
    p_forced.add_argument("--anyon", required=True)
    p_forced.add_argument("--trials", type=int, default=1)
    p_forced.add_argument("--seed", type=int, required=True)
    p_forced.add_argument("--max-even-steps", type=int,
                          default=protocols.DEFAULT_MAX_EVEN_STEPS)
    p_forced.add_argument("--jobs", type=int, default=1)
    p_forced.add_argument("--kernel", choices=["auto", "compiled", "python"],
                          default="auto")
    p_forced.add_argument("--out", default=None, help="survival CSV output path")
    p_forced.add_argument("--log-trajectories", default=None, metavar="DIR",
                          help="write full per-trial trajectory logs here")
    p_forced.add_argument("--log-count", type=int, default=10,
                          help="how many trajectories to log (default 10)")
    p_forced.set_defaults(func=cmd_run_forced)

    p_group = run_sub.add_parser(
        "group-proj", help="simulate projective measurement of a composite group")
    p_group.add_argument("--category", required=True)
    p_group.add_argument("--pairs", required=True,
                         help="comma-separated pair labels, e.g. tau,tau")
    p_group.add_argument("--trials", type=int, default=1)
    p_group.add_argument("--seed", type=int, required=True)
    p_group.add_argument("--max-even-steps", type=int,
                         default=protocols.DEFAULT_MAX_EVEN_STEPS)
    p_group.add_argument("--out", default=None, help="per-trial CSV output path")
    p_group.set_defaults(func=cmd_run_group)

    p_stats = sub.add_parser("stats", help="re-aggregate trajectory logs")
    p_stats.add_argument("logs", nargs="+", help="trajectory log files")
    p_stats.add_argument("--out", default=None, help="survival CSV output path")
    p_stats.set_defaults(func=cmd_stats)

    return parser


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------

def cmd_check(args) -> int:
    spec = resolve_category(args.category)
    t0 = time.perf_counter()
    pentagon = check_pentagon(spec)
    srep = smatrix_report(spec)
    detected = verify_detection(spec)
    elapsed = time.perf_counter() - t0

    print(f"category {spec.name}: {spec.num_labels} labels, D = {spec.total_dim!r}")
    for lab in spec.labels:
        print(f"  {lab.name}: d = {lab.qdim!r}, dual = {spec.labels[lab.dual].name}")
    print(f"pentagon+F-unitarity residual: {pentagon:.3e}")
    print(f"S-matrix unitarity residual:   {srep['unitarity']:.3e}")
    print(f"S-matrix symmetry residual:    {srep['symmetry']:.3e}")
    print(f"S first-row (d_a/D) residual:  {srep['first_row']:.3e}")
    print(f"Verlinde fusion residual:      {srep['verlinde']:.3e}")
    print(f"all charges detected by braiding: {detected}")
    print(f"check time: {elapsed:.2f} s")

    worst = max(pentagon, *srep.values())
    ok = worst < RESIDUAL_LIMIT and detected
    print("result: " + ("ok" if ok else f"FAILED (worst residual {worst:.3e})"))
    return EXIT_OK if ok else EXIT_VALIDATION


def _read_text(path):
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def cmd_eval(args) -> int:
    spec = resolve_category(args.category)
    diagram = diagrams.parse_diagram(_read_text(args.diagram), spec, anyon=args.anyon)
    value = diagrams.evaluate_closed(diagram, spec)
    print(f"value = {_fmt_complex(value)}")
    if args.normalize_by:
        ref = diagrams.parse_diagram(_read_text(args.normalize_by), spec,
                                     anyon=args.anyon)
        ref_value = diagrams.evaluate_closed(ref, spec)
        if ref_value == 0:
            print("error: normalization diagram evaluates to zero", file=sys.stderr)
            return EXIT_VALIDATION
        print(f"normalized = {_fmt_complex(value / ref_value)}")
    return EXIT_OK


def _fmt_complex(z: complex) -> str:
    if abs(z.imag) < 1e-14:
        return repr(z.real)
    return f"{z.real!r}{z.imag:+}j"


def cmd_run_forced(args) -> int:
    spec = resolve_category(args.category)
    stats = protocols.collect_stats(
        spec, args.anyon, trials=args.trials, seed=args.seed,
        max_even_steps=args.max_even_steps, jobs=args.jobs,
        impl=None if args.kernel == "auto" else args.kernel)

    print(f"forced measurement: category={spec.name} anyon={stats.anyon} "
          f"trials={stats.trials} seed={stats.seed} "
          f"kernel={kernel.implementation_name(None if args.kernel == 'auto' else args.kernel)}")
    print(f"p = 1/d^2 = {stats.p_theory!r}")
    print(f"p_hat = {stats.p_hat!r} ({stats.attempts} even-step reads, "
          f"{(stats.p_hat - stats.p_theory) / stats.p_sigma:+.2f} sigma)")
    print(f"mean even steps to success = {stats.attempts / max(1, stats.trials - stats.truncated)!r}")
    if stats.truncated:
        print(f"truncated trials: {stats.truncated}")

    csv = stats.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv)
        print(f"survival table written to {args.out}")
    else:
        sys.stdout.write(csv)

    if args.log_trajectories:
        os.makedirs(args.log_trajectories, exist_ok=True)
        count = min(args.log_count, args.trials)
        for i in range(count):
            traj = protocols.forced_measurement(
                spec, args.anyon, seed=derive_seed(args.seed, i),
                max_even_steps=args.max_even_steps)
            path = os.path.join(args.log_trajectories, f"trajectory_{i:05d}.log")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(traj.to_log())
        print(f"{count} trajectory logs written to {args.log_trajectories}")
    return EXIT_OK


def cmd_run_group(args) -> int:
    spec = resolve_category(args.category)
    pairs = [p.strip() for p in args.pairs.split(",") if p.strip()]
    if not pairs:
        print("error: --pairs must name at least one label", file=sys.stderr)
        return EXIT_USAGE

    lines = [
        f"# anyonsim-groupproj/1 category={spec.name} pairs={','.join(pairs)} "
        f"seed={args.seed} trials={args.trials}",
        "trial,inside_outcome,success_step,even_steps,truncated",
    ]
    outcome_counts = {}
    for i in range(args.trials):
        traj = protocols.simulate_projective_on_group(
            spec, pairs, seed=derive_seed(args.seed, i),
            max_even_steps=args.max_even_steps)
        name = traj.steps[0].outcome_name
        outcome_counts[name] = outcome_counts.get(name, 0) + 1
        lines.append(f"{i},{name},{traj.success_step},"
                     f"{traj.success_even_count},{str(traj.truncated).lower()}")
    csv = "\n".join(lines) + "\n"

    print(f"group projective simulation: category={spec.name} pairs={','.join(pairs)} "
          f"trials={args.trials} seed={args.seed}")
    dist = ", ".join(f"{k}: {v}" for k, v in sorted(outcome_counts.items()))
    print(f"inside outcomes: {dist}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv)
        print(f"per-trial table written to {args.out}")
    else:
        sys.stdout.write(csv)
    return EXIT_OK


def cmd_stats(args) -> int:
    records = []
    header = None
    for path in args.logs:
        rec = protocols.parse_trajectory_log(_read_text(path))
        if header is None:
            header = rec["header"]
        elif (rec["header"].get("category"), rec["header"].get("anyon")) != (
                header.get("category"), header.get("anyon")):
            print(f"error: {path} aggregates a different run "
                  f"({rec['header']})", file=sys.stderr)
            return EXIT_VALIDATION
        records.append(rec)
    spec = resolve_category(header["category"])
    a = spec.index_of(header["anyon"])
    p = 1.0 / (spec.qdim(a) * spec.qdim(spec.dual(a)))

    max_es = max(int(h["header"].get("max_even_steps", "200")) for h in records)
    success_counts = np.zeros(max_es + 1, dtype=np.int64)
    truncated = 0
    attempts = 0
    for rec in records:
        attempts += sum(1 for s in rec["steps"] if s["kind"] == "int" and s["step"] > 1)
        if rec["success_step"] is None:
            truncated += 1
        else:
            success_counts[rec["success_step"] // 2] += 1
    stats = protocols.ProtocolStats(
        category=spec.name, anyon=header["anyon"], seed=int(header.get("seed", 0)),
        trials=len(records), max_even_steps=max_es, p_theory=p,
        success_counts=success_counts, truncated=truncated, attempts=attempts,
        outcome_counts=np.zeros(spec.num_labels, dtype=np.int64))
    print(f"aggregated {len(records)} trajectories: p_hat = {stats.p_hat!r}")
    csv = stats.to_csv()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(csv)
        print(f"survival table written to {args.out}")
    else:
        sys.stdout.write(csv)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
