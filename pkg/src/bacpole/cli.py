"""Command line front end.

Subcommands:
    run        batch experiments from a config file
    gradcheck  finite-difference verification of all gradient pathways
    phase      run a two-level experiment up to one phase, for debugging

Exit codes: 0 ran to completion, 1 configuration error, 2 numeric fault
(including a failed gradient check).
"""

from __future__ import annotations

import argparse
import sys

from .config import load_config, parse_config
from .errors import ConfigError, NumericFault
from .gradcheck import run_all
from .hierarchy import PHASE_PLAN, build_two_level, run_phase
from .records import Recorder
from .runner import format_result, format_summary, make_streams, run_batch, run_experiment, write_outputs


def _parse_seeds(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part.strip()) for part in text.split(",") if part.strip() != "")
    except ValueError:
        raise ConfigError(f"bad --seeds value {text!r}") from None


def _load(args) -> "ExperimentConfig":
    seeds = _parse_seeds(args.seeds) if args.seeds else None
    if args.config:
        return load_config(args.config, profile=args.profile, seeds=seeds)
    return parse_config("", profile=args.profile, seeds=seeds)


def cmd_run(args) -> int:
    config = _load(args)
    summary, results = run_batch(config, jobs=args.jobs)
    for result in results:
        print(format_result(result))
    print(format_summary(summary))
    if args.out:
        write_outputs(args.out, config, summary, results)
        print(f"wrote trials.csv, series.csv, summary.csv to {args.out}")
    if any(r.fail_reason and r.fail_reason.startswith("numeric-fault") for r in results):
        return 2
    return 0


def cmd_gradcheck(args) -> int:
    results = run_all(n=args.checks, seed=args.seed)
    ok = True
    for res in results:
        status = "ok" if res.passed else "FAIL"
        print(f"{res.name:24s} n={res.count:<4d} max_err={res.max_err:.3e} tol={res.tol:.0e}  {status}")
        ok = ok and res.passed
    return 0 if ok else 2


def cmd_phase(args) -> int:
    config = _load(args)
    if not config.is_two_level:
        raise ConfigError("phase isolation applies to two-level architectures; use 'run' for single-level")
    plan = PHASE_PLAN[config.variant]
    labels = [phase for phase, _ in plan]
    if args.only not in labels:
        raise ConfigError(f"architecture {config.architecture} has phases {labels}, not {args.only!r}")
    fault = False
    for seed in config.seeds:
        rngs = make_streams(seed)
        recorder = Recorder()
        nets = build_two_level(config, rngs["weights"])
        print(f"seed {seed}:")
        try:
            for phase, _role in plan:
                report = run_phase(phase, nets, config, rngs, recorder)
                metric = "n/a" if report.metric is None else f"{report.metric:.5g}"
                print(
                    f"  phase {report.phase} [{report.role}]: trials={report.trials} "
                    f"steps={report.steps} converged={report.converged} metric={metric}"
                )
                if phase == args.only or not report.converged:
                    break
        except NumericFault as exc:
            print(f"  numeric fault: {exc}")
            fault = True
    return 2 if fault else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bacpole", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a batch of experiments")
    run_p.add_argument("--config", help="path to a key = value config file")
    run_p.add_argument("--profile", choices=("desk", "paper"), help="scale overrides")
    run_p.add_argument("--seeds", help="comma-separated seed override")
    run_p.add_argument("--out", help="directory for trials.csv / series.csv / summary.csv")
    run_p.add_argument("--jobs", type=int, default=1, help="parallel seed workers")
    run_p.set_defaults(func=cmd_run)

    grad_p = sub.add_parser("gradcheck", help="finite-difference gradient verification")
    grad_p.add_argument("--checks", type=int, default=60, help="random configurations per suite")
    grad_p.add_argument("--seed", type=int, default=2024)
    grad_p.set_defaults(func=cmd_gradcheck)

    phase_p = sub.add_parser("phase", help="run a two-level experiment up to one phase")
    phase_p.add_argument("--only", required=True, choices=("I", "II", "III", "IV"))
    phase_p.add_argument("--config", help="path to a key = value config file")
    phase_p.add_argument("--profile", choices=("desk", "paper"))
    phase_p.add_argument("--seeds", help="comma-separated seed override")
    phase_p.set_defaults(func=cmd_phase)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except NumericFault as exc:
        print(f"numeric fault: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
