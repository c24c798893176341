"""Command line: ``wsnids validate | run | report``."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .engine import EventLog
from .errors import ParseError, ValidationError
from .report import build_report, emit_report, from_dict, to_dict
from .runner import run_scenario
from .scenario import load_scenario

EXIT_OK = 0
EXIT_PARSE = 3
EXIT_VALIDATION = 4
EXIT_RUNTIME = 5

log = logging.getLogger("wsnids")


def _use_color(stream) -> bool:
    return "NO_COLOR" not in os.environ and hasattr(stream, "isatty") and stream.isatty()


def _parse_sweep(text: str) -> list[int]:
    key, _, rng = text.partition("=")
    lo, sep, hi = rng.partition("..")
    if key != "seeds" or not sep:
        raise argparse.ArgumentTypeError(f"expected seeds=A..B, got {text!r}")
    lo, hi = int(lo), int(hi)
    if hi < lo:
        raise argparse.ArgumentTypeError("empty seed range")
    return list(range(lo, hi + 1))


def _run_one(scenario_path: str, seed: int, until, out: str) -> dict:
    scenario = load_scenario(scenario_path)
    events, report = run_scenario(scenario, seed, until)
    out_dir = Path(out)
    events.write(out_dir / f"events-seed{seed}.log")
    (out_dir / f"report-seed{seed}.json").write_text(emit_report(report, "machine"))
    return to_dict(report)


def cmd_validate(args) -> int:
    s = load_scenario(args.scenario)
    t = s.topology
    print(f"ok: {len(t)} nodes, {len(s.policies)} policies, {len(s.attacks)} attacks, "
          f"{len(s.failures)} failures, length {s.length}")
    return EXIT_OK


def cmd_run(args) -> int:
    load_scenario(args.scenario)  # fail fast before creating output
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    color = _use_color(sys.stdout)
    if args.sweep is None:
        report = from_dict(_run_one(args.scenario, args.seed, args.until, str(out)))
        sys.stdout.write(emit_report(report, "table", color))
        return EXIT_OK

    seeds = args.sweep
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        futures = [pool.submit(_run_one, args.scenario, s, args.until, str(out)) for s in seeds]
        reports = [f.result() for f in futures]
    (out / "sweep-report.json").write_text(json.dumps(reports, separators=(",", ":")) + "\n")
    print("seed  windows  fp_windows  fp_rate  isolation  detected/attacks  takeovers")
    for rep in reports:
        detected = sum(1 for a in rep["attacks"] if a["first_alert_at"] is not None)
        print(f"{rep['seed']:<4}  {rep['evaluated_windows']:<7}  {rep['false_positive_windows']:<10}  "
              f"{100 * rep['false_positive_rate']:.3f}%  {rep['isolation_violations']:<9}  "
              f"{detected}/{len(rep['attacks']):<14}  {len(rep['takeovers'])}")
    return EXIT_OK


def cmd_report(args) -> int:
    events = EventLog.read(args.log)
    sys.stdout.write(emit_report(build_report(events), args.format, _use_color(sys.stdout)))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wsnids",
                                description="Hierarchical WSN intrusion detection simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="parse and validate a scenario file")
    v.add_argument("--scenario", required=True)
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("run", help="run a scenario and write the event log and report")
    r.add_argument("--scenario", required=True)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--until", type=int, default=None, help="override the scenario run length")
    r.add_argument("--out", required=True)
    r.add_argument("--sweep", type=_parse_sweep, default=None, metavar="seeds=A..B")
    r.add_argument("--jobs", type=int, default=None, help="worker processes for --sweep")
    r.set_defaults(func=cmd_run)

    rep = sub.add_parser("report", help="recompute a report from an event log")
    rep.add_argument("--log", required=True)
    rep.add_argument("--format", choices=("table", "machine"), default="table")
    rep.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print("validation failed:", file=sys.stderr)
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as exc:  # noqa: BLE001
        log.debug("run failed", exc_info=True)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
