"""Command-line front end.

    deformphase simulate --config run.json --out-dir out/
    deformphase phase    --config run.json --out-dir out/
    deformphase verify   [--suite default] [--list] [--json summary.json]
    deformphase batch    --configs dir/ --jobs 4 [--out-dir dir/out] [--mode phase]

Exit codes: 0 ok, 1 verification failure, 2 configuration error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .config import load_config
from .errors import ConfigError, DeformPhaseError, NumericalFailure, StepNotDividing

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

log = logging.getLogger("deformphase")


def _run_one(config_path: str, out_dir: str, with_phase: bool) -> tuple[int, str]:
    from .pipeline import run

    try:
        cfg = load_config(config_path)
        report = run(cfg, out_dir, with_phase)
    except (ConfigError, StepNotDividing) as exc:
        return EXIT_CONFIG, f"config error: {exc}"
    except NumericalFailure as exc:
        return EXIT_NUMERIC, f"numerical failure: {exc}"
    except DeformPhaseError as exc:
        return EXIT_CONFIG, f"invalid scenario: {exc}"
    n = len(report["segments"] or [])
    msg = f"{cfg.name}: {report['nodes']} nodes"
    if with_phase:
        msg += f", {n} closed segment(s)"
    return EXIT_OK, msg


def cmd_run(args, with_phase: bool) -> int:
    code, msg = _run_one(args.config, args.out_dir, with_phase)
    print(msg, file=sys.stderr if code else sys.stdout)
    return code


def cmd_verify(args) -> int:
    from . import checks

    try:
        names = checks.resolve_suite(args.suite)
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return EXIT_CONFIG
    if args.list:
        for n in names:
            print(n)
        return EXIT_OK
    results = []
    for n in names:
        res = checks.run_check(n)
        print(res.line(), flush=True)
        results.append(res)
    summary = {"suite": args.suite, "passed": all(r.passed for r in results),
               "checks": [{"name": r.name, "passed": r.passed, "seconds": r.seconds,
                           "details": r.details} for r in results]}
    if args.json:
        text = json.dumps(summary, indent=2, default=float)
        if args.json == "-":
            print(text)
        else:
            Path(args.json).write_text(text + "\n", encoding="utf-8")
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed", file=sys.stderr)
    return EXIT_VERIFY if failed else EXIT_OK


def cmd_batch(args) -> int:
    configs = sorted(Path(args.configs).glob("*.json"))
    if not configs:
        print(f"no *.json configs in {args.configs}", file=sys.stderr)
        return EXIT_CONFIG
    out_root = Path(args.out_dir) if args.out_dir else Path(args.configs) / "out"
    jobs = [(str(p), str(out_root / p.stem), args.mode == "phase") for p in configs]
    with ProcessPoolExecutor(max_workers=args.jobs) as pool:
        results = list(pool.map(_run_one, *zip(*jobs)))
    worst = EXIT_OK
    for (path, _, _), (code, msg) in zip(jobs, results):
        print(f"{Path(path).name}: {msg}", file=sys.stderr if code else sys.stdout)
        worst = max(worst, code)
    return worst


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="deformphase",
                                description="Rotation and reconstruction phases of "
                                            "self-deforming bodies.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)
    for name, helptext in (("simulate", "integrate and write the trajectory"),
                           ("phase", "integrate and analyse closed momentum curves")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out-dir", required=True)
    sp = sub.add_parser("verify", help="run the acceptance checks")
    sp.add_argument("--suite", default="default")
    sp.add_argument("--list", action="store_true", help="print check names and exit")
    sp.add_argument("--json", help="write the summary JSON here ('-' for stdout)")
    sp = sub.add_parser("batch", help="run every config in a directory")
    sp.add_argument("--configs", required=True)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--out-dir")
    sp.add_argument("--mode", choices=("simulate", "phase"), default="phase")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "simulate":
        return cmd_run(args, with_phase=False)
    if args.command == "phase":
        return cmd_run(args, with_phase=True)
    if args.command == "verify":
        return cmd_verify(args)
    if args.jobs < 1:
        print("--jobs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    return cmd_batch(args)


if __name__ == "__main__":
    sys.exit(main())
