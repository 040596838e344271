"""Command-line interface: run campaigns, calibrate, summarize results.

Exit codes: 0 on success, 1 when a campaign verdict fails (or a fit
does not converge), 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import os
import sys

from .calibrate import calibrate, load_targets, report_lines
from .config import (CampaignConfig, ConfigError, SCENARIOS,
                     config_from_mapping, load_config, save_config)
from .scenarios import run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="memlink",
        description="Two-node entanglement link simulator: campaign "
                    "runner, calibration and reporting.")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one campaign scenario")
    run_p.add_argument("scenario", choices=SCENARIOS)
    run_p.add_argument("--config", help="campaign config file (YAML)")
    run_p.add_argument("--seed", type=int, help="master seed (u64)")
    run_p.add_argument("--trials", type=int, help="total attempt count")
    run_p.add_argument("--out", help="output directory")
    run_p.add_argument("--mode", choices=("auto", "mc", "analytic"),
                       help="sampling mode override")

    cal_p = sub.add_parser("calibrate",
                           help="fit free noise parameters to targets")
    cal_p.add_argument("--targets", help="target table (YAML)")
    cal_p.add_argument("--out", default="results",
                       help="directory for calibrated.yaml and the report")

    rep_p = sub.add_parser("report",
                           help="summarize campaign outputs in a directory")
    rep_p.add_argument("dir")
    return parser


def _cmd_run(args) -> int:
    overrides = {
        "scenario": args.scenario,
        "seed": args.seed,
        "trials": args.trials,
        "out_dir": args.out,
        "mode": args.mode,
    }
    if args.config:
        cfg = load_config(args.config, overrides)
    else:
        cfg = config_from_mapping({}, overrides)
    result = run_experiment(cfg)
    summary_path = os.path.join(result.out_dir, "summary.txt")
    with open(summary_path, "r", encoding="utf-8") as fh:
        sys.stdout.write(fh.read())
    if result.error is not None:
        print(f"error: {result.error}", file=sys.stderr)
        return 1
    return 0 if result.passed else 1


def _cmd_calibrate(args) -> int:
    targets = load_targets(args.targets) if args.targets else None
    result = calibrate(targets)
    os.makedirs(args.out, exist_ok=True)
    cfg = CampaignConfig(scenario="bell", bundle=result.bundle,
                         out_dir=args.out, calibrated=False)
    save_config(cfg, os.path.join(args.out, "calibrated.yaml"))
    lines = report_lines(result)
    with open(os.path.join(args.out, "calibration.txt"), "w",
              encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    print("\n".join(lines))
    return 0 if result.converged else 1


def _cmd_report(args) -> int:
    if not os.path.isdir(args.dir):
        print(f"not a directory: {args.dir}", file=sys.stderr)
        return 2
    statuses = []
    for root, _dirs, files in sorted(os.walk(args.dir)):
        if "summary.kv" not in files:
            continue
        kv_path = os.path.join(root, "summary.kv")
        status = "UNKNOWN"
        with open(kv_path, "r", encoding="utf-8") as fh:
            for line in fh:
                if line.startswith("status="):
                    status = line.strip().split("=", 1)[1]
        statuses.append(status)
        txt_path = os.path.join(root, "summary.txt")
        if os.path.exists(txt_path):
            with open(txt_path, "r", encoding="utf-8") as fh:
                sys.stdout.write(fh.read())
            sys.stdout.write("\n")
        else:
            print(f"{kv_path}: status={status}")
    if not statuses:
        print(f"no campaign summaries under {args.dir}", file=sys.stderr)
        return 2
    return 0 if all(s == "PASS" for s in statuses) else 1


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "calibrate":
            return _cmd_calibrate(args)
        return _cmd_report(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - last-resort guard
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
