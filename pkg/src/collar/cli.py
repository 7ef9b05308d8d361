"""Command-line entry point: ``collar <subcommand> --config <path>``.

Subcommands match the experiment kinds, plus ``validate`` which parses the
config and emits the hypothesis report only.  Exit codes: 0 all verdicts
pass, 1 a verdict failed, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import EXPERIMENT_KINDS, parse_config_file
from .errors import CollarError, ConfigError, ConfigParseError
from .experiments import EXIT_CONFIG_ERROR, EXIT_NUMERICAL_ERROR, run_experiment


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="collar",
        description="degenerate-diffusion laboratory: solves, barriers, duality checks",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for kind in EXPERIMENT_KINDS + ("validate",):
        p = sub.add_parser(kind, help=f"run a {kind} experiment" if kind != "validate"
                           else "parse the config and report hypotheses only")
        p.add_argument("--config", required=True, help="path to the experiment config")
        p.add_argument("--out", default=None, help="output directory (default ./out)")
        p.add_argument("--threads", type=int, default=1, help="parallel family members")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config_file(args.config)
    except FileNotFoundError:
        print(f"config file not found: {args.config}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except (ConfigParseError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR

    out_dir = args.out or cfg.get("experiment", "output_dir") or "out"

    if args.command == "validate":
        from .config import (
            build_boundary, build_density, build_domain, build_grid_from,
            build_initial, build_nonlinearity,
        )
        from .models import check_hypotheses

        try:
            domain = build_domain(cfg)
            grid = build_grid_from(cfg, domain)
            report = check_hypotheses(
                build_density(cfg, domain),
                build_nonlinearity(cfg),
                build_boundary(cfg, domain),
                build_initial(cfg, domain),
                grid,
            )
        except (ConfigParseError, ConfigError) as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return EXIT_CONFIG_ERROR
        except CollarError as exc:
            print(f"model error: {exc}", file=sys.stderr)
            return EXIT_NUMERICAL_ERROR
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        payload = report.as_dict()
        (out / "hypothesis.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        print(json.dumps(payload, indent=2, sort_keys=True))
        return 0 if report.core_ok else 1

    if cfg.kind != args.command:
        print(
            f"config declares experiment kind {cfg.kind!r} but subcommand is "
            f"{args.command!r}",
            file=sys.stderr,
        )
        return EXIT_CONFIG_ERROR

    code = run_experiment(cfg, out_dir, threads=args.threads)
    report_path = Path(out_dir) / "report.json"
    if report_path.exists():
        print(report_path)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
