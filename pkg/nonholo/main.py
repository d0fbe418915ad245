"""Command-line front end.

    nonholo run scenarios/veselova-affine.cfg --t-end 5 --pdf out/veselova.pdf
    nonholo batch scenarios/ --ledger runs.db
    nonholo check my.cfg
    nonholo list-models
    nonholo runs --ledger runs.db --limit 10
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import Dict, Optional, Sequence

from nonholo import __version__
from nonholo.core.errors import EXIT_CONFIG, EXIT_OK, ConfigError, NonholoError, exit_code_for
from nonholo.core.integrator import METHODS
from nonholo.core.settings import Settings, load_settings

logger = logging.getLogger(__name__)

LOG_LEVEL_ENV = "NONHOLO_LOG_LEVEL"


def _add_override_flags(p: argparse.ArgumentParser, single: bool) -> None:
    p.add_argument("--h", type=float, help="fixed step (rk4) or initial step (adaptive)")
    p.add_argument("--t-end", dest="t_end", type=float, help="final time")
    p.add_argument("--method", choices=METHODS)
    p.add_argument("--project", dest="project", action="store_true", default=None, help="project onto the constraint manifold after each step")
    p.add_argument("--no-project", dest="project", action="store_false")
    p.add_argument("--seed", type=int, help="rng seed (overrides [run] seed and NONHOLO_SEED)")
    p.add_argument("--ledger", help="SQLite run ledger to record into")
    if single:
        p.add_argument("--csv", help="trajectory CSV path")
        p.add_argument("--report", help="text report path")
        p.add_argument("--pdf", help="also draw a PDF drift report")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nonholo", description="Moving-energy integrals of nonholonomic systems with affine constraints.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--settings", help="settings.json to use instead of the default location")
    parser.add_argument(
        "--log-level",
        default=os.environ.get(LOG_LEVEL_ENV, "WARNING"),
        help=f"logging level (default from {LOG_LEVEL_ENV}, else WARNING)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario file")
    p_run.add_argument("scenario")
    _add_override_flags(p_run, single=True)

    p_batch = sub.add_parser("batch", help="run every *.cfg in a directory in parallel workers")
    p_batch.add_argument("directory")
    p_batch.add_argument("--workers", type=int)
    _add_override_flags(p_batch, single=False)

    p_check = sub.add_parser("check", help="parse and validate a scenario without running it")
    p_check.add_argument("scenario")

    sub.add_parser("list-models", help="list registered model ids")

    p_runs = sub.add_parser("runs", help="list runs recorded in the ledger")
    p_runs.add_argument("--ledger")
    p_runs.add_argument("--limit", type=int, default=20)
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, object]:
    keys = ("h", "t_end", "method", "project", "seed", "csv", "report", "pdf")
    return {k: getattr(args, k, None) for k in keys if getattr(args, k, None) is not None}


def _cmd_run(args: argparse.Namespace, settings: Settings) -> int:
    from nonholo.scenario.config import load_scenario
    from nonholo.scenario.runner import run_scenario

    scenario = load_scenario(args.scenario, settings).with_overrides(settings, **_overrides(args))
    summary = run_scenario(scenario, settings, args.ledger)
    if summary.error:
        print(f"nonholo: {scenario.name}: {summary.error}", file=sys.stderr)
    print(f"{scenario.name}: exit={summary.exit_code} records={summary.records} csv={summary.csv_path} report={summary.report_path}")
    return summary.exit_code


def _cmd_batch(args: argparse.Namespace, settings: Settings) -> int:
    from nonholo.scenario.runner import run_batch

    directory = Path(args.directory)
    if not directory.is_dir():
        raise ConfigError(f"not a directory: {directory}")
    paths = sorted(str(p) for p in directory.glob("*.cfg"))
    if not paths:
        raise ConfigError(f"no *.cfg scenarios in {directory}")
    results = run_batch(paths, settings, _overrides(args), workers=args.workers, ledger=args.ledger)
    worst = EXIT_OK
    for path, code, error in results:
        line = f"{path}: exit={code}"
        if error:
            line += f" error={error}"
        print(line)
        worst = max(worst, code)
    return worst


def _cmd_check(args: argparse.Namespace, settings: Settings) -> int:
    from nonholo.scenario.config import load_scenario

    scenario = load_scenario(args.scenario, settings)
    integ = scenario.integrator
    print(
        f"{scenario.name}: ok model={scenario.model_id} method={integ.method} h={integ.h:g} t_end={integ.t_end:g} "
        f"observables={','.join(scenario.recorded_observables)}"
    )
    return EXIT_OK


def _cmd_list_models(_args: argparse.Namespace, _settings: Settings) -> int:
    from nonholo.models.registry import list_models

    for model_id, description in list_models():
        print(f"{model_id:<22} {description}")
    return EXIT_OK


def _cmd_runs(args: argparse.Namespace, settings: Settings) -> int:
    from nonholo.data.repo import list_runs

    ledger = args.ledger or settings.ledger_path
    if not ledger:
        raise ConfigError("no ledger: pass --ledger or set ledger_path in settings.json", key="ledger_path")
    for run in list_runs(ledger, args.limit):
        print(
            f"{run.id:>5} {run.created_at:%Y-%m-%d %H:%M:%S} {run.scenario} model={run.model_id} "
            f"method={run.method} h={run.h:g} t_end={run.t_end:g} seed={run.seed} exit={run.exit_code}"
        )
    return EXIT_OK


COMMANDS = {
    "run": _cmd_run,
    "batch": _cmd_batch,
    "check": _cmd_check,
    "list-models": _cmd_list_models,
    "runs": _cmd_runs,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(list(argv) if argv is not None else None)
    level = getattr(logging, str(args.log_level).upper(), None)
    if not isinstance(level, int):
        print(f"nonholo: unknown log level '{args.log_level}'", file=sys.stderr)
        return EXIT_CONFIG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")

    settings = load_settings(args.settings)
    try:
        return COMMANDS[args.command](args, settings)
    except NonholoError as e:
        print(f"nonholo: {e}", file=sys.stderr)
        return exit_code_for(e)
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    sys.exit(main())
