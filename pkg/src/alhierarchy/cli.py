"""Command line entry point: ``al <command> [options]``."""

import argparse
import asyncio
import json
import logging
import sys
import time
from pathlib import Path
from typing import Any, NoReturn, Sequence

from dotenv import load_dotenv

from . import __version__
from .commands import COMMANDS, CommandOutcome
from .config import CommandName, RunConfig, load_config
from .errors import ALError, ConfigError
from .hierarchy import PRESETS
from .lattice import BoundaryMode, ProfileKind
from .logging_utils import configure_logging, log_operation
from .serialization import make_json_serializable, write_records_csv
from .utils import Reporter, ReporterEvent, cli_event_printer, emit

load_dotenv()

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
ERROR_NAME = "error.json"


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors are validation errors (exit code 1), not argparse's exit code 2."""

    def error(self, message: str) -> NoReturn:
        raise ConfigError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="al",
        description="Run Ablowitz-Ladik hierarchy experiments on a finite lattice window",
    )
    parser.add_argument("command", choices=[name.value for name in CommandName])
    parser.add_argument("--config", type=Path, metavar="FILE", help="JSON run configuration")

    flow = parser.add_mutually_exclusive_group()
    flow.add_argument("--flow", choices=sorted(PRESETS), help="named flow preset")
    flow.add_argument(
        "--r", nargs=2, type=int, metavar=("R_MINUS", "R_PLUS"), help="explicit flow orders"
    )
    parser.add_argument("--c-plus", nargs="+", metavar="C", help="constants c_{0..r+,+}")
    parser.add_argument("--c-minus", nargs="+", metavar="C", help="constants c_{0..r-,-}")
    parser.add_argument("--phase-constant", metavar="C", help="constant of the phase preset")

    parser.add_argument("--window", nargs=2, type=int, metavar=("NMIN", "NMAX"))
    parser.add_argument("--boundary", choices=[mode.value for mode in BoundaryMode])
    parser.add_argument("--profile", choices=[kind.value for kind in ProfileKind])
    parser.add_argument("--h", type=float, help="time step")
    parser.add_argument("--t1", type=float, help="final time")
    parser.add_argument("--stride", type=int, help="sample every STRIDE steps")
    parser.add_argument("--seed", type=int, help="seed of the invariant suite")
    parser.add_argument("--out", metavar="DIR", help="output directory")
    parser.add_argument("--format", choices=["csv", "json"])
    parser.add_argument("--log-level", dest="log_level")
    parser.add_argument("--quiet", action="store_true", help="do not print progress events")
    return parser


def overrides_from_args(args: argparse.Namespace) -> tuple[dict[str, Any], dict[str, Any]]:
    """Return (merged overrides, wholesale section replacements) for ``load_config``."""

    overrides: dict[str, Any] = {
        "command": args.command,
        "window": {"boundary": args.boundary},
        "profile": {"kind": args.profile},
        "numerics": {"h": args.h, "t1": args.t1, "stride": args.stride, "seed": args.seed},
        "output": {"out_dir": args.out, "format": args.format},
        "log_level": args.log_level,
    }
    if args.window is not None:
        overrides["window"].update(n_min=args.window[0], n_max=args.window[1])

    replace: dict[str, Any] = {}
    if args.flow is not None:
        section: dict[str, Any] = {"preset": args.flow}
        if args.phase_constant is not None:
            section["phase_constant"] = args.phase_constant
        replace["flow"] = section
    elif args.r is not None:
        replace["flow"] = {
            "preset": None,
            "r": args.r,
            "c_plus": args.c_plus,
            "c_minus": args.c_minus,
        }
    else:
        overrides["flow"] = {
            "c_plus": args.c_plus,
            "c_minus": args.c_minus,
            "phase_constant": args.phase_constant,
        }
    return overrides, replace


def _write_json(path: Path, payload: Any) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(make_json_serializable(payload), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return path


def write_outcome(
    outcome: CommandOutcome, out_dir: Path, fmt: str, reporter: Reporter | None = None
) -> list[Path]:
    """Tables as CSV (or JSON rows), text records likewise, reports always as JSON."""

    paths: list[Path] = []
    for table in outcome.tables:
        if fmt == "csv":
            paths.append(table.write_csv(out_dir / f"{table.name}.csv"))
        else:
            payload = {"columns": table.columns, "rows": table.as_records()}
            paths.append(_write_json(out_dir / f"{table.name}.json", payload))
    for name, records in outcome.records.items():
        if fmt == "csv":
            paths.append(write_records_csv(out_dir / f"{name}.csv", records))
        else:
            paths.append(_write_json(out_dir / f"{name}_table.json", records))
    for name, report in outcome.reports.items():
        path = out_dir / f"{name}.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(report.model_dump_json(indent=2) + "\n", encoding="utf-8")
        paths.append(path)
    for path in paths:
        emit(reporter, ReporterEvent.ARTIFACT_WRITTEN, path=str(path))
    return paths


def build_manifest(
    config: RunConfig, *, exit_code: int, elapsed: float, artifacts: Sequence[Path]
) -> dict[str, Any]:
    """Resolved configuration with every default spelled out, plus run metadata."""

    manifest: dict[str, Any] = {
        "tool": "alhierarchy",
        "version": __version__,
        "command": config.command.value,
        "exit_code": exit_code,
        "wall_time_s": round(elapsed, 6),
        "config": json.loads(config.model_dump_json()),
        "artifacts": sorted(path.name for path in artifacts),
    }
    try:
        spec = config.flow_spec()
        window = config.lattice_window()
    except ALError:
        return manifest
    manifest["flow"] = json.loads(spec.model_dump_json())
    manifest["flow"]["label"] = spec.label
    manifest["lattice"] = {
        "n_min": window.n_min,
        "n_max": window.n_max,
        "boundary": window.boundary_mode.value,
        "edge_band": window.edge_band,
    }
    return manifest


async def execute(config: RunConfig, reporter: Reporter | None = None) -> int:
    """Run the configured command and write its artifacts, the manifest and any error."""

    command = COMMANDS[config.command]
    out_dir = config.output.path
    emit(reporter, ReporterEvent.RUN_STARTED, command=command.name.value, flow=config.flow.preset)
    started = time.perf_counter()
    artifacts: list[Path] = []
    try:
        with log_operation(
            logger=logger,
            start_message="Command started",
            success_message="Command finished",
            failure_message="Command aborted",
            base_extra={"command": command.name.value, "out_dir": str(out_dir)},
            summarize=lambda outcome: {"exit_code": outcome.exit_code},
        ) as context:
            outcome = context.record_result(await command.handler(config, reporter))
        artifacts.extend(write_outcome(outcome, out_dir, config.output.format, reporter))
        exit_code = outcome.exit_code
    except ALError as exc:
        print(f"[ERROR] {exc.message}", file=sys.stderr)
        artifacts.append(_write_json(out_dir / ERROR_NAME, exc.to_payload().as_dict()))
        exit_code = exc.exit_code

    elapsed = time.perf_counter() - started
    manifest = build_manifest(config, exit_code=exit_code, elapsed=elapsed, artifacts=artifacts)
    _write_json(out_dir / MANIFEST_NAME, manifest)
    emit(
        reporter,
        ReporterEvent.RUN_FINISHED,
        command=command.name.value,
        exit_code=exit_code,
        elapsed_s=elapsed,
    )
    return exit_code


async def main(argv: Sequence[str] | None = None) -> int:
    """Parse flags, resolve the configuration and run one command."""

    if argv is None:
        argv = sys.argv[1:]

    try:
        args = build_parser().parse_args(argv)
        overrides, replace = overrides_from_args(args)
        config = load_config(args.config, overrides, replace=replace)
    except ConfigError as exc:
        print(f"[ERROR] {exc.message}", file=sys.stderr)
        return exc.exit_code

    configure_logging(config.log_level)
    reporter = None if args.quiet else cli_event_printer
    try:
        return await execute(config, reporter)
    except OSError as exc:
        print(f"[ERROR] Failed to write artifacts: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(asyncio.run(main()))


if __name__ == "__main__":
    entrypoint()
