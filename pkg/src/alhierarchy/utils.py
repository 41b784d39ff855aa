import asyncio
import functools
import json
from enum import Enum
from typing import Any, Callable, Optional

from .serialization import make_json_serializable


class ReporterEvent(str, Enum):
    RUN_STARTED = "run_started"
    PROGRESS = "progress"
    OBSERVATION = "observation"
    CHECK_RESULT = "check_result"
    ARTIFACT_WRITTEN = "artifact_written"
    WARNING = "warning"
    RUN_FINISHED = "run_finished"


Reporter = Callable[[ReporterEvent, dict[str, Any]], None]


def emit(reporter: Optional[Reporter], event: ReporterEvent, **payload: Any) -> None:
    if reporter is not None:
        reporter(event, payload)


async def run(func, *args, **kwargs):
    """Await coroutine functions, run plain callables in the default executor."""

    if asyncio.iscoroutinefunction(func):
        return await func(*args, **kwargs)
    loop = asyncio.get_running_loop()
    return await loop.run_in_executor(None, functools.partial(func, *args, **kwargs))


def _format_payload(payload: object) -> str:
    """Render report fragments for CLI output."""

    if isinstance(payload, str):
        return payload

    try:
        return json.dumps(make_json_serializable(payload), indent=2, sort_keys=True)
    except (TypeError, ValueError):
        return str(payload)


def cli_event_printer(event: ReporterEvent, payload: dict[str, Any]) -> None:
    """Print run events in a human-friendly format."""

    command = payload.get("command")
    prefix = f"[{command}] " if command else ""

    if event is ReporterEvent.RUN_STARTED:
        print(f"{prefix}-> starting ({payload.get('flow', 'n/a')})")
    elif event is ReporterEvent.PROGRESS:
        time, sup = payload.get("time", 0.0), payload.get("sup_norm", 0.0)
        print(f"{prefix}t = {time:.6g}  sup = {sup:.6g}")
    elif event is ReporterEvent.OBSERVATION:
        print(f"{prefix}{payload.get('name', 'value')}: {_format_payload(payload.get('value'))}")
    elif event is ReporterEvent.CHECK_RESULT:
        status = "PASS" if payload.get("passed") else "FAIL"
        print(f"{prefix}{status} {payload.get('name', '?')}  {payload.get('detail', '')}".rstrip())
    elif event is ReporterEvent.ARTIFACT_WRITTEN:
        print(f"{prefix}wrote {payload.get('path')}")
    elif event is ReporterEvent.WARNING:
        print(f"{prefix}warning: {payload.get('message', '')}")
    elif event is ReporterEvent.RUN_FINISHED:
        elapsed = payload.get("elapsed_s")
        suffix = f" in {elapsed:.3f}s" if isinstance(elapsed, (int, float)) else ""
        print(f"{prefix}<- finished with exit code {payload.get('exit_code', 0)}{suffix}")
