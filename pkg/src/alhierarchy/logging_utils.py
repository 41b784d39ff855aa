"""Logging utilities shared across the alhierarchy modules."""

from __future__ import annotations

import logging
import time
from contextlib import contextmanager
from typing import Any, Callable, Iterator

PACKAGE_LOGGER = "alhierarchy"


class _RunContext:
    """State of one logged run: timing and the result used for the success record."""

    def __init__(
        self,
        *,
        logger: logging.Logger,
        base_extra: dict[str, Any],
        summarize: Callable[[Any], dict[str, Any]] | None,
        success_message: str,
    ) -> None:
        self._logger = logger
        self._base_extra = base_extra
        self._summarize = summarize
        self._success_message = success_message
        self._started = time.perf_counter()
        self._result: Any = None

    @property
    def elapsed(self) -> float:
        """Wall time in seconds since the run started."""

        return time.perf_counter() - self._started

    def record_result(self, result: Any) -> Any:
        self._result = result
        return result

    def log_success(self) -> None:
        extra = dict(self._base_extra)
        extra["elapsed_s"] = round(self.elapsed, 6)
        if self._summarize is not None and self._result is not None:
            summary = self._summarize(self._result)
            if isinstance(summary, dict):
                extra.update(summary)
        self._logger.info(self._success_message, extra=extra)


@contextmanager
def log_operation(
    *,
    logger: logging.Logger,
    start_message: str,
    success_message: str,
    failure_message: str,
    base_extra: dict[str, Any],
    summarize: Callable[[Any], dict[str, Any]] | None = None,
) -> Iterator[_RunContext]:
    """Log start, success and failure of a numerical run with shared context.

    The success record carries ``elapsed_s`` plus whatever ``summarize`` extracts
    from the value passed to ``record_result``.
    """

    logger.info(start_message, extra=base_extra)
    context = _RunContext(
        logger=logger,
        base_extra=base_extra,
        summarize=summarize,
        success_message=success_message,
    )
    try:
        yield context
    except Exception:
        logger.exception(failure_message, extra=base_extra)
        raise
    else:
        context.log_success()


def configure_logging(level: str = "WARNING") -> None:
    """Install a single stderr handler on the package logger."""

    logger = logging.getLogger(PACKAGE_LOGGER)
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s: %(message)s"))
        logger.addHandler(handler)
    logger.setLevel(level.upper())


__all__ = ["configure_logging", "log_operation"]
