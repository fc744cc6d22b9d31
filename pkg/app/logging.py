"""Structured logging for ussl runs.

structlog on top of stdlib logging. `--debug` gives colored console lines,
everything else is one JSON object per line. Both go to stderr; stdout
carries only rendered reports.

Events are key-value, never formatted strings:

    logger = get_logger(__name__)
    logger.info("Epoch finished", epoch=3, l_ce=0.41)

Array-valued fields are allowed: numpy scalars become Python numbers and
arrays are summarized by shape, mean and range.
"""

from __future__ import annotations

import logging
import sys
from typing import Any, MutableMapping

import numpy as np
import structlog

# Arrays up to this size are logged in full
ARRAY_INLINE_LIMIT = 8

QUIET_LOGGERS = ("numpy", "scipy", "matplotlib")


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        if value.size <= ARRAY_INLINE_LIMIT:
            return value.tolist()
        finite = value[np.isfinite(value)] if value.dtype.kind == "f" else value
        summary: dict[str, Any] = {"shape": list(value.shape)}
        if finite.size:
            summary.update(mean=float(finite.mean()), min=float(finite.min()), max=float(finite.max()))
        return summary
    return value


def numpy_values(_: Any, __: str, event_dict: MutableMapping[str, Any]) -> MutableMapping[str, Any]:
    """structlog processor: make numpy values JSON-serializable."""
    for key, value in event_dict.items():
        event_dict[key] = _plain(value)
    return event_dict


def resolve_level(debug: bool, log_level: str | None) -> int:
    if log_level:
        level = logging.getLevelName(log_level.upper())
        return level if isinstance(level, int) else logging.INFO
    return logging.DEBUG if debug else logging.INFO


def setup_logging(debug: bool = False, log_level: str | None = None) -> None:
    """
    Configure structured logging for one CLI invocation.

    Args:
        debug: Colored console output instead of JSON lines
        log_level: Level name overriding the default (DEBUG with `debug`, INFO otherwise);
            unknown names fall back to INFO
    """
    level = resolve_level(debug, log_level)
    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=level)
    for name in QUIET_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)

    processors: list[structlog.types.Processor] = [
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        numpy_values,
    ]
    if debug:
        processors.append(structlog.dev.ConsoleRenderer(colors=True))
    else:
        processors += [structlog.processors.format_exc_info, structlog.processors.JSONRenderer()]

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.make_filtering_bound_logger(level),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        cache_logger_on_first_use=True,
    )


def get_logger(name: str) -> structlog.stdlib.BoundLogger:
    return structlog.get_logger(name)


def log_context(**kwargs: Any) -> structlog.contextvars.bound_contextvars:
    """Bind `command`, `seed`, `stage`, `criterion`... to every event inside the block."""
    return structlog.contextvars.bound_contextvars(**kwargs)
