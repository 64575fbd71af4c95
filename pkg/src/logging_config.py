from __future__ import annotations

import logging
import os
import sys
from typing import Optional, Tuple

import structlog

_LOG_LEVELS = {
    "DEBUG": logging.DEBUG,
    "INFO": logging.INFO,
    "WARNING": logging.WARNING,
    "ERROR": logging.ERROR,
    "CRITICAL": logging.CRITICAL,
}

# Structlog -> stdlib logging bridge
_shared_processors = [
    structlog.contextvars.merge_contextvars,
    structlog.processors.add_log_level,
    structlog.processors.TimeStamper(fmt="iso"),
    structlog.processors.StackInfoRenderer(),
    structlog.processors.format_exc_info,
    structlog.stdlib.ProcessorFormatter.wrap_for_formatter,
]

# arguments of the last configure_logging call
_active: Tuple[str, Optional[str], str] = ("INFO", None, "json")


def configure_logging(level: str = "INFO", log_file: Optional[str] = None, fmt: str = "json") -> None:
    """Route structlog through the root logger.

    Handlers write to stderr (stdout carries result tables) and, when
    ``log_file`` is set, to that file. Calling again replaces the handlers.
    """
    global _active
    _active = (level, log_file, fmt)
    structlog.configure(
        processors=_shared_processors,
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )

    renderer = structlog.dev.ConsoleRenderer(colors=False) if fmt == "console" else structlog.processors.JSONRenderer()
    formatter = structlog.stdlib.ProcessorFormatter(processor=renderer)

    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(formatter)

    root_logger = logging.getLogger()
    for handler in list(root_logger.handlers):
        root_logger.removeHandler(handler)
        if isinstance(handler, logging.FileHandler):
            handler.close()
    root_logger.addHandler(stream_handler)

    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        root_logger.addHandler(file_handler)

    root_logger.setLevel(_LOG_LEVELS.get(level.upper(), logging.INFO))


def logging_args() -> Tuple[str, Optional[str], str]:
    """(level, log_file, fmt) for re-running configure_logging in a worker process."""
    return _active
