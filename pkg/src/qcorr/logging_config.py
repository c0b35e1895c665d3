"""Structured JSON logging for qcorr, with optional daily rotating log files."""

import json
import logging
import logging.handlers
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Union

from .config import LOG_DIR_ENV, LOG_LEVEL_ENV

LOGGER_NAME = "qcorr"
LOG_FILE_NAME = "qcorr.log"

EXTRA_FIELDS = (
    "command",
    "input_params",
    "output_data",
    "execution_time_ms",
    "success",
    "error",
)


class JSONFormatter(logging.Formatter):
    """Formatter that outputs one JSON object per record."""

    def format(self, record):
        log_data = {
            "timestamp": datetime.fromtimestamp(record.created, tz=timezone.utc)
            .isoformat(timespec="milliseconds")
            .replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
        }
        for key in EXTRA_FIELDS:
            log_data[key] = getattr(record, key, None)
        if record.exc_info and log_data["error"] is None:
            log_data["error"] = self.formatException(record.exc_info)

        # Remove None values to keep logs clean
        log_data = {k: v for k, v in log_data.items() if v is not None}

        return json.dumps(log_data, ensure_ascii=False, default=str)


def _file_handler(log_dir: Path) -> logging.Handler:
    log_dir.mkdir(parents=True, exist_ok=True)
    handler = logging.handlers.TimedRotatingFileHandler(
        filename=str(log_dir / LOG_FILE_NAME),
        when="midnight",
        interval=1,
        backupCount=30,
        encoding="utf-8",
        utc=True,
    )
    handler.suffix = "%Y-%m-%d"
    return handler


def setup_logging(
    level: Union[int, str, None] = None, log_dir: Optional[Path] = None
) -> logging.Logger:
    """
    Configure the ``qcorr`` logger.

    JSON records go to stderr, and additionally to a daily rotating file when a
    log directory is given or QCORR_LOG_DIR is set. Calling it again replaces
    the handlers instead of stacking them.

    Args:
        level: Logging level (None reads QCORR_LOG_LEVEL, default INFO)
        log_dir: Directory for rotating log files (None reads QCORR_LOG_DIR)

    Returns:
        The configured logger
    """
    if level is None:
        level = os.getenv(LOG_LEVEL_ENV, "INFO")
    if isinstance(level, str):
        level = level.strip().upper()
    if log_dir is None and os.getenv(LOG_DIR_ENV):
        log_dir = Path(os.environ[LOG_DIR_ENV])

    logger = logging.getLogger(LOGGER_NAME)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    handlers = [logging.StreamHandler(sys.stderr)]
    if log_dir is not None:
        handlers.append(_file_handler(Path(log_dir)))
    for handler in handlers:
        handler.setFormatter(JSONFormatter())
        logger.addHandler(handler)

    logger.setLevel(level)
    # Prevent duplicate logs from propagating to root logger
    logger.propagate = False
    return logger
