"""Decorator for logging CLI subcommands with their config and outcome."""

import json
import logging
import time
from functools import wraps
from typing import Any, Callable, Dict

logger = logging.getLogger("qcorr.cli")

MAX_OUTPUT_CHARS = 10_000


def _summarize(result: Any) -> Any:
    """Keep logged output small: large dicts/lists are replaced by a truncated summary."""
    if not isinstance(result, (dict, list)):
        return result
    result_json = json.dumps(result, default=str)
    if len(result_json) <= MAX_OUTPUT_CHARS:
        return result
    if isinstance(result, dict):
        return {
            "_truncated": True,
            "_size": len(result_json),
            **{k: v for k, v in list(result.items())[:5]},
        }
    return {"_truncated": True, "_size": len(result_json), "_length": len(result)}


def log_command(func: Callable) -> Callable:
    """
    Log start, completion and failure of a subcommand.

    The wrapped function takes an ExperimentConfig as its first argument and
    returns a dict summary; exceptions are logged and re-raised.
    """
    command = func.__name__.removeprefix("cmd_")

    @wraps(func)
    def wrapper(config, *args, **kwargs):
        input_params: Dict[str, Any] = config.to_dict() if hasattr(config, "to_dict") else {}
        start_time = time.perf_counter()
        logger.info(
            f"Command {command} started",
            extra={"command": command, "input_params": input_params},
        )
        try:
            result = func(config, *args, **kwargs)
        except Exception as e:
            logger.error(
                f"Command {command} failed with error: {e}",
                extra={
                    "command": command,
                    "execution_time_ms": int((time.perf_counter() - start_time) * 1000),
                    "success": False,
                    "error": f"{type(e).__name__}: {e}",
                },
            )
            raise

        logger.info(
            f"Command {command} completed successfully",
            extra={
                "command": command,
                "output_data": _summarize(result),
                "execution_time_ms": int((time.perf_counter() - start_time) * 1000),
                "success": True,
            },
        )
        return result

    return wrapper
