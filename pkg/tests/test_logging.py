import json
import logging

import pytest

from src.qcorr.config import ExperimentConfig
from src.qcorr.log_decorator import log_command
from src.qcorr.logging_config import LOG_FILE_NAME, JSONFormatter, setup_logging


def make_record(**extra):
    record = logging.LogRecord("qcorr.test", logging.INFO, __file__, 1, "hello %s", ("world",), None)
    for key, value in extra.items():
        setattr(record, key, value)
    return record


def test_formatter_drops_empty_fields():
    data = json.loads(JSONFormatter().format(make_record(command="scan")))
    assert data["message"] == "hello world"
    assert data["logger"] == "qcorr.test"
    assert data["command"] == "scan"
    assert data["timestamp"].endswith("Z")
    assert "error" not in data and "output_data" not in data


def test_setup_is_idempotent(tmp_path):
    logger = setup_logging("DEBUG", tmp_path)
    logger = setup_logging("INFO", tmp_path)
    assert len(logger.handlers) == 2
    assert logger.level == logging.INFO
    assert logger.propagate is False
    logging.getLogger("qcorr.events").info("to file")
    for handler in logger.handlers:
        handler.flush()
    lines = (tmp_path / LOG_FILE_NAME).read_text(encoding="utf-8").splitlines()
    assert json.loads(lines[-1])["message"] == "to file"
    setup_logging("INFO")


def test_log_command_records_success_and_failure(caplog):
    logger = setup_logging("INFO")
    logger.addHandler(caplog.handler)

    @log_command
    def cmd_demo(config, fail=False):
        if fail:
            raise ValueError("boom")
        return {"value": 1}

    assert cmd_demo(ExperimentConfig()) == {"value": 1}
    with pytest.raises(ValueError):
        cmd_demo(ExperimentConfig(), fail=True)
    logger.removeHandler(caplog.handler)

    records = [r for r in caplog.records if getattr(r, "command", None) == "demo"]
    assert [r.getMessage() for r in records] == [
        "Command demo started",
        "Command demo completed successfully",
        "Command demo started",
        "Command demo failed with error: boom",
    ]
    assert records[1].success is True and records[1].output_data == {"value": 1}
    assert records[3].success is False and "ValueError" in records[3].error
