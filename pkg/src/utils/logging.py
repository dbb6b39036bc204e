"""Logging configuration for the Elastic-Net provisioning simulator."""

import configparser
import io
import json
import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from typing import Any, Dict, MutableMapping, Optional, Tuple

DEFAULT_APP_NAME = "elastic-net"


class JSONFormatter(logging.Formatter):
    """
    Single-line formatter: ``timestamp LEVEL: message [key=value ...]``.

    Dict messages (e.g. a decision snapshot) are dumped as sorted JSON. The
    formatter's own fields and the context attached by ``LoggerAdapter`` are
    appended in key order; the record's context wins on a shared key.
    """

    def __init__(self, **fields):
        self.additional_fields = fields
        super().__init__()

    def format(self, record: logging.LogRecord) -> str:
        if isinstance(record.msg, dict):
            text = json.dumps(record.msg, sort_keys=True)
        else:
            text = record.getMessage()

        context = {**self.additional_fields, **(getattr(record, "context", None) or {})}
        if context:
            text += " [" + " ".join(f"{k}={v}" for k, v in sorted(context.items())) + "]"
        if record.exc_info:
            text += "\n" + self.formatException(record.exc_info)

        return f"{self.formatTime(record)} {record.levelname}: {text}"


def _level_name_to_int(name: str) -> Optional[int]:
    value = getattr(logging, name.strip().upper(), None) if name else None
    return value if isinstance(value, int) else None


def _resolve_level(level: int, config_path: Optional[str]) -> int:
    """Scenario ``[logging] level`` beats the caller's level; ``LOG_LEVEL`` beats both."""
    if config_path and os.path.exists(config_path):
        scenario = configparser.ConfigParser(interpolation=None)
        try:
            scenario.read(config_path, encoding="utf-8")
            from_file = _level_name_to_int(scenario.get("logging", "level", fallback=""))
        except configparser.Error:
            # syntax errors are reported with line numbers by ConfigManager
            from_file = None
        if from_file is not None:
            level = from_file

    from_env = _level_name_to_int(os.getenv("LOG_LEVEL", ""))
    return from_env if from_env is not None else level


def setup_logging(
    log_dir: str,
    log_file: str,
    level: int = logging.INFO,
    max_bytes: int = 10 * 1024 * 1024,  # 10MB
    backup_count: int = 5,
    add_console_handler: bool = True,
    additional_fields: Optional[Dict[str, Any]] = None,
    config_path: Optional[str] = None,
) -> logging.Logger:
    """
    Route every module logger of a simulator run to a rotating log file.

    Handlers are attached to the root logger and replace any left over from a
    previous run in the same process (sweeps and tests call this repeatedly).
    The level comes from ``LOG_LEVEL``, then the scenario's ``[logging] level``,
    then ``level``.

    Args:
        log_dir: Directory for the log file (created if missing)
        log_file: File name inside ``log_dir``
        level: Fallback level
        max_bytes: Rotation size
        backup_count: Rotated files kept
        add_console_handler: Also log to stderr; the CSV reports never go there
        additional_fields: Fields appended to every line; ``app`` also names the returned logger
        config_path: Scenario INI consulted for ``[logging] level``

    Returns:
        The application logger
    """
    os.makedirs(log_dir, exist_ok=True)
    root = logging.getLogger()
    root.setLevel(_resolve_level(level, config_path))
    for stale in list(root.handlers):
        stale.close()
        root.removeHandler(stale)

    fields = additional_fields or {}
    formatter = JSONFormatter(**fields)
    handlers = [
        RotatingFileHandler(
            os.path.join(log_dir, log_file),
            maxBytes=max_bytes,
            backupCount=backup_count,
            encoding="utf-8",
        )
    ]
    if add_console_handler:
        try:
            sys.stderr.reconfigure(encoding="utf-8", errors="replace")
        except (AttributeError, ValueError, io.UnsupportedOperation):
            pass
        handlers.append(logging.StreamHandler(sys.stderr))

    for handler in handlers:
        handler.setFormatter(formatter)
        root.addHandler(handler)

    return logging.getLogger(fields.get("app", DEFAULT_APP_NAME))


class LoggerAdapter(logging.LoggerAdapter):
    """Merges a fixed context (e.g. ``{"cluster": "downtown"}``) into each record."""

    def process(self, msg: Any, kwargs: MutableMapping[str, Any]) -> Tuple[Any, MutableMapping[str, Any]]:
        extra = kwargs.setdefault("extra", {})
        extra["context"] = {**extra.get("context", {}), **self.extra}
        return msg, kwargs


def get_logger(name: str, context: Optional[Dict[str, Any]] = None) -> LoggerAdapter:
    """Module logger tagged with ``context`` (one adapter per cluster replay)."""
    return LoggerAdapter(logging.getLogger(name), context or {})
