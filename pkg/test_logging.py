#!/usr/bin/env python3
"""
Tests for log formatting, cluster context and level resolution.

Usage:
  python test_logging.py
"""

import logging
import os
import sys
import tempfile
import unittest
from unittest.mock import patch

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from src.utils.logging import JSONFormatter, _resolve_level, get_logger, setup_logging  # noqa: E402


class ListHandler(logging.Handler):
    def __init__(self):
        super().__init__()
        self.lines = []

    def emit(self, record):
        self.lines.append(self.format(record))


def record(msg, args=()):
    return logging.LogRecord("modules.runner", logging.WARNING, __file__, 1, msg, args, None)


class TestFormatter(unittest.TestCase):
    """Single-line output."""

    def test_plain_message(self):
        line = JSONFormatter().format(record("mu_a=%s", (0.5,)))
        self.assertTrue(line.endswith(" WARNING: mu_a=0.5"))

    def test_dict_message(self):
        line = JSONFormatter().format(record({"n_cores": 2, "mu_a": 0.5}))
        self.assertTrue(line.endswith('WARNING: {"mu_a": 0.5, "n_cores": 2}'))

    def test_formatter_fields(self):
        line = JSONFormatter(app="elastic-net").format(record("validation finished"))
        self.assertTrue(line.endswith("WARNING: validation finished [app=elastic-net]"))

    def test_record_context_merges_with_fields(self):
        r = record("sweep point done")
        r.context = {"cluster": "downtown", "app": "sweep"}
        line = JSONFormatter(app="elastic-net").format(r)
        self.assertTrue(line.endswith("sweep point done [app=sweep cluster=downtown]"))

    def test_cluster_context(self):
        handler = ListHandler()
        handler.setFormatter(JSONFormatter())
        base = logging.getLogger("test_logging.context")
        base.propagate = False
        base.addHandler(handler)
        try:
            get_logger("test_logging.context", {"cluster": "downtown", "scheme": "elastic"}).warning(
                "infeasible at 13:00"
            )
        finally:
            base.removeHandler(handler)
        self.assertEqual(len(handler.lines), 1)
        self.assertTrue(handler.lines[0].endswith("infeasible at 13:00 [cluster=downtown scheme=elastic]"))


class TestLevels(unittest.TestCase):
    """LOG_LEVEL, then the scenario, then the caller."""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.ini = os.path.join(self.tmp.name, "scenario.ini")
        with open(self.ini, "w", encoding="utf-8") as f:
            f.write("[logging]\nlevel = DEBUG\n")

    def tearDown(self):
        root = logging.getLogger()
        for handler in list(root.handlers):
            handler.close()
            root.removeHandler(handler)
        self.tmp.cleanup()

    def test_caller_default(self):
        with patch.dict(os.environ, {}, clear=True):
            self.assertEqual(_resolve_level(logging.INFO, None), logging.INFO)

    def test_scenario_level(self):
        with patch.dict(os.environ, {}, clear=True):
            self.assertEqual(_resolve_level(logging.INFO, self.ini), logging.DEBUG)

    def test_environment_wins(self):
        with patch.dict(os.environ, {"LOG_LEVEL": "error"}):
            self.assertEqual(_resolve_level(logging.INFO, self.ini), logging.ERROR)

    def test_unknown_names_ignored(self):
        with patch.dict(os.environ, {"LOG_LEVEL": "LOUD"}):
            self.assertEqual(_resolve_level(logging.WARNING, None), logging.WARNING)

    def test_setup_writes_file(self):
        logs = os.path.join(self.tmp.name, "logs")
        with patch.dict(os.environ, {}, clear=True):
            logger = setup_logging(
                logs,
                "run.log",
                add_console_handler=False,
                additional_fields={"run": "nightly"},
                config_path=self.ini,
            )
        self.assertEqual(logger.name, "elastic-net")
        self.assertEqual(logging.getLogger().level, logging.DEBUG)
        self.assertEqual(len(logging.getLogger().handlers), 1)
        logger.info("scenario loaded")
        logging.getLogger().handlers[0].flush()
        with open(os.path.join(logs, "run.log"), encoding="utf-8") as f:
            text = f.read()
        self.assertIn("INFO: scenario loaded [run=nightly]", text)


def main():
    loader = unittest.TestLoader()
    suite = unittest.TestSuite()
    suite.addTests(loader.loadTestsFromTestCase(TestFormatter))
    suite.addTests(loader.loadTestsFromTestCase(TestLevels))

    runner = unittest.TextTestRunner(verbosity=2)
    result = runner.run(suite)
    sys.exit(0 if result.wasSuccessful() else 1)


if __name__ == "__main__":
    main()
