import json
import os

import pytest

from logmodcert import config
from logmodcert.cli import run


@pytest.fixture(autouse=True)
def restore_tolerances():
    saved = config.current_tolerances()
    yield
    config.apply_tolerance_overrides(saved)


@pytest.fixture
def run_cli(tmp_path):
    """Run `lmc <argv...> --out <tmp>` and return (exit code, report dict or None)."""

    def _run(*argv, report=None):
        code = run([*argv, "--out", str(tmp_path), "--threads", "2"])
        if report is None:
            return code, None
        path = os.path.join(tmp_path, report)
        if not os.path.exists(path):
            return code, None
        with open(path, "r", encoding="utf-8") as f:
            return code, json.load(f)

    _run.out = tmp_path
    return _run
