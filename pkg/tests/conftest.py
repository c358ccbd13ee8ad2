import os
import sys
import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("nmq", deadline=None, max_examples=25,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("nmq")

SUITE_BUDGET = 300.0
ACCEPTANCE = {}
_START = time.perf_counter()


def record(number, ok, detail):
    """Store one acceptance line; printed at the end of the session."""
    ACCEPTANCE[number] = (bool(ok), detail)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    elapsed = time.perf_counter() - _START
    ACCEPTANCE[13] = (elapsed < SUITE_BUDGET,
                      f"suite wall time {elapsed:.1f} s (budget {SUITE_BUDGET:.0f} s)")
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_sessionfinish(session, exitstatus):
    if ACCEPTANCE and time.perf_counter() - _START >= SUITE_BUDGET and exitstatus == 0:
        session.exitstatus = 1
