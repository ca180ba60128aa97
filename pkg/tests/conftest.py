"""Shared fixtures: golden designs and their (expensive) boundary tables."""

import time
from pathlib import Path

import pytest

from seqmtp import full_table, load_design

DESIGNS = Path(__file__).resolve().parent.parent / "designs"

# one line per acceptance criterion, filled by tests/test_acceptance.py
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def table_timings():
    """Seconds spent building each golden boundary table."""
    return {}


@pytest.fixture(scope="session")
def spec_ex1():
    return load_design(DESIGNS / "example1.json")


@pytest.fixture(scope="session")
def spec_ex1_bh():
    return load_design(DESIGNS / "example1_bh.json")


@pytest.fixture(scope="session")
def spec_ex2():
    return load_design(DESIGNS / "example2.json")


@pytest.fixture(scope="session")
def spec_multiarm():
    return load_design(DESIGNS / "multiarm.json")


def _timed_table(spec, timings, name, **kwargs):
    t0 = time.perf_counter()
    table = full_table(spec, **kwargs)
    timings[name] = time.perf_counter() - t0
    return table


@pytest.fixture(scope="session")
def table_ex1(spec_ex1, table_timings):
    return _timed_table(spec_ex1, table_timings, "ex1")


@pytest.fixture(scope="session")
def table_ex1_bh(spec_ex1_bh, table_timings):
    return _timed_table(spec_ex1_bh, table_timings, "ex1_bh")


@pytest.fixture(scope="session")
def table_ex2(spec_ex2, table_timings):
    return _timed_table(spec_ex2, table_timings, "ex2")


@pytest.fixture(scope="session")
def table_multiarm_full(spec_multiarm, table_timings):
    """A.6 design restricted to the complete intersection (12-dim solves)."""
    full = (1 << spec_multiarm.m) - 1
    return _timed_table(spec_multiarm, table_timings, "multiarm",
                        subsets=[full])
