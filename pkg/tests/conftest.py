"""Shared fixtures and the acceptance summary printed at the end of a run."""

import pytest

from pouchclutch.clutch import reference_calibrated_config

ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def calibrated():
    return reference_calibrated_config()


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
