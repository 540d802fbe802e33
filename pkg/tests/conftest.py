import hashlib
import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from dvsig.params import standard_params  # noqa: E402
from dvsig.sampling import RandomSource  # noqa: E402


@pytest.fixture(scope="session")
def toy():
    return standard_params("toy")


@pytest.fixture(scope="session")
def desk():
    return standard_params("desk")


@pytest.fixture
def rng(request):
    # a fresh, test-specific deterministic stream
    return RandomSource(hashlib.sha256(request.node.nodeid.encode()).digest())


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion; repeated in the terminal summary."""

    def report(label: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  criterion {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        with request.config.pluginmanager.get_plugin("capturemanager").global_and_fixture_disabled():
            print("\n" + line)
        return ok

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
