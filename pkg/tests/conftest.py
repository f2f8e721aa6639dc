import sys
from collections import defaultdict
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

CRITERIA = {
    1: "deterministic decoherence of reversible programs",
    2: "only legitimate trajectories carry probability",
    3: "footprint-grain decoherence and coarse-graining",
    4: "record bit suppresses interference",
    5: "Hamiltonian H = U + U^+ and its fractional root",
    6: "exact random-program measure at l_max 18",
    7: "sampler agrees with enumeration at n = 10^6",
    8: "witness advantage for 0^64 and 0^128",
}

_outcomes = defaultdict(list)
_measured = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number a test checks")


@pytest.fixture
def measured(request):
    """Record ``name=value`` pairs that appear on the criterion's summary line."""
    marker = request.node.get_closest_marker("criterion")
    n = marker.args[0] if marker else None

    def record(name, value):
        if n is not None:
            _measured[n].append(f"{name}={value}")

    return record


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _outcomes[marker.args[0]].append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        results = _outcomes.get(n)
        if not results:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        detail = "; ".join(_measured.get(n, []))
        line = f"[{status}] {n}. {title}"
        terminalreporter.write_line(f"{line}  ({detail})" if detail else line)
