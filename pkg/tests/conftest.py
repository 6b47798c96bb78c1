import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from fairselect.core import Instance

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def record_criterion():
    """Store one pass/fail line per acceptance criterion for the terminal summary."""

    def record(name: str, passed: bool, detail: str) -> bool:
        _ACCEPTANCE.append((name, bool(passed), detail))
        return bool(passed)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")


def random_instance(rng: np.random.Generator, n: int, p: int, max_cap: int | None = None) -> Instance:
    """Distinct uniform utilities, uniformly random preferences, random capacities."""
    top = max_cap if max_cap is not None else max(1, n // max(p, 1) + 1)
    caps = tuple(int(k) for k in rng.integers(0, top + 1, p))
    prefs = np.array([rng.permutation(p) for _ in range(n)]).reshape(n, p)
    return Instance(caps, rng.random(n), prefs)
