import os

import pytest

from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=300,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# Acceptance-criterion registry: tests record (criterion, part, ok, detail);
# the terminal summary prints one PASS/FAIL line per criterion.
ACCEPTANCE: dict = {}


def record_criterion(number: int, part: str, ok: bool, detail: str) -> None:
    ACCEPTANCE.setdefault(number, []).append((part, bool(ok), detail))
    print(f"criterion {number:2d} [{part}] {'PASS' if ok else 'FAIL'}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        parts = ACCEPTANCE[number]
        ok = all(p[1] for p in parts)
        detail = "; ".join(f"{p[0]}: {'ok' if p[1] else 'FAILED'} ({p[2]})" for p in parts)
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'} -- {detail}")


@pytest.fixture
def criterion():
    return record_criterion
