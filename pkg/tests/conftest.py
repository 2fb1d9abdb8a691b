import os
from collections import OrderedDict

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


class AcceptanceLog:
    """Collects sub-check outcomes; one summary line per criterion is printed at the end."""

    def __init__(self):
        self.results = OrderedDict()

    def check(self, criterion: str, what: str, ok: bool, detail: str = "") -> bool:
        self.results.setdefault(criterion, []).append((what, bool(ok), detail))
        return bool(ok)

    def failures(self, criterion: str) -> list[str]:
        return [f"{w}: {d}" for w, ok, d in self.results.get(criterion, []) if not ok]

    def lines(self) -> list[str]:
        out = []
        for crit in sorted(self.results, key=lambda c: int(c)):
            checks = self.results[crit]
            status = "PASS" if all(ok for _, ok, _ in checks) else "FAIL"
            passed = sum(ok for _, ok, _ in checks)
            out.append(f"criterion {crit:>2}: {status} ({passed}/{len(checks)} checks)")
            for what, ok, detail in checks:
                if not ok:
                    out.append(f"    failed: {what} [{detail}]")
        return out


_LOG = AcceptanceLog()


@pytest.fixture(scope="session")
def acceptance():
    return _LOG


def pytest_terminal_summary(terminalreporter):
    if _LOG.results:
        terminalreporter.section("acceptance criteria")
        for line in _LOG.lines():
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def table():
    from klq.table import build_table

    return build_table()


@pytest.fixture(scope="session")
def solutions():
    """Every legal minimax variant solved with the default seed."""
    from klq.minimax import all_variants, solve_minimax

    return {v: solve_minimax(v) for v in all_variants()}
