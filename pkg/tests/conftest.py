import os

import hypothesis
import pytest

hypothesis.settings.register_profile("default", deadline=None, max_examples=100)
hypothesis.settings.register_profile("fast", deadline=None, max_examples=10)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# Desk-scale campaign size used by the acceptance criteria.
CAMPAIGN_N = 500


def campaign_jobs() -> int:
    return int(os.environ.get("AEROCAP_JOBS", os.cpu_count() or 1))


class _CampaignCache:
    """Runs each (algorithm, entry set) campaign once per session."""

    def __init__(self):
        self._records = {}
        self.wall = {}

    def __call__(self, algorithm: str, entry_set: str = "conservative", n: int = CAMPAIGN_N):
        import time
        from dataclasses import replace

        from aerocap.montecarlo import DispersionSpec, run_campaign
        from aerocap.simulation import Scenario

        key = (algorithm, entry_set, n)
        if key not in self._records:
            sc = Scenario()
            sc = replace(sc, guidance=replace(sc.guidance, algorithm=algorithm))
            spec = DispersionSpec.for_entry_set(entry_set)
            t0 = time.perf_counter()
            self._records[key] = run_campaign(spec, sc, n, jobs=campaign_jobs())
            self.wall[key] = time.perf_counter() - t0
        return self._records[key]


@pytest.fixture(scope="session")
def campaigns():
    return _CampaignCache()


# One line per acceptance criterion, printed at the end of the session.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
