import functools
import time

import pytest

from strandlab.protocols import get_scenario
from strandlab.search import check_property

# criterion number -> (passed, line); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@functools.lru_cache(maxsize=None)
def verdict(scenario: str, prop: str, disabled: tuple = (), sessions: tuple = ()):
    """Cached (verdict, seconds) so flip tests and the acceptance run share work."""
    sc = get_scenario(scenario)
    spec, cfg = sc.configure(disabled, sessions)
    t0 = time.perf_counter()
    v = check_property(spec, sc.property(prop), cfg)
    return v, time.perf_counter() - t0


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[n][1])


@pytest.fixture
def data_dir():
    from importlib import resources
    return resources.files("strandlab") / "data"
