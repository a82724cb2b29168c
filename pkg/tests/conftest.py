import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile(
    "repo", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")


@pytest.fixture(scope="session")
def e11():
    from twistrmt.curves import get_curve
    return get_curve("E11")


@pytest.fixture(scope="session")
def e19():
    from twistrmt.curves import get_curve
    return get_curve("E19")


@pytest.fixture(scope="session")
def e32():
    from twistrmt.curves import get_curve
    return get_curve("E32")


@pytest.fixture(scope="session")
def e32_theta_1e6():
    from twistrmt.scan import ScanConfig, run_scan
    return run_scan(ScanConfig("E32", 10 ** 6, parity="odd", engine="theta"))


@pytest.fixture(scope="session")
def e32_series_2000():
    from twistrmt.scan import ScanConfig, run_scan
    return run_scan(ScanConfig("E32", 2000, parity="odd", engine="series"))


@pytest.fixture(scope="session")
def e32_theta_2000():
    from twistrmt.scan import ScanConfig, run_scan
    return run_scan(ScanConfig("E32", 2000, parity="odd", engine="theta"))


@pytest.fixture(scope="session")
def e11_neg_5000():
    from twistrmt.scan import ScanConfig, run_scan
    return run_scan(ScanConfig("E11", 5000, d_sign=-1))


def pytest_terminal_summary(terminalreporter):
    import acceptance_log

    if acceptance_log.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_log.lines():
            terminalreporter.write_line(line)
