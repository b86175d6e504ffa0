import numpy as np
import pytest

from sslzsl.data import SyntheticSpec, make_synthetic


@pytest.fixture(scope="session")
def zero_noise():
    return make_synthetic(SyntheticSpec(d_f=16, d_a=8, seen_classes=10, unseen_classes=4, per_class=20, seed=0))


@pytest.fixture(scope="session")
def noisy():
    return make_synthetic(SyntheticSpec(noise_sigma=0.3, seed=0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_RESULTS = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        detail = dict(report.user_properties).get("detail", "")
        ACCEPTANCE_RESULTS.append((name, report.outcome, detail))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in ACCEPTANCE_RESULTS:
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark}  {name}  {detail}")
