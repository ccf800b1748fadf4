from fractions import Fraction

import pytest

from rlakit import pilots


def pytest_runtest_logreport(report):
    """One visible pass/fail line per acceptance criterion."""
    if report.when == "call" and "test_acceptance" in report.nodeid:
        outcome = "PASS" if report.passed else "FAIL"
        name = report.nodeid.split("::")[-1]
        print(f"\n[ACCEPTANCE {outcome}] {name}", flush=True)


@pytest.fixture(scope="session")
def marin_a():
    return pilots.marin_measure_a()


@pytest.fixture(scope="session")
def yolo_w():
    return pilots.yolo_measure_w()


@pytest.fixture(scope="session")
def marin_b():
    return pilots.marin_measure_b()


@pytest.fixture(scope="session")
def santa_cruz():
    return pilots.santa_cruz_supervisor()


@pytest.fixture(scope="session")
def quarter():
    return Fraction(1, 4)
