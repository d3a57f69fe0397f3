import math
import re

import pytest

from cmcb import SchwarzschildParams, catalog_model, schwarzschild_model, sphere_spectrum

_ACCEPTANCE: list[tuple[str, str]] = []


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): exit criterion, reported in the summary")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    if call.when == "call" or (call.when == "setup" and call.excinfo is not None):
        outcome = "PASS" if call.excinfo is None else "FAIL"
        _ACCEPTANCE.append((marker.args[0], outcome))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    def key(item):
        m = re.match(r"AC(\d+)(\w*)", item[0])
        return (int(m.group(1)), m.group(2)) if m else (10 ** 6, item[0])

    for label, outcome in sorted(_ACCEPTANCE, key=key):
        terminalreporter.write_line(f"{outcome}  {label}")


@pytest.fixture(scope="session")
def s2():
    return sphere_spectrum(2)


@pytest.fixture(scope="session")
def ds():
    return schwarzschild_model(SchwarzschildParams(1.0, -1.0))


@pytest.fixture(scope="session")
def ads():
    return schwarzschild_model(SchwarzschildParams(1.0, 1.0))


@pytest.fixture(scope="session")
def classical():
    return schwarzschild_model(SchwarzschildParams(1.0, 0.0))


@pytest.fixture(scope="session")
def sinh_model():
    return catalog_model("hyperbolic_sinh", {"n": 3, "domain": (0.0, 3.0)})


@pytest.fixture(scope="session")
def pseudo():
    return catalog_model("pseudo_hyperbolic", {"n": 3, "domain": (0.0, 5.0)})


@pytest.fixture(scope="session")
def cusp():
    return catalog_model("desitter_cusp", {"n": 3, "domain": (0.0, 5.0),
                                           "lattice": [[1.0, 0.0], [0.0, 1.0]]})


@pytest.fixture(scope="session")
def power():
    return catalog_model("power_law", {"n": 3, "domain": (1.0, 50.0), "C": 1.0, "k": 2.0})


def ds_crossing_radius(i, K=1.0):
    """Closed-form root of 2(1 - 3K/r) = i(i+1)."""
    return 6.0 * K / (2.0 - i * (i + 1))


TWO_PI_SQ = 2.0 * math.pi ** 2
