import numpy as np
import pytest

from supcons.densities import MixtureDensity

_CRITERIA = []


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or report.when != "call":
        return
    number, title = marker.args
    detail = dict(item.user_properties).get("detail", "")
    status = "PASS" if report.passed else "FAIL"
    _CRITERIA.append((number, f"[{status}] criterion {number:>2}: {title}"
                      + (f"  ({detail})" if detail else "")))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_CRITERIA):
        terminalreporter.write_line(line)


@pytest.fixture
def detail(request):
    """Attach a short measured-value note to the acceptance line of this test."""

    def note(text):
        request.node.user_properties.append(("detail", text))

    return note


def random_mixture(rng, family="gaussian", k=None, scale=None, spread=3.0):
    k = int(rng.integers(1, 5)) if k is None else k
    w = rng.dirichlet(np.ones(k))
    loc = rng.uniform(-spread, spread, size=k)
    scale = float(rng.uniform(0.5, 2.0)) if scale is None else scale
    return MixtureDensity(family, w, loc, scale)
