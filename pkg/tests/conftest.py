import numpy as np
import pytest

from rsaseg.grid import ScalarField
from rsaseg.levelset import FrontState
from rsaseg.phantom import PhantomSpec, Source


def circle_state(n=200, dx=0.1, radius=6.0, center=None, eps_front=None):
    """Signed distance to a circle, positive inside."""
    if center is None:
        center = ((n - 1) * dx / 2, (n - 1) * dx / 2)
    y, x = np.indices((n, n)) * dx
    v = radius - np.hypot(x - center[0], y - center[1])
    return FrontState(ScalarField(v, dx), eps_front=dx if eps_front is None else eps_front)


def mean_zero_radius(state, center):
    from rsaseg.levelset import zero_level_points

    pts = zero_level_points(state.v)
    return float(np.hypot(pts[:, 0] - center[0], pts[:, 1] - center[1]).mean())


def three_source_phantom(scale=1.0, seed=20181023):
    sources = (
        Source(x=80, y=90, amplitude=0.6, radius=10),
        Source(x=210, y=110, amplitude=0.4, radius=10),
        Source(x=150, y=220, amplitude=0.3, radius=10),
    )
    spec = PhantomSpec(rows=300, cols=300, sources=sources, background=0.05,
                       noise="gaussian", noise_level=0.01, seed=seed)
    return spec.scaled(scale) if scale != 1.0 else spec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ------------------------------------------------------------ acceptance report

_VERDICTS = {}


class Criterion:
    """Collects every check of one acceptance criterion before failing."""

    def __init__(self, number, title):
        self.number = number
        self.title = title
        self.checks = []

    def check(self, ok, detail):
        self.checks.append((bool(ok), detail))
        return bool(ok)

    @property
    def passed(self):
        return bool(self.checks) and all(ok for ok, _ in self.checks)

    def line(self):
        verdict = "PASS" if self.passed else "FAIL"
        details = "; ".join(("" if ok else "FAILED ") + d for ok, d in self.checks)
        return f"criterion {self.number:>2} {verdict}  {self.title}: {details}"

    def finish(self):
        print(self.line())
        failed = [d for ok, d in self.checks if not ok]
        assert not failed, "; ".join(failed)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.fixture
def criterion(request):
    mark = request.node.get_closest_marker("criterion")
    record = Criterion(*mark.args)
    _VERDICTS[record.number] = record
    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_VERDICTS):
        terminalreporter.write_line(_VERDICTS[number].line())


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or report.when != "call" or not report.failed:
        return
    record = _VERDICTS.get(mark.args[0])
    if record is not None and record.passed:
        record.check(False, f"raised {call.excinfo.typename}: {call.excinfo.value}")
