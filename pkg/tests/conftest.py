import numpy as np
import pytest

from regenn import kernels
from regenn.model import Dims, build_variant


@pytest.fixture(params=sorted(kernels.BACKENDS))
def backend(request):
    with kernels.use(request.param):
        yield request.param


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


TINY = Dims(window=3, horizon=2, n_vars=2)
TINY_GRAPH = np.array([[10.0, 3.0], [3.0, 10.0]])


def tiny_model(tag="regenn", cell="lstm", seed=7, dropout_p=0.1):
    model = build_variant(tag, TINY, seed=seed, cell=cell, dropout_p=dropout_p)
    model.set_graph(TINY_GRAPH)
    return model


def tiny_batch(seed=0):
    r = np.random.default_rng(seed)
    return r.uniform(0, 1, (2, 3, 2)), r.uniform(0, 1, (2, 2, 2))


ACCEPTANCE_LINES = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None and (rep.when == "call" or (rep.when == "setup" and not rep.passed)):
        detail = dict(item.user_properties).get("detail", "")
        verdict = "PASS" if rep.passed else "FAIL"
        ACCEPTANCE_LINES.append(f"{verdict}  {marker.args[0]:<22} {detail}".rstrip())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
