import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from ckdmlp import dataio, neuralnet, synthgen  # noqa: E402


@pytest.fixture(scope="session")
def synthetic_run():
    """Default pipeline on the default profile: n=400, seed 7, 70/30 stratified."""
    raw = synthgen.generate(synthgen.default_ckd_profile(seed=7))
    d = dataio.impute_mean(raw)
    train, test = dataio.split(d, dataio.SplitSpec(0.7, 7, True))
    (train, test), st = dataio.standardize(train, [test])
    model, log = neuralnet.train(train, neuralnet.TrainConfig(seed=7, validation=test))
    return {"train": train, "test": test, "model": model, "log": log, "stats": st}


ACCEPTANCE_RESULTS: list = []


@pytest.fixture
def criterion(request):
    """Record one acceptance line: call with a detail string after the checks."""
    entry = {"name": request.node.name, "detail": "", "passed": False}
    ACCEPTANCE_RESULTS.append(entry)

    def record(detail: str):
        entry["detail"] = detail

    yield record
    rep = getattr(request.node, "rep_call", None)
    entry["passed"] = bool(rep and rep.passed)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if rep.when == "call":
        item.rep_call = rep


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for e in ACCEPTANCE_RESULTS:
        status = "PASS" if e["passed"] else "FAIL"
        terminalreporter.write_line(f"{status}  {e['name']}  {e['detail']}")
