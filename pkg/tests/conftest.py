"""Collects acceptance verdicts and prints one PASS/FAIL line per criterion."""

import pytest

CRITERIA = {
    "1": "kernel correctness",
    "2": "shape-map continuity",
    "3": "LOO/LSCV oracle equivalence",
    "4": "simulation table reproduction (f1, 200 replications)",
    "5": "boundary-bias demonstration",
    "6a": "AMISE rates",
    "6b": "AMISE ordering on f4",
    "6c": "Monte-Carlo bias vs leading term",
    "7": "simulate determinism across worker counts",
    "S": "estimate --select lscv smoke",
}

_VERDICTS = {}


class _Recorder:
    def __call__(self, cid, ok, detail=""):
        """Store the verdict for criterion ``cid`` and fail the test if it is false."""
        _VERDICTS[cid] = (bool(ok), detail)
        assert ok, f"criterion {cid} ({CRITERIA[cid]}): {detail}"


@pytest.fixture
def verdict():
    return _Recorder()


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid, name in CRITERIA.items():
        if cid in _VERDICTS:
            ok, detail = _VERDICTS[cid]
            status = "PASS" if ok else "FAIL"
        else:
            status, detail = "FAIL", "not run or errored before a verdict"
        tr.write_line(f"{status} [{cid}] {name}: {detail}")
