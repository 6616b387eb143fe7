import re

_CRITERIA = {}
_TITLES = {
    1: "worked example: shipped fixture is fair and balanced",
    2: "main theorem round-trip on the corpus",
    3: "zigzag residuals of constructed and conjugated solutions",
    4: "spectral reciprocity",
    5: "skein/functor coherence",
    6: "equivalence decision",
    7: "MW discrimination",
    8: "involution independence",
    9: "oracle equivalence",
}


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_criterion_(\d+)", report.nodeid)
    if not m:
        return
    n = int(m.group(1))
    if report.when == "call" or report.outcome != "passed":
        prev = _CRITERIA.get(n, "PASS")
        _CRITERIA[n] = "PASS" if (prev == "PASS" and report.outcome == "passed") else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        terminalreporter.write_line(f"criterion {n}: {_CRITERIA[n]} - {_TITLES.get(n, '')}")
