import math
import time
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qextensive.gamedef import load_bundled  # noqa: E402


@pytest.fixture(scope="session")
def gamma1():
    return load_bundled("gamma1.game").build()


@pytest.fixture(scope="session")
def gamma2():
    return load_bundled("gamma2.game").build()


@pytest.fixture(scope="session")
def qgamma1_doc():
    return load_bundled("gamma1.qgame")


@pytest.fixture(scope="session")
def qgamma2_doc():
    return load_bundled("gamma2_quantum.qgame")


@pytest.fixture(scope="session")
def qgamma1(qgamma1_doc):
    return qgamma1_doc.build()


@pytest.fixture(scope="session")
def qgamma2(qgamma2_doc):
    return qgamma2_doc.build(math.pi / 3)


# acceptance reporting --------------------------------------------------------

ACCEPTANCE: dict[int, tuple[bool, str]] = {}
SUITE_LIMIT_S = 30.0


class Recorder:
    """Runs one criterion's check and remembers a PASS/FAIL line for it."""

    def __init__(self, number):
        self.number = number

    def __enter__(self):
        return self

    def __exit__(self, kind, exc, tb):
        ok = kind is None
        note = "" if ok else f" ({kind.__name__}: {str(exc).splitlines()[0] if str(exc) else ''})"
        ACCEPTANCE[self.number] = (ok, note)
        return False


@pytest.fixture
def criterion():
    return Recorder


def pytest_sessionstart(session):
    session.config._t0 = time.perf_counter()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, note = ACCEPTANCE[n]
        tr.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}{note}")
    elapsed = time.perf_counter() - config._t0
    verdict = "PASS" if elapsed < SUITE_LIMIT_S else "FAIL"
    tr.write_line(f"criterion 8 (suite runtime {elapsed:.2f} s < {SUITE_LIMIT_S:.0f} s): {verdict}")
