import warnings

import numpy as np
import pytest

_CRITERIA = {}


def record_criterion(number, title, ok, detail):
    _CRITERIA[number] = (title, ok, detail)
    print(f"[acceptance {number}] {'PASS' if ok else 'FAIL'} {title}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        title, ok, detail = _CRITERIA[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'} - {title} - {detail}")


@pytest.fixture(autouse=True)
def _quiet_expected_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="lambda_a >= lambda_max")
        yield


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
