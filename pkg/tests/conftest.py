import numpy as np
import pytest
from hypothesis import settings

from xfl.config import load_config
from xfl.stack import AcousticConstants

settings.register_profile("xfl", deadline=None, max_examples=60)
settings.load_profile("xfl")

# (criterion, passed, detail) rows collected by test_acceptance.py
ACCEPTANCE: list[tuple[int, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def reference_cfg():
    return load_config("paper.json")


@pytest.fixture(scope="session")
def material(reference_cfg):
    return reference_cfg.material


@pytest.fixture
def plain_material():
    return AcousticConstants(3500.0, 4000.0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
