import numpy as np
import pytest

from twolevel import data_path
from twolevel.al import load_domain
from twolevel.scenarios import ll_domain, office_world
from twolevel.simulator import train

EXAMPLE_HL = data_path("office_hl.al")


@pytest.fixture(scope="session")
def office_hl():
    return load_domain(EXAMPLE_HL)


@pytest.fixture(scope="session")
def office_world_cfg():
    return office_world(4)


@pytest.fixture(scope="session")
def office_ll(office_world_cfg):
    return ll_domain(office_world_cfg, ["tb1"])


@pytest.fixture(scope="session")
def learned(office_world_cfg):
    return train(office_world_cfg, 200, np.random.default_rng(0))


ACCEPTANCE: dict = {}  # criterion number -> (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
