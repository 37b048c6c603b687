import numpy as np
import pytest

from cfisac.config import config_from_dict
from cfisac.harness import prepare_setup
from cfisac.scenario import draw_ap_layout, setup_seed

# acceptance verdict lines, filled by tests/test_acceptance.py
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])


def small_cfg(**kw):
    base = {"K": 4, "R": 2, "U": 2, "M": 2, "R_min": 1.0, "gamma_sen_db": 0.0, "N_ch": 300}
    base.update(kw)
    return config_from_dict(base)


@pytest.fixture(scope="session")
def small_setup():
    cfg = small_cfg()
    aps = draw_ap_layout(cfg, 0)
    return cfg, prepare_setup(cfg, setup_seed(0, 0), aps)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
