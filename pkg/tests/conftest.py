import numpy as np
import pytest

from ppn.core import GridSpec
from ppn.net import NetConfig, build


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def grid():
    return GridSpec()


TOY_GRID = GridSpec(patch_size=8, grid_m=2, grid_n=2)


def toy_config(**kw) -> NetConfig:
    """8x8 input, 2x2 grid: stem + one stage gives the 4x downsampling."""
    base = dict(base_depth=3, input_size=8, grid=TOY_GRID, stem_channels=4, stage_channels=(6,),
                stage_blocks=(1,), head_channels=5, dropout_rate=0.0)
    base.update(kw)
    return NetConfig(**base)


@pytest.fixture
def toy_model():
    return build(toy_config())


ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
