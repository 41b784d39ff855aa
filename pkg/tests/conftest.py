from __future__ import annotations

import numpy as np
import pytest

from alhierarchy.lattice import BoundaryMode, LatticeWindow, SequencePair, random_pair


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption(
        "--update-assets",
        action="store_true",
        help="When set, refresh the stored default configuration asset to match the models.",
    )


@pytest.fixture
def update_assets(request: pytest.FixtureRequest) -> bool:
    return bool(request.config.getoption("--update-assets"))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240601)


@pytest.fixture
def periodic_window() -> LatticeWindow:
    return LatticeWindow.centered(32, BoundaryMode.PERIODIC)


@pytest.fixture
def padded_window() -> LatticeWindow:
    return LatticeWindow(-20, 20)


@pytest.fixture
def periodic_pair(periodic_window: LatticeWindow, rng: np.random.Generator) -> SequencePair:
    return random_pair(periodic_window, rng, 0.5)
