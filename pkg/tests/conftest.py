"""Shared fixtures for the test suite; oracles live in helpers.py."""

import pytest

from fddsim.signal import WaveformGrid


@pytest.fixture
def small_grid() -> WaveformGrid:
    """64 symbols at 4x oversampling: 256 samples, desk symbol rate."""
    return WaveformGrid.for_symbols(30e9, 4, 64)


@pytest.fixture
def desk_grid() -> WaveformGrid:
    """The full desk frame: 256 symbols at 4x oversampling."""
    return WaveformGrid.for_symbols(30e9, 4, 256)
