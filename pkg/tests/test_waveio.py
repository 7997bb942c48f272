"""DPWF v1 binary waveform files: byte layout, round trips, rejection paths."""

import struct

import numpy as np
import pytest

from fddsim.errors import ConfigError
from fddsim.signal import relative_l2
from fddsim.waveio import MAGIC, VERSION, read_dpwf, write_dpwf
from helpers import random_waveform


def test_round_trip_preserves_everything(small_grid, tmp_path):
    w = random_waveform(small_grid, seed=1)
    w = type(w)(w.x_pol, w.y_pol, small_grid, 37.5)
    path = tmp_path / "w.dpwf"
    write_dpwf(path, w)
    back = read_dpwf(path, oversampling=small_grid.oversampling)
    assert np.array_equal(back.x_pol, w.x_pol)
    assert np.array_equal(back.y_pol, w.y_pol)
    assert back.grid == small_grid
    assert back.z_km == 37.5


def test_byte_layout_is_the_documented_struct(small_grid, tmp_path):
    w = random_waveform(small_grid, seed=2)
    path = tmp_path / "w.dpwf"
    write_dpwf(path, w)
    raw = path.read_bytes()
    magic, version, n, dt, z = struct.unpack_from("<4sIQdd", raw)
    assert magic == MAGIC == b"DPWF"
    assert version == VERSION == 1
    assert n == small_grid.n_samples
    assert dt == small_grid.dt
    assert z == 0.0
    assert len(raw) == struct.calcsize("<4sIQdd") + 2 * n * 16
    # first body complex equals x_pol[0] as little-endian (re, im) f64 pair
    re, im = struct.unpack_from("<dd", raw, struct.calcsize("<4sIQdd"))
    assert re + 1j * im == w.x_pol[0]


def test_reader_reconstructs_grid_via_symbol_rate(small_grid, tmp_path):
    w = random_waveform(small_grid, seed=3)
    path = tmp_path / "w.dpwf"
    write_dpwf(path, w)
    back = read_dpwf(path, oversampling=4, symbol_rate=small_grid.symbol_rate)
    assert back.grid == small_grid
    assert relative_l2(back, w) == 0.0


def test_reader_rejects_bad_magic(tmp_path, small_grid):
    w = random_waveform(small_grid, seed=4)
    path = tmp_path / "w.dpwf"
    write_dpwf(path, w)
    raw = bytearray(path.read_bytes())
    raw[:4] = b"NOPE"
    path.write_bytes(bytes(raw))
    with pytest.raises(ConfigError, match="magic"):
        read_dpwf(path)


def test_reader_rejects_bad_version(tmp_path, small_grid):
    w = random_waveform(small_grid, seed=5)
    path = tmp_path / "w.dpwf"
    write_dpwf(path, w)
    raw = bytearray(path.read_bytes())
    struct.pack_into("<I", raw, 4, 99)
    path.write_bytes(bytes(raw))
    with pytest.raises(ConfigError, match="version"):
        read_dpwf(path)


def test_reader_rejects_truncation(tmp_path, small_grid):
    w = random_waveform(small_grid, seed=6)
    path = tmp_path / "w.dpwf"
    write_dpwf(path, w)
    raw = path.read_bytes()
    path.write_bytes(raw[: len(raw) - 8])
    with pytest.raises(ConfigError, match="bytes"):
        read_dpwf(path)
    path.write_bytes(raw[:10])
    with pytest.raises(ConfigError, match="truncated"):
        read_dpwf(path)
