"""Binary waveform files (DPWF v1).

Layout, all little-endian:

    magic   4 bytes  b"DPWF"
    version u32      1
    n       u64      samples per polarization
    dt      f64      sample spacing in seconds
    z_km    f64      position along the fiber
    body    x then y polarization, each n samples of (re f64, im f64)

The header does not carry the symbol-rate/oversampling split, so readers
reconstruct the grid from dt and an oversampling factor (sidecar metadata or
the default of 4).
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .signal import DualPolWaveform, WaveformGrid

MAGIC = b"DPWF"
VERSION = 1
_HEADER = struct.Struct("<4sIQdd")


def write_dpwf(path, w: DualPolWaveform) -> None:
    body = np.empty(2 * w.grid.n_samples, dtype=np.complex128)
    body[: w.grid.n_samples] = w.x_pol
    body[w.grid.n_samples :] = w.y_pol
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, w.grid.n_samples, w.grid.dt, w.z_km))
        # complex128 is (re f64, im f64) pairs; force little-endian layout
        fh.write(body.astype("<c16").tobytes())


def read_dpwf(path, oversampling: int = 4, symbol_rate: float | None = None) -> DualPolWaveform:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise ConfigError(f"{path}: truncated header")
    magic, version, n, dt, z_km = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise ConfigError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise ConfigError(f"{path}: unsupported version {version}")
    expected = _HEADER.size + 2 * n * 16
    if len(raw) != expected:
        raise ConfigError(f"{path}: expected {expected} bytes, found {len(raw)}")
    body = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size).astype(np.complex128)
    if symbol_rate is None:
        symbol_rate = 1.0 / (dt * oversampling)
    grid = WaveformGrid(n, dt, symbol_rate, oversampling)
    return DualPolWaveform(body[:n], body[n:], grid, z_km)
