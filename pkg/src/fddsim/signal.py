"""Time grids, dual-polarization waveforms, and spectra.

Conventions used everywhere in the package:

* time samples t_n = n * dt, n = 0 .. n_samples-1, frame treated as periodic
* forward DFT is unnormalized (numpy convention), inverse carries the 1/N
* frequency bin k carries f_k = numpy.fft.fftfreq(n, dt)[k], omega = 2*pi*f
* amplitudes are in sqrt(W), so |s|^2 is instantaneous power in watts

All types are immutable after construction and all operations are pure
functions returning new objects, so values can be shared across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigError


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class WaveformGrid:
    """Uniform periodic time grid tied to a symbol rate.

    dt is fully determined by symbol_rate and oversampling; the redundant
    field is kept so a grid read back from a file can be validated.
    """

    n_samples: int
    dt: float
    symbol_rate: float
    oversampling: int

    def __post_init__(self):
        if not _is_power_of_two(self.n_samples):
            raise ConfigError(f"n_samples must be a power of two, got {self.n_samples}")
        if self.symbol_rate <= 0:
            raise ConfigError("symbol_rate must be positive")
        if self.oversampling < 1:
            raise ConfigError("oversampling must be >= 1")
        if self.n_samples % self.oversampling != 0:
            raise ConfigError("n_samples must be a multiple of oversampling")
        expected_dt = 1.0 / (self.symbol_rate * self.oversampling)
        if not (self.dt > 0) or abs(self.dt - expected_dt) > 1e-12 * expected_dt:
            raise ConfigError(
                f"dt={self.dt!r} inconsistent with 1/(symbol_rate*oversampling)={expected_dt!r}"
            )

    @classmethod
    def for_symbols(cls, symbol_rate: float, oversampling: int, n_symbols: int) -> "WaveformGrid":
        n = n_symbols * oversampling
        return cls(n, 1.0 / (symbol_rate * oversampling), symbol_rate, oversampling)

    @property
    def n_symbols(self) -> int:
        return self.n_samples // self.oversampling

    @property
    def duration(self) -> float:
        """Frame duration in seconds."""
        return self.n_samples * self.dt

    @property
    def sample_rate(self) -> float:
        return 1.0 / self.dt

    @cached_property
    def t(self) -> np.ndarray:
        """Time samples in seconds, read-only."""
        t = np.arange(self.n_samples) * self.dt
        t.setflags(write=False)
        return t

    @cached_property
    def freqs(self) -> np.ndarray:
        """Baseband frequency of each DFT bin in Hz, natural bin order."""
        f = np.fft.fftfreq(self.n_samples, self.dt)
        f.setflags(write=False)
        return f

    @cached_property
    def omega(self) -> np.ndarray:
        """Angular frequency of each DFT bin in rad/s, natural bin order."""
        w = 2.0 * np.pi * np.fft.fftfreq(self.n_samples, self.dt)
        w.setflags(write=False)
        return w


def _as_readonly_c128(a, n: int, name: str) -> np.ndarray:
    arr = np.array(a, dtype=np.complex128, copy=True)
    if arr.shape != (n,):
        raise ConfigError(f"{name} must have shape ({n},), got {arr.shape}")
    if not np.all(np.isfinite(arr.view(np.float64))):
        raise ConfigError(f"{name} contains non-finite amplitudes")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DualPolWaveform:
    """Time-domain field, both polarizations, at position z_km along the fiber."""

    x_pol: np.ndarray
    y_pol: np.ndarray
    grid: WaveformGrid
    z_km: float

    def __post_init__(self):
        object.__setattr__(self, "x_pol", _as_readonly_c128(self.x_pol, self.grid.n_samples, "x_pol"))
        object.__setattr__(self, "y_pol", _as_readonly_c128(self.y_pol, self.grid.n_samples, "y_pol"))
        if not np.isfinite(self.z_km) or self.z_km < 0:
            raise ConfigError(f"z_km must be a nonnegative real, got {self.z_km}")

    def total_power(self) -> np.ndarray:
        """Instantaneous power |s_x|^2 + |s_y|^2 per sample, in watts."""
        return np.abs(self.x_pol) ** 2 + np.abs(self.y_pol) ** 2

    def mean_power(self) -> float:
        """Mean total power across the frame, in watts."""
        return float(np.mean(self.total_power()))

    def energy(self) -> float:
        """Frame energy sum(|s|^2)*dt over both polarizations, in joules."""
        return float(np.sum(self.total_power()) * self.grid.dt)


@dataclass(frozen=True)
class SpectrumView:
    """Frequency-domain view of a waveform (unnormalized forward DFT)."""

    x_pol_freq: np.ndarray
    y_pol_freq: np.ndarray
    grid: WaveformGrid
    z_km: float


def fft_forward(w: DualPolWaveform) -> SpectrumView:
    """Unnormalized forward DFT of both polarizations."""
    return SpectrumView(
        np.fft.fft(w.x_pol), np.fft.fft(w.y_pol), w.grid, w.z_km
    )


def fft_inverse(s: SpectrumView) -> DualPolWaveform:
    """Inverse DFT (carries the 1/N); exact round trip with fft_forward."""
    return DualPolWaveform(
        np.fft.ifft(s.x_pol_freq), np.fft.ifft(s.y_pol_freq), s.grid, s.z_km
    )


def nmse(pred: DualPolWaveform, ref: DualPolWaveform) -> float:
    """Normalized mean square error, energies summed over both polarizations.

    nmse = sum(|pred - ref|^2) / sum(|ref|^2).  Raises on grid mismatch and on
    a zero-energy reference.
    """
    if pred.grid != ref.grid:
        raise ConfigError("nmse: waveforms live on different grids")
    denom = float(np.sum(np.abs(ref.x_pol) ** 2) + np.sum(np.abs(ref.y_pol) ** 2))
    if denom == 0.0:
        raise ValueError("nmse: degenerate reference (zero energy)")
    num = float(
        np.sum(np.abs(pred.x_pol - ref.x_pol) ** 2)
        + np.sum(np.abs(pred.y_pol - ref.y_pol) ** 2)
    )
    return num / denom


def relative_l2(pred: DualPolWaveform, ref: DualPolWaveform) -> float:
    """Relative L2 distance sqrt(nmse); convenience for tolerance checks."""
    return float(np.sqrt(nmse(pred, ref)))


def dbm_to_watts(p_dbm: float) -> float:
    return 10.0 ** ((p_dbm - 30.0) / 10.0)


def power_dbm_to_amplitude_scale(w: DualPolWaveform, p_dbm: float) -> DualPolWaveform:
    """Rescale so the mean total power (both polarizations) is p_dbm.

    Energy ratio between input and output is exactly the power ratio.
    """
    current = w.mean_power()
    if current == 0.0:
        raise ValueError("power scaling: zero-energy input")
    scale = np.sqrt(dbm_to_watts(p_dbm) / current)
    return DualPolWaveform(w.x_pol * scale, w.y_pol * scale, w.grid, w.z_km)
