"""Independent oracles and waveform builders shared across test modules.

The oracles are deliberately written without reusing the package's FFT-based
code paths: the brute-force DFT is an O(N^2) sum, and the dispersed-Gaussian
solution is evaluated from its closed form in the time domain, so agreement
between package and oracle is evidence, not tautology.
"""

from __future__ import annotations

import numpy as np

from fddsim.rng import SplitMix64
from fddsim.signal import DualPolWaveform, WaveformGrid
from fddsim.ssfm import FiberParams


def brute_force_dft(x: np.ndarray) -> np.ndarray:
    """Unnormalized forward DFT as a literal double sum, O(N^2)."""
    n = x.shape[0]
    k = np.arange(n)
    kernel = np.exp(-2j * np.pi * np.outer(k, k) / n)
    return kernel @ x


def brute_force_idft(X: np.ndarray) -> np.ndarray:
    """Inverse DFT with the 1/N factor, O(N^2)."""
    n = X.shape[0]
    k = np.arange(n)
    kernel = np.exp(2j * np.pi * np.outer(k, k) / n)
    return (kernel @ X) / n


def random_waveform(grid: WaveformGrid, seed: int, scale: float = 0.05) -> DualPolWaveform:
    """Dense random complex field, deterministic in the seed."""
    stream = SplitMix64(seed)
    draws = stream.uniform_signed(4 * grid.n_samples, scale)
    x = draws[: grid.n_samples] + 1j * draws[grid.n_samples : 2 * grid.n_samples]
    y = draws[2 * grid.n_samples : 3 * grid.n_samples] + 1j * draws[3 * grid.n_samples :]
    return DualPolWaveform(x, y, grid, 0.0)


def bandlimited_waveform(
    grid: WaveformGrid, seed: int, keep_fraction: float = 0.125, scale: float = 0.05
) -> DualPolWaveform:
    """Random field with spectral support confined to low frequencies.

    Needed wherever a finite-difference stencil must see a smooth signal.
    """
    w = random_waveform(grid, seed, scale)
    n = grid.n_samples
    keep = max(1, int(n * keep_fraction / 2))
    mask = np.zeros(n)
    mask[: keep + 1] = 1.0
    mask[-keep:] = 1.0
    x = np.fft.ifft(np.fft.fft(w.x_pol) * mask)
    y = np.fft.ifft(np.fft.fft(w.y_pol) * mask)
    return DualPolWaveform(x, y, grid, 0.0)


def gaussian_waveform(grid: WaveformGrid, t0_s: float, peak: float = 0.05) -> DualPolWaveform:
    """Gaussian pulse centered mid-frame, same envelope on both polarizations."""
    tc = grid.duration / 2.0
    env = peak * np.exp(-((grid.t - tc) ** 2) / (2.0 * t0_s**2))
    return DualPolWaveform(env.astype(np.complex128), env.astype(np.complex128), grid, 0.0)


def dispersed_gaussian(
    grid: WaveformGrid, t0_s: float, z_km: float, fp: FiberParams, peak: float = 0.05
) -> DualPolWaveform:
    """Closed-form solution of the linear channel for a Gaussian input.

    For ds/dz = -(alpha/2) s - i (beta2/2) d2s/dt2, a chirped-Gaussian ansatz
    A(z) exp(-(t-tc)^2 / (2 T(z)^2)) stays Gaussian with

        T(z)^2 = T0^2 - i beta2 z,   A(z) = A0 T0 / sqrt(T(z)^2),

    times the flat amplitude decay exp(-alpha z / 2).  (Substituting the
    ansatz into the PDE reduces both sides to the same rational function of
    T(z)^2, which fixes the two ODEs above.)
    """
    tc = grid.duration / 2.0
    tz2 = t0_s**2 - 1j * fp.beta2_s2_per_km * z_km
    amp = peak * t0_s / np.sqrt(tz2) * np.exp(-fp.alpha_linear * z_km / 2.0)
    env = amp * np.exp(-((grid.t - tc) ** 2) / (2.0 * tz2))
    return DualPolWaveform(env, env, grid, z_km)


def rel_l2_arrays(a: np.ndarray, b: np.ndarray) -> float:
    """Relative L2 distance between two raw arrays."""
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))
