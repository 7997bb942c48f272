"""Analytic linear subsystem of the fiber channel, and its exact inverse.

For the linear-only equation (gamma = 0) the spectrum evolves in closed form:

    S(z + L, omega) = S(z, omega) * exp((i*beta2/2*omega^2 - alpha/2) * L)

which is an all-pass phase plus a flat attenuation.  Negating the exponent
gives the exact inverse, used to strip the dispersive tail off received
waveforms before the neural surrogate sees them.  Attenuation is included by
default so the inverse also restores the launch power; the printed-form
transfer function without loss is available via include_attenuation=False.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .signal import DualPolWaveform, WaveformGrid
from .ssfm import FiberParams


@dataclass(frozen=True)
class LinearOperator:
    """Linear propagation over a fixed distance for fixed fiber constants.

    length_km is nonnegative for operators built directly; the explicit
    inverse constructor is the only path to a negative length.
    """

    fp: FiberParams
    length_km: float
    include_attenuation: bool = True

    def __post_init__(self):
        if not np.isfinite(self.length_km):
            raise ConfigError("length_km must be finite")
        if self.length_km < 0:
            raise ConfigError(
                "length_km must be nonnegative; build inverse operators via "
                "LinearOperator.explicit_inverse"
            )

    @classmethod
    def explicit_inverse(
        cls, fp: FiberParams, length_km: float, include_attenuation: bool = True
    ) -> "LinearOperator":
        """Operator that exactly undoes forward propagation over length_km."""
        if not np.isfinite(length_km) or length_km < 0:
            raise ConfigError("explicit_inverse takes the nonnegative forward length")
        op = cls(fp, 0.0, include_attenuation)
        object.__setattr__(op, "length_km", -length_km)
        return op

    def inverse(self) -> "LinearOperator":
        op = LinearOperator(self.fp, 0.0, self.include_attenuation)
        object.__setattr__(op, "length_km", -self.length_km)
        return op


def dz_derivative_factor(op: LinearOperator, grid: WaveformGrid) -> np.ndarray:
    """Per-bin z-derivative rate of the operator's transfer function, 1/km.

    d/dz [H(z) S] = factor * H(z) S with
    factor = i*beta2/2*omega^2 - alpha_linear/2 (alpha term only when the
    operator includes attenuation).  Independent of length.
    """
    fp = op.fp
    factor = 1j * (fp.beta2_s2_per_km / 2.0) * grid.omega**2
    if op.include_attenuation:
        factor = factor - fp.alpha_linear / 2.0
    return factor


def transfer_function(op: LinearOperator, grid: WaveformGrid) -> np.ndarray:
    """Per-bin multiplier exp(factor * length_km)."""
    return np.exp(dz_derivative_factor(op, grid) * op.length_km)


def apply_forward(w: DualPolWaveform, op: LinearOperator) -> DualPolWaveform:
    """Multiply the spectrum by the transfer function; z advances by length_km."""
    H = transfer_function(op, w.grid)
    x = np.fft.ifft(np.fft.fft(w.x_pol) * H)
    y = np.fft.ifft(np.fft.fft(w.y_pol) * H)
    return DualPolWaveform(x, y, w.grid, _advance_z(w.z_km, op.length_km))


def apply_inverse(w: DualPolWaveform, op: LinearOperator) -> DualPolWaveform:
    """Multiply by the reciprocal transfer function; z retreats by length_km."""
    H = np.exp(-dz_derivative_factor(op, w.grid) * op.length_km)
    x = np.fft.ifft(np.fft.fft(w.x_pol) * H)
    y = np.fft.ifft(np.fft.fft(w.y_pol) * H)
    return DualPolWaveform(x, y, w.grid, _advance_z(w.z_km, -op.length_km))


def _advance_z(z_km: float, delta_km: float) -> float:
    z_new = z_km + delta_km
    if z_new < 0:
        if z_new > -1e-9:  # float dust from exact round trips
            return 0.0
        raise ConfigError(
            f"operator would move the waveform to z = {z_new} km, before launch"
        )
    return z_new
