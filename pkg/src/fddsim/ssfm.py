"""Split-step Fourier ground-truth propagation.

Integrates the dual-polarization (Manakov-averaged) nonlinear Schroedinger
equation

    ds_p/dz = -(alpha/2) s_p - i (beta2/2) d2 s_p/dt2
              + i (8/9) gamma (|s_x|^2 + |s_y|^2) s_p

by alternating the exact flows of the linear sub-operator (applied in the
frequency domain) and the nonlinear sub-operator (a pure phase rotation, since
it conserves |s_p| pointwise).  The symmetric (Strang) arrangement
half-linear / nonlinear / half-linear is second-order accurate in the step;
the asymmetric arrangement full-linear / nonlinear is first-order and is kept
for convergence comparisons.

Unit system: z and steps in km, alpha converted from dB/km to 1/km, beta2
from ps^2/km to s^2/km, gamma in 1/(W km), omega in rad/s.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError
from .signal import DualPolWaveform

_LN10 = float(np.log(10.0))


@dataclass(frozen=True)
class FiberParams:
    """Physical fiber constants for a single unamplified span."""

    alpha_db_per_km: float = 0.2
    beta2_ps2_per_km: float = -21.7
    gamma_per_w_km: float = 1.3
    manakov_factor: float = 8.0 / 9.0

    def __post_init__(self):
        if self.alpha_db_per_km < 0:
            raise ConfigError("alpha_db_per_km must be >= 0")
        if self.gamma_per_w_km < 0:
            raise ConfigError("gamma_per_w_km must be >= 0")
        if not (0.0 < self.manakov_factor <= 1.0):
            raise ConfigError("manakov_factor must be in (0, 1]")

    @property
    def alpha_linear(self) -> float:
        """Field attenuation rate in 1/km (power decays as exp(-alpha_linear z))."""
        return self.alpha_db_per_km * _LN10 / 10.0

    @property
    def beta2_s2_per_km(self) -> float:
        return self.beta2_ps2_per_km * 1e-24


@dataclass(frozen=True)
class SsfmConfig:
    step_km: float = 0.1
    scheme: str = "symmetric"

    def __post_init__(self):
        if self.step_km <= 0:
            raise ConfigError("step_km must be positive")
        if self.scheme not in ("symmetric", "asymmetric"):
            raise ConfigError(f"scheme must be 'symmetric' or 'asymmetric', got {self.scheme!r}")


def _step_lengths(span_km: float, step_km: float) -> list[float]:
    """Uniform steps covering the span; a shorter final step absorbs any tail."""
    n_full = int(np.floor(span_km / step_km + 1e-12))
    tail = span_km - n_full * step_km
    steps = [step_km] * n_full
    if tail > 1e-9:
        steps.append(tail)
    return steps


def _linear_factor(fp: FiberParams, omega: np.ndarray) -> np.ndarray:
    """Per-bin rate of the linear sub-operator, in 1/km.

    From the equation above: d s_hat/dz = (i*beta2/2*omega^2 - alpha/2) s_hat,
    because the spectral second time derivative contributes (i*omega)^2.
    """
    return 1j * (fp.beta2_s2_per_km / 2.0) * omega**2 - fp.alpha_linear / 2.0


def linear_half_step(spec: np.ndarray, fp: FiberParams, omega: np.ndarray, h_km: float) -> np.ndarray:
    """Advance a (2, n) spectrum by h_km of linear-only propagation."""
    return spec * np.exp(_linear_factor(fp, omega) * h_km)


def nonlinear_step(field: np.ndarray, fp: FiberParams, h_km: float) -> np.ndarray:
    """Advance a (2, n) time-domain field by h_km of nonlinearity-only propagation.

    Exact flow: a phase rotation by manakov_factor * gamma * total power * h,
    identical for both polarizations; magnitudes are preserved.
    """
    power = np.abs(field[0]) ** 2 + np.abs(field[1]) ** 2
    return field * np.exp(1j * fp.manakov_factor * fp.gamma_per_w_km * power * h_km)


def propagate(
    w: DualPolWaveform,
    fp: FiberParams,
    span_km: float,
    cfg: SsfmConfig = SsfmConfig(),
) -> DualPolWaveform:
    """Propagate through span_km of fiber; returns the field at z + span_km."""
    if span_km < 0 or not np.isfinite(span_km):
        raise ConfigError(f"span_km must be a nonnegative real, got {span_km}")
    if span_km == 0.0:
        return DualPolWaveform(w.x_pol, w.y_pol, w.grid, w.z_km)

    omega = w.grid.omega
    field = np.stack([w.x_pol, w.y_pol])
    steps = _step_lengths(span_km, cfg.step_km)
    n_steps = len(steps)

    if cfg.scheme == "symmetric":
        for k, h in enumerate(steps):
            spec = np.fft.fft(field, axis=1)
            field = np.fft.ifft(linear_half_step(spec, fp, omega, h / 2.0), axis=1)
            field = nonlinear_step(field, fp, h)
            spec = np.fft.fft(field, axis=1)
            field = np.fft.ifft(linear_half_step(spec, fp, omega, h / 2.0), axis=1)
            if not np.all(np.isfinite(field.view(np.float64))):
                raise NumericalError(f"numerical blowup at step {k + 1} of {n_steps}")
    else:
        for k, h in enumerate(steps):
            spec = np.fft.fft(field, axis=1)
            field = np.fft.ifft(linear_half_step(spec, fp, omega, h), axis=1)
            field = nonlinear_step(field, fp, h)
            if not np.all(np.isfinite(field.view(np.float64))):
                raise NumericalError(f"numerical blowup at step {k + 1} of {n_steps}")

    return DualPolWaveform(field[0], field[1], w.grid, w.z_km + span_km)
