"""Channel surrogates: plain net versus feature-decoupled composition.

Two model kinds share one net architecture:

* baseline: the net alone models the full channel, transmitted waveform in,
  received waveform out.
* fdd: the analytic linear system is split off.  Training targets are the
  received waveforms pulled back through the exact linear inverse, so the net
  only learns the residual (nonlinear) map; at inference the net output is
  pushed forward through the linear system for the queried distance.

Since the linear subsystem is exact and differentiable in closed form, the
fdd z-derivative combines the net's finite-difference derivative with the
analytic derivative of the linear tail by the product rule, assembled in the
frequency domain.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .linear import LinearOperator, apply_forward, apply_inverse, dz_derivative_factor, transfer_function
from .net import NetConfig, SurrogateNet, d_output_dz, load_checkpoint, save_checkpoint
from .signal import DualPolWaveform
from .ssfm import FiberParams


class ModelKind(str, Enum):
    BASELINE = "baseline"
    FDD = "fdd"


@dataclass(frozen=True)
class ChannelModel:
    """A trained (or training) surrogate of one fiber span."""

    kind: ModelKind
    net: SurrogateNet
    fp: FiberParams

    def __post_init__(self):
        if not isinstance(self.kind, ModelKind):
            object.__setattr__(self, "kind", ModelKind(self.kind))

    @property
    def z_ref_km(self) -> float:
        return self.net.config.z_ref_km


def training_target(
    kind: ModelKind, w_rx: DualPolWaveform, fp: FiberParams, z_km: float
) -> DualPolWaveform:
    """What the net should output for a waveform received at z_km.

    baseline: the received waveform itself.  fdd: the received waveform with
    the analytic linear propagation over z_km stripped off, which for a
    gamma = 0 channel is exactly the transmitted waveform.
    """
    kind = ModelKind(kind)
    if kind is ModelKind.BASELINE:
        return w_rx
    return apply_inverse(w_rx, LinearOperator(fp, z_km))


def predict(model: ChannelModel, w_tx: DualPolWaveform, z_km: float) -> DualPolWaveform:
    """Surrogate estimate of the field after z_km of fiber.

    The fdd linear tail always uses the queried z_km as its length and the
    model's own fiber constants, so the physics of data preparation and
    inference cannot drift apart.
    """
    out = model.net.forward(w_tx, z_km)
    if model.kind is ModelKind.BASELINE:
        return out
    # the fdd net predicts the decoupled field, which lives at the launch
    # position; the analytic tail then carries it to z_km
    pre_tail = DualPolWaveform(out.x_pol, out.y_pol, out.grid, 0.0)
    return apply_forward(pre_tail, LinearOperator(model.fp, z_km))


def predict_dz(
    model: ChannelModel, w_tx: DualPolWaveform, z_km: float, dz_km: float = 0.1
) -> DualPolWaveform:
    """d(predicted field)/dz at z_km, in sqrt(W)/km.

    baseline: central finite difference of the net output.  fdd: product
    rule in the frequency domain, H(z) * d(net)/dz + dH/dz * net, where the
    net derivative is the same central difference and dH/dz is analytic.
    """
    net_dz = d_output_dz(model.net, w_tx, z_km, dz_km)
    if model.kind is ModelKind.BASELINE:
        return net_dz
    net_out = model.net.forward(w_tx, z_km)
    op = LinearOperator(model.fp, z_km)
    H = transfer_function(op, w_tx.grid)
    factor = dz_derivative_factor(op, w_tx.grid)
    x = np.fft.ifft(H * (np.fft.fft(net_dz.x_pol) + factor * np.fft.fft(net_out.x_pol)))
    y = np.fft.ifft(H * (np.fft.fft(net_dz.y_pol) + factor * np.fft.fft(net_out.y_pol)))
    return DualPolWaveform(x, y, w_tx.grid, z_km)


# ----------------------------------------------------------------------
# bundle persistence: checkpoint plus a sidecar describing the physics


def save_bundle(model: ChannelModel, prefix) -> None:
    """Write <prefix>.fddn (weights) and <prefix>.json (kind and physics)."""
    prefix = Path(prefix)
    save_checkpoint(model.net, prefix.with_suffix(".fddn"))
    sidecar = {
        "kind": model.kind.value,
        "fiber": {
            "alpha_db_per_km": model.fp.alpha_db_per_km,
            "beta2_ps2_per_km": model.fp.beta2_ps2_per_km,
            "gamma_per_w_km": model.fp.gamma_per_w_km,
            "manakov_factor": model.fp.manakov_factor,
        },
        "z_ref_km": model.z_ref_km,
    }
    prefix.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True))


def load_bundle(prefix, expected_config: NetConfig | None = None) -> ChannelModel:
    prefix = Path(prefix)
    sidecar = json.loads(prefix.with_suffix(".json").read_text())
    try:
        kind = ModelKind(sidecar["kind"])
        fp = FiberParams(**sidecar["fiber"])
        z_ref = float(sidecar["z_ref_km"])
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"{prefix}: malformed bundle sidecar: {exc}") from exc
    net = load_checkpoint(prefix.with_suffix(".fddn"), expected_config)
    if abs(net.config.z_ref_km - z_ref) > 1e-12:
        raise ConfigError(
            f"{prefix}: sidecar z_ref_km {z_ref} disagrees with checkpoint "
            f"{net.config.z_ref_km}"
        )
    return ChannelModel(kind, net, fp)
