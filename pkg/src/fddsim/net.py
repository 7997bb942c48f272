"""Bidirectional recurrent channel surrogate, written from scratch on numpy.

The net maps a dual-polarization waveform plus a propagation distance to a
waveform of the same length.  Per time step the input features are
[Re(s_x), Im(s_x), Re(s_y), Im(s_y)] concatenated with a learned linear
embedding of the normalized distance z_km / z_ref_km (broadcast across time).
A stack of bidirectional LSTM or GRU layers processes the sequence; a linear
projection of the concatenated direction states, plus a learned 4x4 input
passthrough, produces the output features.

The passthrough starts at the identity so the net begins as "input plus a
small learned correction", which is the right inductive bias for channels
that are close to identity after linear decoupling; with all weights zero the
output is identically zero, and a net frozen to the exact identity map is
constructible for tests.

Cell equations (gate order as stored):

  LSTM, gates [i, f, o, g]:
      a   = x W_x + h W_h + b
      i,f,o = sigmoid(a[..3H]);  g = tanh(a[3H..])
      c'  = f*c + i*g;  h' = o * tanh(c')
  GRU, gates [r, u, n]:
      a_ru = x W_x[..2H] + h W_h[..2H] + b[..2H];  r,u = sigmoid(a_ru)
      a_n  = x W_x[2H..] + b[2H..] + r * (h W_h[2H..])
      n    = tanh(a_n);  h' = u*h + (1-u)*n

Backpropagation through time is implemented by hand; gradients live in
buffers paired with each weight tensor.  Training state (Adam moments) lives
outside the net so checkpoints stay pure weights.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericalError
from .rng import SplitMix64
from .signal import DualPolWaveform

N_SIGNAL_FEATURES = 4


@dataclass(frozen=True)
class NetConfig:
    hidden_size: int = 32
    n_layers: int = 1
    z_embed_dim: int = 4
    cell: str = "bilstm"
    precision: str = "f64"
    init_seed: int = 1
    init_scale: float = 0.0  # 0 means the default 1/sqrt(hidden_size)
    z_ref_km: float = 100.0
    max_seq_len: int = 8192

    def __post_init__(self):
        if self.hidden_size < 1:
            raise ConfigError("hidden_size must be >= 1")
        if self.n_layers < 1:
            raise ConfigError("n_layers must be >= 1")
        if self.z_embed_dim < 1:
            raise ConfigError("z_embed_dim must be >= 1")
        if self.cell not in ("bilstm", "bigru"):
            raise ConfigError(f"cell must be 'bilstm' or 'bigru', got {self.cell!r}")
        if self.precision not in ("f32", "f64"):
            raise ConfigError(f"precision must be 'f32' or 'f64', got {self.precision!r}")
        if self.init_scale < 0:
            raise ConfigError("init_scale must be >= 0")
        if self.z_ref_km <= 0:
            raise ConfigError("z_ref_km must be positive")
        if self.max_seq_len < 1:
            raise ConfigError("max_seq_len must be >= 1")

    @property
    def dtype(self):
        return np.float64 if self.precision == "f64" else np.float32

    @property
    def resolved_init_scale(self) -> float:
        return self.init_scale if self.init_scale > 0 else 1.0 / np.sqrt(self.hidden_size)

    @property
    def n_gates(self) -> int:
        return 4 if self.cell == "bilstm" else 3

    def layer_input_size(self, layer: int) -> int:
        if layer == 0:
            return N_SIGNAL_FEATURES + self.z_embed_dim
        return 2 * self.hidden_size


class Param:
    """A weight tensor paired with its gradient buffer."""

    __slots__ = ("value", "grad")

    def __init__(self, value: np.ndarray):
        self.value = value
        self.grad = np.zeros_like(value)


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # tanh form avoids overflow warnings for large |x|
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def waveform_to_features(w: DualPolWaveform, dtype=np.float64) -> np.ndarray:
    """(T, 4) real feature array [Re x, Im x, Re y, Im y]."""
    out = np.empty((w.grid.n_samples, N_SIGNAL_FEATURES), dtype=dtype)
    out[:, 0] = w.x_pol.real
    out[:, 1] = w.x_pol.imag
    out[:, 2] = w.y_pol.real
    out[:, 3] = w.y_pol.imag
    return out


def features_to_waveform(feats: np.ndarray, grid, z_km: float) -> DualPolWaveform:
    f = np.asarray(feats, dtype=np.float64)
    return DualPolWaveform(f[:, 0] + 1j * f[:, 1], f[:, 2] + 1j * f[:, 3], grid, z_km)


class SurrogateNet:
    """Bidirectional recurrent surrogate with hand-written BPTT."""

    def __init__(self, config: NetConfig, _init_weights: bool = True):
        self.config = config
        self.params: dict[str, Param] = {}
        dt = config.dtype
        H, G = config.hidden_size, config.n_gates
        for layer in range(config.n_layers):
            fin = config.layer_input_size(layer)
            for direction in ("fw", "bw"):
                p = f"l{layer}_{direction}"
                self._add(f"{p}_wx", (fin, G * H), dt)
                self._add(f"{p}_wh", (H, G * H), dt)
                self._add(f"{p}_b", (G * H,), dt)
        self._add("w_z", (config.z_embed_dim,), dt)
        self._add("b_z", (config.z_embed_dim,), dt)
        self._add("w_out", (2 * H, N_SIGNAL_FEATURES), dt)
        self._add("b_out", (N_SIGNAL_FEATURES,), dt)
        self._add("w_pass", (N_SIGNAL_FEATURES, N_SIGNAL_FEATURES), dt)
        if _init_weights:
            self._init_weights()
        self._cache = None

    def _add(self, name: str, shape: tuple, dtype) -> None:
        self.params[name] = Param(np.zeros(shape, dtype=dtype))

    def _init_weights(self) -> None:
        """Recurrent and embedding matrices uniform in (-init_scale,
        init_scale), one RNG substream per tensor tagged by registration
        order.  Biases and the output projection start at zero and the
        passthrough at the identity, so an untrained net is the identity map
        plus corrections that grow only as the projection learns; channels
        are near-identity after linear decoupling, and this keeps the
        degenerate gamma = 0 task exactly solvable from the start."""
        scale = self.config.resolved_init_scale
        root = SplitMix64(self.config.init_seed)
        for tag, (name, p) in enumerate(self.params.items()):
            if name.endswith("_b") or name in ("b_z", "b_out", "w_out"):
                continue
            if name == "w_pass":
                p.value[...] = np.eye(N_SIGNAL_FEATURES, dtype=p.value.dtype)
                continue
            draws = root.child(tag).uniform_signed(p.value.size, scale)
            p.value[...] = draws.reshape(p.value.shape).astype(p.value.dtype)

    @classmethod
    def zeros(cls, config: NetConfig) -> "SurrogateNet":
        return cls(config, _init_weights=False)

    @classmethod
    def identity(cls, config: NetConfig) -> "SurrogateNet":
        """Net frozen to the exact identity map, independent of z."""
        net = cls(config, _init_weights=False)
        w = net.params["w_pass"].value
        w[...] = np.eye(N_SIGNAL_FEATURES, dtype=w.dtype)
        return net

    # ------------------------------------------------------------------
    # core passes on feature arrays (batch, time, feature)

    def _run_direction(self, x_seq: np.ndarray, layer: int, direction: str):
        """One direction over an oriented sequence; returns (h_seq, cache)."""
        cfg = self.config
        H = cfg.hidden_size
        p = f"l{layer}_{direction}"
        wx = self.params[f"{p}_wx"].value
        wh = self.params[f"{p}_wh"].value
        b = self.params[f"{p}_b"].value
        B, T, _ = x_seq.shape
        A = x_seq @ wx + b  # input contributions for every step at once
        h = np.zeros((B, H), dtype=x_seq.dtype)
        hs = np.empty((B, T, H), dtype=x_seq.dtype)
        if cfg.cell == "bilstm":
            gates = np.empty((B, T, 4 * H), dtype=x_seq.dtype)
            cs = np.empty((B, T, H), dtype=x_seq.dtype)
            tcs = np.empty((B, T, H), dtype=x_seq.dtype)
            c = np.zeros((B, H), dtype=x_seq.dtype)
            for t in range(T):
                a = A[:, t] + h @ wh
                sig = _sigmoid(a[:, : 3 * H])
                g = np.tanh(a[:, 3 * H :])
                i, f, o = sig[:, :H], sig[:, H : 2 * H], sig[:, 2 * H : 3 * H]
                c = f * c + i * g
                tc = np.tanh(c)
                h = o * tc
                gates[:, t, : 3 * H] = sig
                gates[:, t, 3 * H :] = g
                cs[:, t] = c
                tcs[:, t] = tc
                hs[:, t] = h
            return hs, {"x": x_seq, "gates": gates, "c": cs, "tc": tcs, "h": hs}
        else:
            gates = np.empty((B, T, 3 * H), dtype=x_seq.dtype)
            hns = np.empty((B, T, H), dtype=x_seq.dtype)
            for t in range(T):
                a_ru = A[:, t, : 2 * H] + h @ wh[:, : 2 * H]
                ru = _sigmoid(a_ru)
                r, u = ru[:, :H], ru[:, H:]
                hn = h @ wh[:, 2 * H :]
                n = np.tanh(A[:, t, 2 * H :] + r * hn)
                h = u * h + (1.0 - u) * n
                gates[:, t, : 2 * H] = ru
                gates[:, t, 2 * H :] = n
                hns[:, t] = hn
                hs[:, t] = h
            return hs, {"x": x_seq, "gates": gates, "hn": hns, "h": hs}

    def _backward_direction(self, d_hs: np.ndarray, layer: int, direction: str, cache: dict):
        """BPTT for one direction; fills weight grads, returns d(x_seq)."""
        cfg = self.config
        H = cfg.hidden_size
        p = f"l{layer}_{direction}"
        wx = self.params[f"{p}_wx"]
        wh = self.params[f"{p}_wh"]
        b = self.params[f"{p}_b"]
        x_seq, hs = cache["x"], cache["h"]
        B, T, _ = x_seq.shape
        gates = cache["gates"]
        if cfg.cell == "bilstm":
            d_ax = np.zeros((B, T, 4 * H), dtype=x_seq.dtype)
            cs, tcs = cache["c"], cache["tc"]
            dh_next = np.zeros((B, H), dtype=x_seq.dtype)
            dc_next = np.zeros((B, H), dtype=x_seq.dtype)
            wh_T = wh.value.T
            for t in range(T - 1, -1, -1):
                dh = d_hs[:, t] + dh_next
                i = gates[:, t, :H]
                f = gates[:, t, H : 2 * H]
                o = gates[:, t, 2 * H : 3 * H]
                g = gates[:, t, 3 * H :]
                tc = tcs[:, t]
                c_prev = cs[:, t - 1] if t > 0 else np.zeros((B, H), dtype=x_seq.dtype)
                do = dh * tc
                dc = dc_next + dh * o * (1.0 - tc * tc)
                d_ax[:, t, :H] = dc * g * i * (1.0 - i)
                d_ax[:, t, H : 2 * H] = dc * c_prev * f * (1.0 - f)
                d_ax[:, t, 2 * H : 3 * H] = do * o * (1.0 - o)
                d_ax[:, t, 3 * H :] = dc * i * (1.0 - g * g)
                dh_next = d_ax[:, t] @ wh_T
                dc_next = dc * f
            d_ah = d_ax  # same pre-activations feed both weight matrices
        else:
            d_ax = np.zeros((B, T, 3 * H), dtype=x_seq.dtype)
            d_ah = np.zeros((B, T, 3 * H), dtype=x_seq.dtype)
            hns = cache["hn"]
            dh_next = np.zeros((B, H), dtype=x_seq.dtype)
            wh_T = wh.value.T
            for t in range(T - 1, -1, -1):
                dh = d_hs[:, t] + dh_next
                r = gates[:, t, :H]
                u = gates[:, t, H : 2 * H]
                n = gates[:, t, 2 * H :]
                hn = hns[:, t]
                h_prev = hs[:, t - 1] if t > 0 else np.zeros((B, H), dtype=x_seq.dtype)
                du = dh * (h_prev - n)
                dan = dh * (1.0 - u) * (1.0 - n * n)
                d_ax[:, t, :H] = dan * hn * r * (1.0 - r)
                d_ax[:, t, H : 2 * H] = du * u * (1.0 - u)
                d_ax[:, t, 2 * H :] = dan
                d_ah[:, t, : 2 * H] = d_ax[:, t, : 2 * H]
                d_ah[:, t, 2 * H :] = dan * r
                dh_next = dh * u + d_ah[:, t] @ wh_T
        h_prev_seq = np.concatenate(
            [np.zeros((B, 1, H), dtype=x_seq.dtype), hs[:, :-1]], axis=1
        )
        flat = lambda a: a.reshape(-1, a.shape[-1])
        wx.grad += flat(x_seq).T @ flat(d_ax)
        wh.grad += flat(h_prev_seq).T @ flat(d_ah)
        b.grad += d_ax.sum(axis=(0, 1))
        return d_ax @ wx.value.T

    def forward_features(self, feats: np.ndarray, z_norm: np.ndarray):
        """Batched forward on (B, T, 4) features; returns (B, T, 4) outputs.

        Caches activations for a following backward_features call.
        """
        cfg = self.config
        feats = np.asarray(feats, dtype=cfg.dtype)
        z_norm = np.asarray(z_norm, dtype=cfg.dtype)
        B, T, _ = feats.shape
        if T > cfg.max_seq_len:
            raise ConfigError(f"sequence length {T} exceeds max_seq_len {cfg.max_seq_len}")
        emb = z_norm[:, None] * self.params["w_z"].value[None, :] + self.params["b_z"].value
        x = np.concatenate(
            [feats, np.broadcast_to(emb[:, None, :], (B, T, cfg.z_embed_dim))], axis=2
        )
        layer_caches = []
        for layer in range(cfg.n_layers):
            h_fw, cache_fw = self._run_direction(x, layer, "fw")
            h_bw_rev, cache_bw = self._run_direction(x[:, ::-1], layer, "bw")
            layer_caches.append((cache_fw, cache_bw))
            x = np.concatenate([h_fw, h_bw_rev[:, ::-1]], axis=2)
        out = (
            x @ self.params["w_out"].value
            + self.params["b_out"].value
            + feats @ self.params["w_pass"].value
        )
        if not np.all(np.isfinite(out)):
            raise NumericalError("forward blowup: non-finite activations")
        self._cache = {
            "feats": feats,
            "z_norm": z_norm,
            "layers": layer_caches,
            "top": x,
        }
        return out

    def backward_features(self, d_out: np.ndarray) -> None:
        """Fill every gradient buffer from upstream output-feature gradients.

        Requires a preceding forward_features call; buffers are overwritten.
        """
        if self._cache is None:
            raise NumericalError("backward called before forward")
        cfg = self.config
        cache = self._cache
        d_out = np.asarray(d_out, dtype=cfg.dtype)
        feats, z_norm, top = cache["feats"], cache["z_norm"], cache["top"]
        for p in self.params.values():
            p.grad[...] = 0.0
        flat = lambda a: a.reshape(-1, a.shape[-1])
        self.params["w_out"].grad += flat(top).T @ flat(d_out)
        self.params["b_out"].grad += d_out.sum(axis=(0, 1))
        self.params["w_pass"].grad += flat(feats).T @ flat(d_out)
        dx = d_out @ self.params["w_out"].value.T
        H = cfg.hidden_size
        for layer in range(cfg.n_layers - 1, -1, -1):
            cache_fw, cache_bw = cache["layers"][layer]
            dx_fw = self._backward_direction(dx[:, :, :H], layer, "fw", cache_fw)
            dx_bw = self._backward_direction(dx[:, ::-1, H:], layer, "bw", cache_bw)
            dx = dx_fw + dx_bw[:, ::-1]
        # layer-0 input was [signal features, z embedding]
        d_emb = dx[:, :, N_SIGNAL_FEATURES:].sum(axis=1)  # (B, E)
        self.params["w_z"].grad += (d_emb * z_norm[:, None]).sum(axis=0)
        self.params["b_z"].grad += d_emb.sum(axis=0)

    # ------------------------------------------------------------------
    # waveform-level API

    def forward(self, w_in: DualPolWaveform, z_km: float) -> DualPolWaveform:
        feats = waveform_to_features(w_in, self.config.dtype)[None]
        z_norm = np.array([z_km / self.config.z_ref_km])
        out = self.forward_features(feats, z_norm)
        return features_to_waveform(out[0], w_in.grid, z_km)

    def backward(self, d_out: np.ndarray) -> None:
        """Waveform-level backward: d_out is a (T, 4) feature gradient."""
        self.backward_features(np.asarray(d_out)[None])

    def parameter_vector(self) -> np.ndarray:
        return np.concatenate([p.value.ravel() for p in self.params.values()])

    def copy_weights_from(self, other: "SurrogateNet") -> None:
        for name, p in self.params.items():
            p.value[...] = other.params[name].value


def d_output_dz(
    net: SurrogateNet, w_in: DualPolWaveform, z_km: float, dz_km: float = 0.1
) -> DualPolWaveform:
    """Central-difference derivative of the net output with respect to z.

    Second-order accurate in dz_km; evaluated through the feature-level
    forward so z - dz may dip below zero near launch.
    """
    if dz_km <= 0:
        raise ConfigError("dz_km must be positive")
    feats = waveform_to_features(w_in, net.config.dtype)[None]
    zr = net.config.z_ref_km
    hi = net.forward_features(feats, np.array([(z_km + dz_km) / zr]))
    lo = net.forward_features(feats, np.array([(z_km - dz_km) / zr]))
    deriv = (hi[0] - lo[0]) / (2.0 * dz_km)
    return features_to_waveform(deriv, w_in.grid, z_km)


# ----------------------------------------------------------------------
# Adam optimizer (bias-corrected, deterministic)


class AdamState:
    """First/second moment buffers keyed by parameter name, plus step count."""

    def __init__(self, betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8):
        self.betas = betas
        self.eps = eps
        self.step_count = 0
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}


def adam_step(
    net: SurrogateNet,
    state: AdamState,
    lr: float,
    step_index: int | None = None,
) -> SurrogateNet:
    """One Adam update from the current gradient buffers (in place).

    step_index is 1-based for bias correction; defaults to the internal
    counter.  Zero gradients leave the weights exactly unchanged.
    """
    state.step_count += 1
    t = state.step_count if step_index is None else step_index
    b1, b2 = state.betas
    for name, p in net.params.items():
        if name not in state.m:
            state.m[name] = np.zeros_like(p.value)
            state.v[name] = np.zeros_like(p.value)
        g = p.grad
        m = state.m[name]
        v = state.v[name]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        p.value -= lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return net


# ----------------------------------------------------------------------
# checkpoint files (FDDN v1)

CKPT_MAGIC = b"FDDN"
CKPT_VERSION = 1
_CKPT_HEADER = struct.Struct("<4sI")
_CKPT_CONFIG = struct.Struct("<IIIBBHdIIQd")
_CELL_CODES = {"bilstm": 0, "bigru": 1}
_PRECISION_CODES = {"f32": 0, "f64": 1}


def _pack_config(cfg: NetConfig) -> bytes:
    return _CKPT_CONFIG.pack(
        cfg.hidden_size,
        cfg.n_layers,
        cfg.z_embed_dim,
        _CELL_CODES[cfg.cell],
        _PRECISION_CODES[cfg.precision],
        0,
        cfg.z_ref_km,
        cfg.max_seq_len,
        0,
        cfg.init_seed,
        cfg.init_scale,
    )


def _unpack_config(raw: bytes, offset: int) -> tuple[NetConfig, int]:
    (
        hidden,
        n_layers,
        z_embed,
        cell_code,
        prec_code,
        _pad,
        z_ref,
        max_seq,
        _pad2,
        init_seed,
        init_scale,
    ) = _CKPT_CONFIG.unpack_from(raw, offset)
    cells = {v: k for k, v in _CELL_CODES.items()}
    precisions = {v: k for k, v in _PRECISION_CODES.items()}
    if cell_code not in cells or prec_code not in precisions:
        raise ConfigError("checkpoint holds an unknown cell or precision code")
    cfg = NetConfig(
        hidden_size=hidden,
        n_layers=n_layers,
        z_embed_dim=z_embed,
        cell=cells[cell_code],
        precision=precisions[prec_code],
        init_seed=init_seed,
        init_scale=init_scale,
        z_ref_km=z_ref,
        max_seq_len=max_seq,
    )
    return cfg, offset + _CKPT_CONFIG.size


def save_checkpoint(net: SurrogateNet, path) -> None:
    """Write magic, version, config, then every weight tensor as
    (name, dims, row-major f64 values), little-endian."""
    chunks = [_CKPT_HEADER.pack(CKPT_MAGIC, CKPT_VERSION), _pack_config(net.config)]
    chunks.append(struct.pack("<I", len(net.params)))
    for name, p in net.params.items():
        nb = name.encode()
        chunks.append(struct.pack("<H", len(nb)))
        chunks.append(nb)
        chunks.append(struct.pack("<B", p.value.ndim))
        chunks.append(struct.pack(f"<{p.value.ndim}Q", *p.value.shape))
        chunks.append(np.ascontiguousarray(p.value, dtype="<f8").tobytes())
    Path(path).write_bytes(b"".join(chunks))


def load_checkpoint(path, expected_config: NetConfig | None = None) -> SurrogateNet:
    raw = Path(path).read_bytes()
    magic, version = _CKPT_HEADER.unpack_from(raw)
    if magic != CKPT_MAGIC:
        raise ConfigError(f"{path}: bad checkpoint magic {magic!r}")
    if version != CKPT_VERSION:
        raise ConfigError(f"{path}: unsupported checkpoint version {version}")
    cfg, offset = _unpack_config(raw, _CKPT_HEADER.size)
    if expected_config is not None and cfg != expected_config:
        raise ConfigError(
            f"checkpoint config {cfg} does not match expected {expected_config}"
        )
    net = SurrogateNet.zeros(cfg)
    (n_tensors,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    seen = set()
    for _ in range(n_tensors):
        (name_len,) = struct.unpack_from("<H", raw, offset)
        offset += 2
        name = raw[offset : offset + name_len].decode()
        offset += name_len
        (ndim,) = struct.unpack_from("<B", raw, offset)
        offset += 1
        shape = struct.unpack_from(f"<{ndim}Q", raw, offset)
        offset += 8 * ndim
        count = int(np.prod(shape)) if ndim else 1
        values = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
        offset += 8 * count
        if name not in net.params:
            raise ConfigError(f"{path}: unexpected tensor {name!r}")
        p = net.params[name]
        if tuple(shape) != p.value.shape:
            raise ConfigError(
                f"{path}: tensor {name!r} has shape {tuple(shape)}, expected {p.value.shape}"
            )
        p.value[...] = values.reshape(shape).astype(p.value.dtype)
        seen.add(name)
    if seen != set(net.params):
        raise ConfigError(f"{path}: checkpoint is missing tensors {set(net.params) - seen}")
    return net
