"""Experiment orchestration: datasets, training, evaluation, comparisons.

Data flow for one experiment: seeded transmit frames are propagated through
the split-step ground truth to each training distance; received waveforms are
converted to per-kind training targets (fdd targets are pulled back through
the exact linear inverse); frames are cut into fixed-length windows; the net
trains on time-domain MSE over [Re, Im] of both polarizations with Adam and a
cosine learning-rate decay.  Every epoch logs the train MSE and the mean
channel-equation residual of the composite model on a fixed monitoring batch
(via predict_dz, never the training loss).

Seed partitioning: training frame f uses base_seed + f; evaluation draw k
(distance index i, frame j, k = i * n_eval_frames + j) uses
base_seed + 10**6 + k.  Training and evaluation data never share a stream.
All shuffling is derived from the base seed, so a rerun of the same config is
bit-identical, including the metrics files.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError
from .model import ChannelModel, ModelKind, predict, predict_dz, save_bundle, training_target
from .net import (
    AdamState,
    NetConfig,
    SurrogateNet,
    adam_step,
    features_to_waveform,
    waveform_to_features,
)
from .residual import nlse_residual
from .rng import SplitMix64, child_seed
from .signal import DualPolWaveform, WaveformGrid, nmse
from .ssfm import FiberParams, SsfmConfig, propagate
from .transmitter import TxConfig, transmit

EVAL_SEED_OFFSET = 10**6
_SHUFFLE_TAG_BASE = 7000


@dataclass(frozen=True)
class ExperimentConfig:
    tx: TxConfig = TxConfig()
    fiber: FiberParams = FiberParams()
    ssfm: SsfmConfig = SsfmConfig()
    net: NetConfig = NetConfig()
    kind: ModelKind = ModelKind.FDD
    train_distances_km: tuple = (10.0, 20.0, 30.0, 50.0, 70.0)
    eval_distances_km: tuple = (10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0)
    epochs: int = 200
    batch_size: int = 8
    learning_rate: float = 1e-3
    lr_floor_fraction: float = 0.01  # cosine decay ends at lr * this
    window_len: int = 1024
    n_train_frames: int = 8
    n_eval_frames: int = 2
    monitor_windows: int = 4
    monitor_dz_km: float = 0.1
    checkpoint_interval: int = 100
    adam_betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8
    seed: int = 2024

    def __post_init__(self):
        object.__setattr__(self, "kind", ModelKind(self.kind))
        object.__setattr__(self, "train_distances_km", tuple(float(z) for z in self.train_distances_km))
        object.__setattr__(self, "eval_distances_km", tuple(float(z) for z in self.eval_distances_km))
        frame_samples = self.tx.grid().n_samples
        if self.window_len < 2 or frame_samples % self.window_len != 0:
            raise ConfigError(
                f"window_len {self.window_len} must divide the frame length {frame_samples}"
            )
        if self.window_len % self.tx.oversampling != 0:
            raise ConfigError("window_len must be a multiple of the oversampling factor")
        if self.window_len > self.net.max_seq_len or frame_samples > self.net.max_seq_len:
            raise ConfigError("frame or window exceeds the net's max_seq_len")
        if any(z <= 0 for z in self.train_distances_km + self.eval_distances_km):
            raise ConfigError("all distances must be positive")
        if self.epochs < 0 or self.batch_size < 1 or self.n_train_frames < 1 or self.n_eval_frames < 1:
            raise ConfigError("epochs >= 0 and batch/frame counts >= 1 are required")
        if self.learning_rate <= 0 or not (0 < self.lr_floor_fraction <= 1):
            raise ConfigError("learning_rate must be positive and lr_floor_fraction in (0, 1]")

    def window_grid(self) -> WaveformGrid:
        g = self.tx.grid()
        return WaveformGrid(self.window_len, g.dt, g.symbol_rate, g.oversampling)


def desk_config(kind: ModelKind = ModelKind.FDD, **overrides) -> ExperimentConfig:
    """Small single-channel setup that trains in minutes on one core."""
    return ExperimentConfig(kind=kind, **overrides)


def paper_config(kind: ModelKind = ModelKind.FDD, **overrides) -> ExperimentConfig:
    """Five-channel WDM setup.  The aggregate grid needs 8x oversampling:
    five 50 GHz channels cannot be represented alias-free at 4x of 30 GBaud."""
    defaults = dict(
        tx=TxConfig(n_channels=5, oversampling=8, n_symbols=256),
        net=NetConfig(hidden_size=64),
        window_len=2048,
    )
    defaults.update(overrides)
    return ExperimentConfig(kind=kind, **defaults)


# ----------------------------------------------------------------------
# datasets


@dataclass
class WindowDataset:
    """Fixed-length training windows: inputs are transmitted waveform
    features, targets are per-kind received-waveform features."""

    inputs: np.ndarray  # (n, window_len, 4) float64
    targets: np.ndarray  # (n, window_len, 4)
    z_km: np.ndarray  # (n,)
    grid: WaveformGrid

    def __len__(self) -> int:
        return self.inputs.shape[0]


def _cut_windows(feats: np.ndarray, window_len: int) -> np.ndarray:
    return feats.reshape(-1, window_len, feats.shape[1])


def build_dataset(cfg: ExperimentConfig) -> WindowDataset:
    """Deterministic dataset: frames outer, distances inner, windows last."""
    inputs, targets, zs = [], [], []
    for f in range(cfg.n_train_frames):
        w_tx = transmit(cfg.tx, seed=cfg.seed + f)
        tx_windows = _cut_windows(waveform_to_features(w_tx), cfg.window_len)
        for z in cfg.train_distances_km:
            w_rx = propagate(w_tx, cfg.fiber, z, cfg.ssfm)
            w_tgt = training_target(cfg.kind, w_rx, cfg.fiber, z)
            tgt_windows = _cut_windows(waveform_to_features(w_tgt), cfg.window_len)
            inputs.append(tx_windows)
            targets.append(tgt_windows)
            zs.append(np.full(tx_windows.shape[0], z))
    return WindowDataset(
        np.concatenate(inputs),
        np.concatenate(targets),
        np.concatenate(zs),
        cfg.window_grid(),
    )


# ----------------------------------------------------------------------
# metrics


@dataclass(frozen=True)
class EpochRow:
    epoch: int
    train_mse: float
    nlse_loss_mean: float


@dataclass(frozen=True)
class DistanceRow:
    z_km: float
    nmse: float
    in_training_set: bool


@dataclass
class MetricsLog:
    epochs: list = field(default_factory=list)
    distances: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    def epochs_jsonl(self) -> str:
        lines = [
            json.dumps(
                {"epoch": r.epoch, "train_mse": r.train_mse, "nlse_loss_mean": r.nlse_loss_mean},
                sort_keys=True,
            )
            for r in self.epochs
        ]
        return "\n".join(lines) + "\n"

    def distances_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["z_km", "nmse", "in_training_set"])
        for r in self.distances:
            writer.writerow([repr(r.z_km), repr(r.nmse), int(r.in_training_set)])
        return buf.getvalue()

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        if self.epochs:
            (out / "epochs.jsonl").write_text(self.epochs_jsonl())
        if self.distances:
            (out / "distances.csv").write_text(self.distances_csv())
        if self.notes:
            (out / "notes.txt").write_text("\n".join(self.notes) + "\n")


# ----------------------------------------------------------------------
# training


def _learning_rate(cfg: ExperimentConfig, epoch: int) -> float:
    """Cosine decay from learning_rate to its floor across the epoch budget."""
    lo = cfg.learning_rate * cfg.lr_floor_fraction
    if cfg.epochs <= 1:
        return cfg.learning_rate
    t = (epoch - 1) / (cfg.epochs - 1)
    return lo + (cfg.learning_rate - lo) * 0.5 * (1.0 + math.cos(math.pi * t))


def _dataset_mse(net: SurrogateNet, data: WindowDataset, cfg: ExperimentConfig) -> float:
    z_ref = net.config.z_ref_km
    total, count = 0.0, 0
    for start in range(0, len(data), cfg.batch_size):
        sl = slice(start, start + cfg.batch_size)
        out = net.forward_features(data.inputs[sl], data.z_km[sl] / z_ref)
        err = np.asarray(out, dtype=np.float64) - data.targets[sl]
        total += float(np.sum(err * err))
        count += err.size
    return total / count


def _monitor_residual(model: ChannelModel, data: WindowDataset, cfg: ExperimentConfig) -> float:
    """Mean channel-equation residual of the composite model over the fixed
    monitoring rows (the first windows of the dataset)."""
    n = min(cfg.monitor_windows, len(data))
    scores = []
    for i in range(n):
        w_tx = features_to_waveform(data.inputs[i], data.grid, 0.0)
        z = float(data.z_km[i])
        s = predict(model, w_tx, z)
        ds = predict_dz(model, w_tx, z, cfg.monitor_dz_km)
        scores.append(nlse_residual(s, ds, model.fp).mean_abs_residual)
    return float(np.mean(scores)) if scores else float("nan")


def train(cfg: ExperimentConfig, out_dir=None) -> tuple[ChannelModel, MetricsLog]:
    """Train one surrogate; returns the model and its metrics log.

    With epochs = 0 the initialized model is returned and the log holds only
    the epoch-0 monitoring row.  A non-finite epoch loss aborts training and
    the weights roll back to the end of the last finite epoch.
    """
    data = build_dataset(cfg)
    net = SurrogateNet(cfg.net)
    model = ChannelModel(cfg.kind, net, cfg.fiber)
    adam = AdamState(cfg.adam_betas, cfg.adam_eps)
    log = MetricsLog()
    z_ref = cfg.net.z_ref_km
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)

    log.epochs.append(EpochRow(0, _dataset_mse(net, data, cfg), _monitor_residual(model, data, cfg)))
    snapshot = {name: p.value.copy() for name, p in net.params.items()}

    for epoch in range(1, cfg.epochs + 1):
        lr = _learning_rate(cfg, epoch)
        perm = SplitMix64(child_seed(cfg.seed, _SHUFFLE_TAG_BASE + epoch)).shuffled_indices(len(data))
        total, count = 0.0, 0
        for start in range(0, len(perm), cfg.batch_size):
            idx = perm[start : start + cfg.batch_size]
            out = net.forward_features(data.inputs[idx], data.z_km[idx] / z_ref)
            err = out - data.targets[idx].astype(out.dtype)
            total += float(np.sum(err.astype(np.float64) ** 2))
            count += err.size
            net.backward_features(2.0 * err / err.size)
            adam_step(net, adam, lr)
        train_mse = total / count
        if not math.isfinite(train_mse):
            for name, p in net.params.items():
                p.value[...] = snapshot[name]
            log.notes.append(f"epoch {epoch}: non-finite loss, rolled back to epoch {epoch - 1}")
            break
        log.epochs.append(EpochRow(epoch, train_mse, _monitor_residual(model, data, cfg)))
        snapshot = {name: p.value.copy() for name, p in net.params.items()}
        if out_path is not None and cfg.checkpoint_interval > 0 and epoch % cfg.checkpoint_interval == 0:
            save_bundle(model, out_path / f"checkpoint_epoch{epoch:05d}")

    if out_path is not None:
        save_bundle(model, out_path / "model")
        log.write(out_path)
    return model, log


# ----------------------------------------------------------------------
# evaluation and comparison


def evaluate(model: ChannelModel, cfg: ExperimentConfig) -> list[DistanceRow]:
    """Held-out NMSE per distance on freshly seeded frames.

    Each row averages n_eval_frames frames and flags whether the distance
    was part of the training grid.
    """
    rows = []
    for i, z in enumerate(cfg.eval_distances_km):
        scores = []
        for j in range(cfg.n_eval_frames):
            seed = cfg.seed + EVAL_SEED_OFFSET + i * cfg.n_eval_frames + j
            w_tx = transmit(cfg.tx, seed=seed)
            truth = propagate(w_tx, cfg.fiber, z, cfg.ssfm)
            pred = predict(model, w_tx, z)
            scores.append(nmse(pred, truth))
        rows.append(DistanceRow(z, float(np.mean(scores)), z in cfg.train_distances_km))
    return rows


@dataclass
class CompareResult:
    rows: list  # (z_km, nmse_baseline, nmse_fdd, in_training_set)
    final_nlse_baseline: float
    final_nlse_fdd: float
    log_baseline: MetricsLog
    log_fdd: MetricsLog

    def comparison_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["z_km", "nmse_baseline", "nmse_fdd", "in_training_set"])
        for z, nb, nf, flag in self.rows:
            writer.writerow([repr(z), repr(nb), repr(nf), int(flag)])
        return buf.getvalue()

    def summary_json(self) -> str:
        return json.dumps(
            {
                "final_nlse_baseline": self.final_nlse_baseline,
                "final_nlse_fdd": self.final_nlse_fdd,
            },
            sort_keys=True,
            indent=2,
        ) + "\n"

    def write(self, out_dir) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "comparison.csv").write_text(self.comparison_csv())
        (out / "summary.json").write_text(self.summary_json())
        self.log_baseline.write(out / "baseline")
        self.log_fdd.write(out / "fdd")


def compare(cfg_a: ExperimentConfig, cfg_b: ExperimentConfig, out_dir=None) -> CompareResult:
    """Train and evaluate a baseline/fdd pair under identical conditions.

    The two configs must differ only in model kind; seeds, data, and
    architecture stay shared so the comparison isolates the decoupling.
    """
    if replace(cfg_a, kind=ModelKind.FDD) != replace(cfg_b, kind=ModelKind.FDD):
        raise ConfigError("compare: configs must differ only in model kind")
    if {cfg_a.kind, cfg_b.kind} != {ModelKind.BASELINE, ModelKind.FDD}:
        raise ConfigError("compare: need one baseline config and one fdd config")
    cfg_base = cfg_a if cfg_a.kind is ModelKind.BASELINE else cfg_b
    cfg_fdd = cfg_b if cfg_b.kind is ModelKind.FDD else cfg_a

    out_path = Path(out_dir) if out_dir is not None else None
    model_base, log_base = train(cfg_base, out_path / "baseline" if out_path else None)
    model_fdd, log_fdd = train(cfg_fdd, out_path / "fdd" if out_path else None)
    rows_base = evaluate(model_base, cfg_base)
    rows_fdd = evaluate(model_fdd, cfg_fdd)
    log_base.distances.extend(rows_base)
    log_fdd.distances.extend(rows_fdd)

    rows = [
        (rb.z_km, rb.nmse, rf.nmse, rb.in_training_set)
        for rb, rf in zip(rows_base, rows_fdd)
    ]
    result = CompareResult(
        rows=rows,
        final_nlse_baseline=log_base.epochs[-1].nlse_loss_mean,
        final_nlse_fdd=log_fdd.epochs[-1].nlse_loss_mean,
        log_baseline=log_base,
        log_fdd=log_fdd,
    )
    if out_path is not None:
        result.write(out_path)
    return result
