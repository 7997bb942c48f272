"""Experiment harness: dataset layout, training loop, evaluation, compare runs."""

import json

import numpy as np
import pytest

from fddsim.errors import ConfigError
from fddsim.harness import (
    ExperimentConfig,
    _learning_rate,
    build_dataset,
    compare,
    evaluate,
    train,
)
from fddsim.model import ModelKind
from fddsim.net import NetConfig
from fddsim.ssfm import FiberParams, SsfmConfig
from fddsim.transmitter import TxConfig


def tiny_config(kind=ModelKind.FDD, **overrides):
    """Runs in well under a second per epoch: 256-sample frames, hidden 4."""
    defaults = dict(
        tx=TxConfig(n_symbols=64),
        net=NetConfig(hidden_size=4, z_embed_dim=2, max_seq_len=256),
        train_distances_km=(5.0, 10.0),
        eval_distances_km=(5.0, 15.0),
        epochs=2,
        batch_size=4,
        window_len=128,
        n_train_frames=2,
        n_eval_frames=1,
        monitor_windows=2,
        ssfm=SsfmConfig(step_km=0.5),
    )
    defaults.update(overrides)
    return ExperimentConfig(kind=kind, **defaults)


# ----------------------------------------------------------------------
# configuration guard rails


def test_window_must_divide_frame():
    with pytest.raises(ConfigError, match="divide"):
        tiny_config(window_len=96)


def test_window_must_respect_oversampling():
    with pytest.raises(ConfigError, match="oversampling"):
        tiny_config(window_len=2)


def test_frame_must_fit_the_net():
    with pytest.raises(ConfigError, match="max_seq_len"):
        tiny_config(net=NetConfig(hidden_size=4, z_embed_dim=2, max_seq_len=128))


def test_distances_must_be_positive():
    with pytest.raises(ConfigError, match="positive"):
        tiny_config(train_distances_km=(5.0, -1.0))


def test_loop_counts_validated():
    with pytest.raises(ConfigError):
        tiny_config(epochs=-1)
    with pytest.raises(ConfigError):
        tiny_config(batch_size=0)
    with pytest.raises(ConfigError):
        tiny_config(n_eval_frames=0)


def test_learning_rate_bounds_validated():
    with pytest.raises(ConfigError):
        tiny_config(learning_rate=0.0)
    with pytest.raises(ConfigError):
        tiny_config(lr_floor_fraction=0.0)


def test_kind_accepts_strings():
    assert tiny_config(kind="baseline").kind is ModelKind.BASELINE


# ----------------------------------------------------------------------
# dataset construction


def test_dataset_layout_frames_outer_distances_inner():
    cfg = tiny_config()
    data = build_dataset(cfg)
    # 2 frames x 2 distances x (256 / 128) windows
    assert len(data) == 8
    assert data.inputs.shape == (8, 128, 4)
    assert data.targets.shape == (8, 128, 4)
    assert data.z_km.tolist() == [5.0, 5.0, 10.0, 10.0, 5.0, 5.0, 10.0, 10.0]
    assert data.grid.n_samples == 128


def test_dataset_is_bit_identical_across_builds():
    cfg = tiny_config()
    a, b = build_dataset(cfg), build_dataset(cfg)
    assert np.array_equal(a.inputs, b.inputs)
    assert np.array_equal(a.targets, b.targets)
    assert np.array_equal(a.z_km, b.z_km)


def test_decoupled_targets_reduce_to_the_launch_field_when_linear():
    cfg = tiny_config(fiber=FiberParams(gamma_per_w_km=0.0))
    data = build_dataset(cfg)
    err = np.linalg.norm(data.targets - data.inputs)
    assert err < 1e-10 * np.linalg.norm(data.inputs)


def test_raw_targets_keep_the_channel_distortion():
    cfg = tiny_config(kind=ModelKind.BASELINE, fiber=FiberParams(gamma_per_w_km=0.0))
    data = build_dataset(cfg)
    err = np.linalg.norm(data.targets - data.inputs)
    assert err > 1e-2 * np.linalg.norm(data.inputs)


# ----------------------------------------------------------------------
# learning-rate schedule


def test_learning_rate_endpoints_and_monotone_decay():
    cfg = tiny_config(epochs=5, learning_rate=1e-3, lr_floor_fraction=0.01)
    rates = [_learning_rate(cfg, e) for e in range(1, 6)]
    assert rates[0] == pytest.approx(1e-3, rel=1e-12)
    assert rates[-1] == pytest.approx(1e-5, rel=1e-12)
    assert all(a > b for a, b in zip(rates, rates[1:]))


def test_learning_rate_single_epoch_is_the_peak():
    cfg = tiny_config(epochs=1)
    assert _learning_rate(cfg, 1) == cfg.learning_rate


# ----------------------------------------------------------------------
# training loop


def test_zero_epochs_returns_the_initialized_model():
    model, log = train(tiny_config(epochs=0))
    assert [row.epoch for row in log.epochs] == [0]
    assert np.all(model.net.params["w_out"].value == 0.0)


def test_epoch_rows_are_numbered_and_finite():
    _, log = train(tiny_config(epochs=2))
    assert [row.epoch for row in log.epochs] == [0, 1, 2]
    for row in log.epochs:
        assert np.isfinite(row.train_mse)
        assert np.isfinite(row.nlse_loss_mean)
        assert row.nlse_loss_mean > 0.0


def test_training_is_bit_identical_across_runs():
    cfg = tiny_config()
    model_a, log_a = train(cfg)
    model_b, log_b = train(cfg)
    assert log_a.epochs_jsonl() == log_b.epochs_jsonl()
    for name, p in model_a.net.params.items():
        assert np.array_equal(p.value, model_b.net.params[name].value), name


def test_train_writes_bundle_and_metrics(tmp_path):
    out = tmp_path / "run"
    train(tiny_config(epochs=1), out_dir=out)
    assert (out / "model.fddn").exists()
    assert (out / "model.json").exists()
    assert (out / "epochs.jsonl").exists()
    lines = (out / "epochs.jsonl").read_text().splitlines()
    assert len(lines) == 2
    assert json.loads(lines[0])["epoch"] == 0


def test_checkpoints_land_on_the_interval(tmp_path):
    out = tmp_path / "ckpt"
    train(tiny_config(epochs=2, checkpoint_interval=1), out_dir=out)
    assert (out / "checkpoint_epoch00001.fddn").exists()
    assert (out / "checkpoint_epoch00002.fddn").exists()


# ----------------------------------------------------------------------
# evaluation


def test_evaluate_rows_cover_the_distance_grid():
    cfg = tiny_config(epochs=0)
    model, _ = train(cfg)
    rows = evaluate(model, cfg)
    assert [r.z_km for r in rows] == [5.0, 15.0]
    assert [r.in_training_set for r in rows] == [True, False]
    assert all(np.isfinite(r.nmse) and r.nmse >= 0 for r in rows)


def test_evaluate_is_deterministic():
    cfg = tiny_config(epochs=0)
    model, _ = train(cfg)
    a = [r.nmse for r in evaluate(model, cfg)]
    b = [r.nmse for r in evaluate(model, cfg)]
    assert a == b


def test_untrained_decoupled_model_already_solves_the_linear_channel():
    # identity net + exact analytic tail: the composite is the true channel
    cfg = tiny_config(epochs=0, fiber=FiberParams(gamma_per_w_km=0.0))
    model, _ = train(cfg)
    for row in evaluate(model, cfg):
        assert row.nmse < 1e-12, row
    cfg_raw = tiny_config(
        kind=ModelKind.BASELINE, epochs=0, fiber=FiberParams(gamma_per_w_km=0.0)
    )
    model_raw, _ = train(cfg_raw)
    for row in evaluate(model_raw, cfg_raw):
        assert row.nmse > 1e-2, row


# ----------------------------------------------------------------------
# paired comparison


def test_compare_rejects_matching_kinds():
    with pytest.raises(ConfigError, match="one baseline config and one fdd"):
        compare(tiny_config(), tiny_config())


def test_compare_rejects_mismatched_setups():
    a = tiny_config(kind=ModelKind.BASELINE)
    b = tiny_config(kind=ModelKind.FDD, epochs=3)
    with pytest.raises(ConfigError, match="differ"):
        compare(a, b)


def test_compare_outputs_and_determinism(tmp_path):
    a = tiny_config(kind=ModelKind.BASELINE, epochs=1)
    b = tiny_config(kind=ModelKind.FDD, epochs=1)
    r1 = compare(a, b, out_dir=tmp_path / "one")
    r2 = compare(a, b, out_dir=tmp_path / "two")
    assert len(r1.rows) == len(a.eval_distances_km)
    assert r1.final_nlse_baseline > 0 and r1.final_nlse_fdd > 0
    summary = json.loads(r1.summary_json())
    assert summary["final_nlse_baseline"] == r1.final_nlse_baseline
    for name in ("comparison.csv", "summary.json"):
        one = (tmp_path / "one" / name).read_bytes()
        two = (tmp_path / "two" / name).read_bytes()
        assert one == two, name
    for sub in ("baseline", "fdd"):
        one = (tmp_path / "one" / sub / "epochs.jsonl").read_bytes()
        two = (tmp_path / "two" / sub / "epochs.jsonl").read_bytes()
        assert one == two, sub
