"""Command-line interface.

Subcommands mirror the library pipeline: generate-data, simulate, decouple,
train, evaluate, residual, compare.  Exit codes: 0 on success, 2 for
configuration errors (bad flags, bad config files, inconsistent physics),
3 for numerical failures (blowup, non-finite values).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, NumericalError
from .harness import (
    ExperimentConfig,
    MetricsLog,
    compare,
    desk_config,
    evaluate,
    paper_config,
    train,
)
from .linear import LinearOperator, apply_inverse
from .model import ModelKind, load_bundle, predict, predict_dz
from .residual import nlse_residual, residual_of_ssfm
from .signal import nmse
from .ssfm import propagate
from .transmitter import transmit
from .waveio import read_dpwf, write_dpwf

_PROFILES = {"desk": desk_config, "paper": paper_config}


def experiment_config_from_dict(d: dict, profile: str = "desk") -> ExperimentConfig:
    """Overlay a config dictionary (nested sections tx/fiber/ssfm/net plus
    flat experiment fields) onto a profile's defaults."""
    if profile not in _PROFILES:
        raise ConfigError(f"unknown profile {profile!r}; choose from {sorted(_PROFILES)}")
    base = _PROFILES[profile]()
    try:
        tx = replace(base.tx, **d.get("tx", {}))
        fiber = replace(base.fiber, **d.get("fiber", {}))
        ssfm = replace(base.ssfm, **d.get("ssfm", {}))
        net = replace(base.net, **d.get("net", {}))
        top = {k: v for k, v in d.items() if k not in ("tx", "fiber", "ssfm", "net")}
        for key in ("train_distances_km", "eval_distances_km", "adam_betas"):
            if key in top:
                top[key] = tuple(top[key])
        return replace(base, tx=tx, fiber=fiber, ssfm=ssfm, net=net, **top)
    except TypeError as exc:
        raise ConfigError(f"bad config key: {exc}") from exc


def _load_config(args) -> ExperimentConfig:
    d = {}
    if getattr(args, "config", None):
        path = Path(args.config)
        if not path.exists():
            raise ConfigError(f"config file not found: {path}")
        try:
            d = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError(f"{path}: top level must be a JSON object")
    cfg = experiment_config_from_dict(d, args.profile)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _cmd_generate_data(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    sidecar = asdict(cfg.tx)
    (out / "tx_config.json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    for f in range(args.frames if args.frames is not None else cfg.n_train_frames):
        w = transmit(cfg.tx, seed=cfg.seed + f)
        write_dpwf(out / f"tx_frame{f:04d}.dpwf", w)
    print(f"wrote {args.frames if args.frames is not None else cfg.n_train_frames} "
          f"frames to {out}")
    return 0


def _cmd_simulate(args) -> int:
    cfg = _load_config(args)
    w = read_dpwf(args.input, oversampling=cfg.tx.oversampling)
    out = propagate(w, cfg.fiber, args.distance, cfg.ssfm)
    write_dpwf(args.output, out)
    print(f"propagated {args.distance} km: {args.input} -> {args.output}")
    return 0


def _cmd_decouple(args) -> int:
    cfg = _load_config(args)
    w = read_dpwf(args.input, oversampling=cfg.tx.oversampling)
    distance = args.distance if args.distance is not None else w.z_km
    if distance <= 0:
        raise ConfigError("decouple needs a positive distance (flag or file header)")
    out = apply_inverse(w, LinearOperator(cfg.fiber, distance))
    write_dpwf(args.output, out)
    print(f"stripped {distance} km of linear propagation: {args.input} -> {args.output}")
    return 0


def _cmd_train(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    model, log = train(cfg, out)
    last = log.epochs[-1]
    print(
        f"trained {cfg.kind.value} for {last.epoch} epochs: "
        f"train_mse={last.train_mse:.3e} nlse_loss={last.nlse_loss_mean:.3e}"
    )
    print(f"bundle and metrics in {out}")
    return 0


def _cmd_evaluate(args) -> int:
    cfg = _load_config(args)
    model = load_bundle(args.model)
    rows = evaluate(model, cfg)
    log = MetricsLog(distances=list(rows))
    out = _out_dir(args)
    log.write(out)
    for r in rows:
        tag = "train" if r.in_training_set else "held-out"
        print(f"z={r.z_km:6.1f} km  nmse={r.nmse:.3e}  ({tag})")
    print(f"distances.csv in {out}")
    return 0


def _cmd_residual(args) -> int:
    cfg = _load_config(args)
    distances = (
        tuple(float(z) for z in args.distances.split(","))
        if args.distances
        else cfg.eval_distances_km
    )
    model = load_bundle(args.model) if args.model else None
    out = _out_dir(args)
    reports = []
    lines = []
    for i, z in enumerate(distances):
        for j in range(cfg.n_eval_frames):
            seed = cfg.seed + 10**6 + i * cfg.n_eval_frames + j
            w_tx = transmit(cfg.tx, seed=seed)
            if model is None:
                rep = residual_of_ssfm(w_tx, cfg.fiber, z, cfg=cfg.ssfm)
            else:
                s = predict(model, w_tx, z)
                ds = predict_dz(model, w_tx, z, cfg.monitor_dz_km)
                rep = nlse_residual(s, ds, cfg.fiber)
            reports.append(rep)
            lines.append(json.dumps({"seed": seed, **rep.to_dict()}, sort_keys=True))
    aggregate = float(np.mean([r.mean_abs_residual for r in reports]))
    lines.append(json.dumps({"aggregate_mean_abs_residual": aggregate}, sort_keys=True))
    (out / "residual.jsonl").write_text("\n".join(lines) + "\n")
    csv_lines = ["z_km,mean_abs_residual,term_dz,term_attenuation,term_dispersion,term_nonlinear"]
    for rep in reports:
        csv_lines.append(
            f"{rep.z_km!r},{rep.mean_abs_residual!r},{rep.term_dz!r},"
            f"{rep.term_attenuation!r},{rep.term_dispersion!r},{rep.term_nonlinear!r}"
        )
    (out / "residual.csv").write_text("\n".join(csv_lines) + "\n")
    source = "model" if model is not None else "split-step ground truth"
    print(f"mean |residual| of {source} over {len(reports)} sequences: {aggregate:.3e}")
    print(f"residual.jsonl and residual.csv in {out}")
    return 0


def _cmd_compare(args) -> int:
    cfg = _load_config(args)
    out = _out_dir(args)
    result = compare(
        replace(cfg, kind=ModelKind.BASELINE), replace(cfg, kind=ModelKind.FDD), out
    )
    print("z_km    nmse_baseline  nmse_fdd      held-out")
    for z, nb, nf, in_train in result.rows:
        print(f"{z:6.1f}  {nb:12.3e}  {nf:12.3e}  {'' if in_train else 'yes'}")
    print(
        f"final nlse_loss: baseline={result.final_nlse_baseline:.3e} "
        f"fdd={result.final_nlse_fdd:.3e}"
    )
    print(f"comparison.csv and summary.json in {out}")
    return 0


def _add_common(p: argparse.ArgumentParser, out_dir: bool = True) -> None:
    p.add_argument("--config", help="JSON config file overlaid on the profile defaults")
    p.add_argument("--profile", default="desk", choices=sorted(_PROFILES))
    p.add_argument("--seed", type=int, help="override the experiment seed")
    if out_dir:
        p.add_argument("--out-dir", required=True, help="directory for outputs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fddsim",
        description="fiber channel simulation and feature-decoupled surrogate training",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-data", help="write transmitted frames as DPWF files")
    _add_common(p)
    p.add_argument("--frames", type=int, help="number of frames (default: n_train_frames)")
    p.set_defaults(func=_cmd_generate_data)

    p = sub.add_parser("simulate", help="split-step propagate a DPWF file")
    _add_common(p, out_dir=False)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--distance", type=float, required=True, help="span length in km")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("decouple", help="strip analytic linear propagation from a DPWF file")
    _add_common(p, out_dir=False)
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--distance", type=float, help="length to strip (default: file header z)")
    p.set_defaults(func=_cmd_decouple)

    p = sub.add_parser("train", help="train one surrogate model")
    _add_common(p)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("evaluate", help="per-distance NMSE of a saved model bundle")
    _add_common(p)
    p.add_argument("--model", required=True, help="bundle prefix (without extension)")
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("residual", help="channel-equation residual of a model or the ground truth")
    _add_common(p)
    p.add_argument("--model", help="bundle prefix; omit to score the split-step solution")
    p.add_argument("--distances", help="comma-separated distances in km")
    p.set_defaults(func=_cmd_residual)

    p = sub.add_parser("compare", help="train and evaluate a baseline/fdd pair")
    _add_common(p)
    p.set_defaults(func=_cmd_compare)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
