"""Dual-polarization fiber channel simulation and feature-decoupled surrogates.

Layers, bottom up: deterministic RNG streams (rng), grids/waveforms/spectra
(signal, waveio), the WDM transmitter (transmitter), split-step ground truth
(ssfm), the analytic linear subsystem and its inverse (linear), the recurrent
surrogate with hand-written BPTT (net), baseline/fdd model composition
(model), channel-equation residual scoring (residual), and the experiment
harness plus CLI (harness, cli).
"""

from .errors import ConfigError, NumericalError
from .harness import (
    CompareResult,
    DistanceRow,
    EpochRow,
    ExperimentConfig,
    MetricsLog,
    WindowDataset,
    build_dataset,
    compare,
    desk_config,
    evaluate,
    paper_config,
    train,
)
from .linear import (
    LinearOperator,
    apply_forward,
    apply_inverse,
    dz_derivative_factor,
    transfer_function,
)
from .model import (
    ChannelModel,
    ModelKind,
    load_bundle,
    predict,
    predict_dz,
    save_bundle,
    training_target,
)
from .net import (
    AdamState,
    NetConfig,
    SurrogateNet,
    adam_step,
    d_output_dz,
    features_to_waveform,
    load_checkpoint,
    save_checkpoint,
    waveform_to_features,
)
from .residual import ResidualReport, nlse_residual, residual_of_ssfm, spectral_d2t
from .rng import SplitMix64, child_seed, mix64
from .signal import (
    DualPolWaveform,
    SpectrumView,
    WaveformGrid,
    dbm_to_watts,
    fft_forward,
    fft_inverse,
    nmse,
    power_dbm_to_amplitude_scale,
    relative_l2,
)
from .ssfm import FiberParams, SsfmConfig, linear_half_step, nonlinear_step, propagate
from .transmitter import (
    SymbolFrame,
    TxConfig,
    generate_symbols,
    matched_filter,
    rrc_frequency_response,
    rrc_pulse_shape,
    transmit,
    wdm_multiplex,
)
from .waveio import read_dpwf, write_dpwf

__version__ = "0.1.0"
