"""D2P2-SGD and the variants obtained by switching its parts off.

One step: sample a minibatch, clip each per-sample gradient, average, draw a
fresh Gaussian projection ``A_k`` and noise ``eps_k``, then update with
``x <- x - alpha * A_k (A_k^T g / sqrt(p) + eps_k)``.

    variant  projection  noise     clipping
    d2p2     gaussian    dynamic   on
    d2p      identity    dynamic   on
    dp2      gaussian    static    on
    dpsgd    identity    static    on
    sgd      identity    none      off

All randomness is drawn from streams keyed by ``(seed, purpose, step)``, so
variants that coincide on a step draw identical numbers.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels, streams
from .accountant import MechanismParams, PrivacyLedger, accumulate_step, epsilon_at_delta
from .errors import ConfigurationError, NoValidOrderError, NumericError
from .model import Dataset, Objective
from .noise import NoiseSchedule, sample_noise, variance_at
from .project import ProjectionOperator, sample_operator, target_dim

VARIANTS = {
    "d2p2": ("gaussian", "dynamic", "auto"),
    "d2p": ("identity", "dynamic", "auto"),
    "dp2": ("gaussian", "static", "auto"),
    "dpsgd": ("identity", "static", "auto"),
    "sgd": ("identity", "none", "off"),
}


@dataclass(frozen=True)
class OptimizerConfig:
    variant: str = "d2p2"
    alpha: float = 0.01
    K_epochs: int = 40
    B: int = 256
    gamma: float = 0.01
    G: float = 1.0
    sigma_eps: float = 3.0
    reduction_rate: float = 0.7
    sigma_A: float = 1.0
    seed: int = 0
    delta: float = 1e-5
    # overrides; None keeps the variant's own setting
    projection: str | None = None
    schedule: str | None = None
    clip_mode: str | None = None
    sampling: str = "uniform"
    eval_size: int = 1000
    record_timing: bool = False

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigurationError(f"unknown optimizer variant {self.variant!r}")
        if not self.alpha > 0:
            raise ConfigurationError("step size must be > 0")
        if self.K_epochs < 1 or self.B < 1:
            raise ConfigurationError("epochs and batch size must be >= 1")
        if self.sampling not in ("uniform", "split"):
            raise ConfigurationError(f"unknown sampling mode {self.sampling!r}")
        variant_dispatch(self)


class Pipeline(NamedTuple):
    projection: str
    schedule: str
    clip: str

    @property
    def private(self) -> bool:
        return self.schedule != "none"


def variant_dispatch(cfg: OptimizerConfig) -> Pipeline:
    """Resolve the (projection, schedule, clip) triple, applying overrides.

    Overrides may only switch a part off: gaussian -> identity and
    dynamic -> static. Anything else is rejected.
    """
    proj, sched, clip = VARIANTS[cfg.variant]
    if cfg.projection is not None:
        if cfg.projection not in ("gaussian", "identity"):
            raise ConfigurationError(f"unknown projection mode {cfg.projection!r}")
        if cfg.projection == "gaussian" and proj == "identity":
            raise ConfigurationError(f"variant {cfg.variant} has no random projection")
        proj = cfg.projection
    if cfg.schedule is not None:
        if cfg.schedule not in ("static", "dynamic"):
            raise ConfigurationError(f"unknown schedule mode {cfg.schedule!r}")
        if sched == "none":
            raise ConfigurationError("variant sgd injects no noise")
        if cfg.schedule == "dynamic" and sched == "static":
            raise ConfigurationError(f"variant {cfg.variant} uses a static schedule")
        sched = cfg.schedule
    if cfg.clip_mode is not None:
        if cfg.clip_mode not in ("auto", "threshold", "off"):
            raise ConfigurationError(f"unknown clip mode {cfg.clip_mode!r}")
        if clip == "off" and cfg.clip_mode != "off":
            raise ConfigurationError("variant sgd does not clip")
        if clip != "off" and cfg.clip_mode == "off":
            raise ConfigurationError("private variants need bounded per-sample gradients")
        clip = cfg.clip_mode
    return Pipeline(proj, sched, clip)


@dataclass
class TrainState:
    x: np.ndarray
    k: int = 0
    epoch: int = 0
    ledger: PrivacyLedger | None = None
    seed: int = 0
    last_grad_norm: float = 0.0
    last_update: np.ndarray | None = field(default=None, repr=False)


@dataclass(frozen=True)
class MetricsRow:
    seed: int
    epoch: int
    step: int
    train_loss: float
    test_accuracy: float
    epsilon: float
    sigma_eps_k: float
    wall_ms: float


METRIC_COLUMNS = ("seed", "epoch", "step", "train_loss", "test_accuracy",
                  "epsilon", "sigma_eps_k", "wall_ms")


def mechanism_params(cfg: OptimizerConfig, n: int) -> MechanismParams:
    return MechanismParams(n, cfg.B, cfg.sigma_eps, variant_dispatch(cfg).schedule, cfg.delta)


def init_state(cfg: OptimizerConfig, obj: Objective, data: Dataset) -> TrainState:
    if cfg.B > data.n:
        raise ConfigurationError(f"batch size {cfg.B} exceeds dataset size {data.n}")
    pipe = variant_dispatch(cfg)
    ledger = PrivacyLedger(mechanism_params(cfg, data.n)) if pipe.private else None
    x0 = obj.init_params(streams.keyed_stream(cfg.seed, streams.INIT))
    return TrainState(x=x0, ledger=ledger, seed=cfg.seed)


def _sample_batch(cfg: OptimizerConfig, n: int, k: int, seed: int) -> np.ndarray:
    rng = streams.keyed_stream(seed, streams.SAMPLING, k)
    if cfg.sampling == "uniform":
        return np.sort(rng.choice(n, size=cfg.B, replace=False))
    n_batches = n // cfg.B
    epoch = (k - 1) // n_batches
    perm = streams.keyed_stream(seed, streams.SPLIT, epoch).permutation(n)
    j = int(rng.integers(n_batches))
    return np.sort(perm[j * cfg.B:(j + 1) * cfg.B])


def step(state: TrainState, cfg: OptimizerConfig, obj: Objective, data: Dataset,
         pipeline: Pipeline | None = None) -> TrainState:
    """Advance ``state`` by one iteration in place and return it."""
    pipe = variant_dispatch(cfg) if pipeline is None else pipeline
    k = state.k + 1
    d = obj.d
    idx = _sample_batch(cfg, data.n, k, state.seed)

    grads = obj.gradients(state.x, data, idx)
    if pipe.clip == "off":
        g = grads.sum(axis=0) / grads.shape[0]
    else:
        g = kernels.clip_mean(grads, cfg.gamma, cfg.G, pipe.clip)

    if pipe.projection == "gaussian":
        op = sample_operator(d, target_dim(d, cfg.reduction_rate), cfg.sigma_A,
                             streams.keyed_stream(state.seed, streams.PROJECTION, k))
    else:
        op = ProjectionOperator.identity(d)

    low = op.down(g)
    if pipe.private:
        sched = NoiseSchedule(cfg.sigma_eps, pipe.schedule)
        low = low + sample_noise(sched, k, op.p, streams.keyed_stream(state.seed, streams.NOISE, k))
    update = op.up(low)

    with np.errstate(over="ignore", invalid="ignore"):
        x_new = state.x - cfg.alpha * update
    if not np.all(np.isfinite(x_new)):
        raise NumericError(
            f"non-finite parameters (|g|={np.linalg.norm(g):.3g}, "
            f"|update|={np.linalg.norm(update):.3g})",
            step=k,
        )
    if state.ledger is not None:
        accumulate_step(state.ledger, state.ledger.params, k)
    state.x = x_new
    state.k = k
    state.last_grad_norm = float(np.linalg.norm(g))
    state.last_update = update
    return state


def current_epsilon(state: TrainState, delta: float | None = None) -> float:
    if state.ledger is None:
        return math.inf
    try:
        return epsilon_at_delta(state.ledger, delta)
    except NoValidOrderError:
        return math.inf


def train(cfg: OptimizerConfig, obj: Objective, data_train: Dataset,
          data_test: Dataset | None = None, state: TrainState | None = None,
          return_state: bool = False):
    """Run ``K_epochs * floor(n / B)`` steps, recording one MetricsRow per epoch."""
    pipe = variant_dispatch(cfg)
    steps_per_epoch = data_train.n // cfg.B
    if steps_per_epoch < 1:
        raise ConfigurationError(f"batch size {cfg.B} exceeds dataset size {data_train.n}")
    if state is None:
        state = init_state(cfg, obj, data_train)
    sched = NoiseSchedule(cfg.sigma_eps, pipe.schedule) if pipe.private else None
    eval_idx = np.arange(min(data_train.n, cfg.eval_size))
    rows = []
    for _ in range(cfg.K_epochs):
        t0 = time.perf_counter()
        for _ in range(steps_per_epoch):
            step(state, cfg, obj, data_train, pipe)
        state.epoch += 1
        wall = (time.perf_counter() - t0) * 1e3 if cfg.record_timing else 0.0
        rows.append(MetricsRow(
            seed=cfg.seed,
            epoch=state.epoch,
            step=state.k,
            train_loss=obj.full_loss(state.x, data_train, eval_idx),
            test_accuracy=obj.accuracy(state.x, data_test) if data_test is not None else math.nan,
            epsilon=current_epsilon(state, cfg.delta),
            sigma_eps_k=math.sqrt(variance_at(sched, state.k)) if sched else 0.0,
            wall_ms=wall,
        ))
    return (rows, state) if return_state else rows
