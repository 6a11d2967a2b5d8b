# Copyright (c) 2022,2026 SASV Developers.
# Distributed under the terms of the BSD 2-Clause License.
# SPDX-License-Identifier: BSD-2-Clause
"""The training loop: sample, encode, five losses, backward, Adam step.

Every step records a LossBreakdown and checks that its total is exactly
the weighted sum of its components.  With a fixed seed the whole run,
and therefore its training log, is reproducible bit for bit.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from sasv import Autograd as ag
from sasv.Autograd import GrlConfig, NumericError
from sasv.Dataset import Dataset, build_trials, sample_batch
from sasv.Datatypes import ContractError
from sasv.Metrics import DEFAULT_FUSION_WEIGHT, MetricSuite, evaluate
from sasv.Model import (
    DEFAULT_AAM_MARGIN,
    DEFAULT_AAM_SCALE,
    DEFAULT_LAMBDAS,
    DEFAULT_MARGIN,
    LossBreakdown,
    LossSettings,
    MINING_STRATEGIES,
    ModelConfig,
    ModelParams,
    ablation_lambdas,
    batch_objective,
    collect_gradients,
)

# logger
_logger = logging.getLogger(__name__)

DTYPES = {"float64": np.float64, "float32": np.float32}
# share of all steps over which the GRL weight ramps from 0 to grl_lambda
GRL_RAMP_SHARE = 0.2


@dataclass
class TrainConfig(object):
    """Hyperparameters of a training run."""

    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 1e-3
    betas: Tuple[float, float] = (0.9, 0.999)
    epsilon: float = 1e-8
    lambdas: Tuple[float, float, float, float] = DEFAULT_LAMBDAS
    margin: float = DEFAULT_MARGIN
    grl_lambda: float = 1.0
    grl_ramp: bool = False
    seed: int = 0
    normalize: bool = True
    aam_s: float = DEFAULT_AAM_SCALE
    aam_m: float = DEFAULT_AAM_MARGIN
    mining: str = "hardest"
    ablation: str = "full"
    dtype: str = "float64"
    embed_dim: int = 64
    raw_hidden: int = 64
    fusion_weight: float = DEFAULT_FUSION_WEIGHT
    threads: int = 1

    def __post_init__(self):
        self.betas = tuple(float(b) for b in self.betas)
        self.lambdas = tuple(float(v) for v in self.lambdas)
        if self.epochs < 1:
            raise ContractError("epochs must be >= 1: '%s'" % self.epochs)
        if self.batch_size < 8:
            raise ContractError("batch_size must be >= 8: '%s'" % self.batch_size)
        if not self.learning_rate > 0:
            raise ContractError("learning_rate must be > 0: '%s'" % self.learning_rate)
        if len(self.betas) != 2 or not all(0.0 <= b < 1.0 for b in self.betas):
            raise ContractError("betas must be two values in [0, 1): '%s'" % (self.betas,))
        if not self.epsilon > 0:
            raise ContractError("epsilon must be > 0: '%s'" % self.epsilon)
        if len(self.lambdas) != 4 or any(v < 0 for v in self.lambdas):
            raise ContractError("lambdas must be four values >= 0: '%s'" % (self.lambdas,))
        if self.margin < 0:
            raise ContractError("margin must be >= 0: '%s'" % self.margin)
        if self.grl_lambda < 0:
            raise ContractError("grl_lambda must be >= 0: '%s'" % self.grl_lambda)
        if self.mining not in MINING_STRATEGIES:
            raise ContractError("unrecognized mining strategy: '" + self.mining + "'")
        if self.dtype not in DTYPES:
            raise ContractError("unrecognized dtype: '" + self.dtype + "'")
        if self.threads < 1:
            raise ContractError("threads must be >= 1: '%s'" % self.threads)
        if self.fusion_weight < 0:
            raise ContractError("fusion_weight must be >= 0: '%s'" % self.fusion_weight)
        self.effective_lambdas()

    def effective_lambdas(self) -> Tuple[float, float, float, float]:
        """The loss weights after the ablation preset is applied."""
        return ablation_lambdas(self.lambdas, self.ablation)

    def grl_at(self, step: int, total_steps: int) -> GrlConfig:
        if not self.grl_ramp:
            return GrlConfig(self.grl_lambda)
        ramp = GRL_RAMP_SHARE * total_steps
        return GrlConfig(self.grl_lambda * min(1.0, step / ramp))


@dataclass
class AdamState(object):
    """First and second moment estimates, keyed by parameter name."""

    step: int
    m: Dict[str, np.ndarray]
    v: Dict[str, np.ndarray]

    @classmethod
    def zeros(cls, params: ModelParams) -> "AdamState":
        names = params.trainable()
        return cls(
            0,
            {n: np.zeros_like(params[n]) for n in names},
            {n: np.zeros_like(params[n]) for n in names},
        )


def optimizer_step(
    params: ModelParams, grads: Dict[str, np.ndarray], state: AdamState, cfg: TrainConfig
) -> Tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update of every trainable tensor.

    The speaker class vectors are renormalized to unit length afterwards.
    Frozen tensors are copied through unchanged.
    """
    beta1, beta2 = cfg.betas
    t = state.step + 1
    tensors = dict(params.tensors)
    m, v = {}, {}
    for name in params.trainable():
        p = params[name]
        g = grads.get(name)
        if g is None or g.shape != p.shape or state.m[name].shape != p.shape:
            raise ContractError(
                "optimizer shape mismatch for '%s': param %s, grad %s"
                % (name, p.shape, None if g is None else g.shape)
            )
        g = g.astype(p.dtype, copy=False)
        m[name] = beta1 * state.m[name] + (1.0 - beta1) * g
        v[name] = beta2 * state.v[name] + (1.0 - beta2) * g * g
        m_hat = m[name] / (1.0 - beta1 ** t)
        v_hat = v[name] / (1.0 - beta2 ** t)
        tensors[name] = p - cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
    w = tensors["asv_head_class_weights"]
    norms = np.linalg.norm(w, axis=1, keepdims=True)
    tensors["asv_head_class_weights"] = np.where(norms > 0, w / np.where(norms > 0, norms, 1), w)
    return ModelParams(tensors, params.config), AdamState(t, m, v)


@dataclass
class TrainHistory(object):
    """Per-step loss breakdowns and per-epoch dev metrics."""

    steps_per_epoch: int
    epochs: int
    steps: List[LossBreakdown] = field(default_factory=list)
    dev: List[MetricSuite] = field(default_factory=list)

    def log_lines(self) -> List[str]:
        return [format_log_line(i, b) for i, b in enumerate(self.steps)]

    def epoch_means(self, component: str = "l_cm") -> List[float]:
        """Mean of one loss component over each epoch."""
        values = [getattr(b, component) for b in self.steps]
        n = self.steps_per_epoch
        return [float(np.mean(values[i:i + n])) for i in range(0, len(values), n)]


def format_log_line(step: int, breakdown: LossBreakdown) -> str:
    """"step l_cm l_asv l_tts l_vc l_st total", 6 significant digits."""
    return "%d %s" % (step, breakdown.string())


def model_config_for(dataset: Dataset, cfg: TrainConfig) -> ModelConfig:
    return ModelConfig(
        asv_dim=dataset.asv_dim,
        raw_dim=dataset.raw_dim,
        raw_hidden=cfg.raw_hidden,
        embed_dim=cfg.embed_dim,
        n_speakers=len(dataset.train_speakers),
        normalize=cfg.normalize,
    )


def _batch_arrays(dataset, batch, dtype):
    x_asv = np.stack([u.asv_features for u in batch.utterances]).astype(dtype)
    x_raw = np.stack([u.raw_features for u in batch.utterances]).astype(dtype)
    labels = np.array([dataset.speaker_index(u.speaker) for u in batch.utterances])
    sources = [u.source for u in batch.utterances]
    return x_asv, x_raw, labels, sources


def train(
    dataset: Dataset, cfg: TrainConfig, params: Optional[ModelParams] = None
) -> Tuple[ModelParams, TrainHistory]:
    """Train the shared encoder and all heads; returns params and history."""
    dtype = DTYPES[cfg.dtype]
    if params is None:
        params = ModelParams.initialize(model_config_for(dataset, cfg), cfg.seed)
    params = params.astype(dtype)
    state = AdamState.zeros(params)
    lambdas = cfg.effective_lambdas()
    train_size = len(dataset.split("train"))
    steps_per_epoch = math.ceil(train_size / cfg.batch_size)
    total_steps = cfg.epochs * steps_per_epoch
    history = TrainHistory(steps_per_epoch, cfg.epochs)
    dev_trials = build_trials(dataset, "dev", cfg.seed) if "dev" in dataset.splits else None
    rng = np.random.default_rng(cfg.seed)
    _logger.info(
        "training %d epochs x %d steps, lambdas %s, ablation %s",
        cfg.epochs, steps_per_epoch, lambdas, cfg.ablation,
    )
    for epoch in range(cfg.epochs):
        for _ in range(steps_per_epoch):
            step = len(history.steps)
            batch_seed = int(rng.integers(2 ** 31))
            batch = sample_batch(dataset, cfg.batch_size, batch_seed)
            x_asv, x_raw, labels, sources = _batch_arrays(dataset, batch, dtype)
            settings = LossSettings(
                lambdas=lambdas,
                margin=cfg.margin,
                grl=cfg.grl_at(step, total_steps),
                aam_scale=cfg.aam_s,
                aam_margin=cfg.aam_m,
                mining=cfg.mining,
                normalize=cfg.normalize,
                seed=batch_seed,
            )
            bound = params.bind()
            try:
                objective = batch_objective(x_asv, x_raw, labels, sources, bound, settings)
                value, gradients = ag.forward_backward(objective.root)
            except NumericError as err:
                raise NumericError("step %d: %s" % (step, err), err.op, err.component) from err
            breakdown = objective.breakdown
            if breakdown.total != breakdown.recompute():
                raise ContractError("step %d: loss total differs from its components" % step)
            if dtype == np.float64 and value != breakdown.total:
                raise ContractError(
                    "step %d: graph total %r differs from breakdown %r" % (step, value, breakdown.total)
                )
            params, state = optimizer_step(
                params, collect_gradients(bound, gradients), state, cfg
            )
            history.steps.append(breakdown)
            _logger.debug("step %d: %s", step, breakdown)
        if dev_trials is not None:
            suite, _ = evaluate(
                dataset.split("dev"), params, dev_trials, cfg.fusion_weight, "sasv", cfg.threads
            )
            history.dev.append(suite)
        _logger.info(
            "epoch %d: mean l_cm %.6g, mean total %.6g",
            epoch,
            history.epoch_means("l_cm")[-1],
            history.epoch_means("total")[-1],
        )
    return params.astype(np.float64), history
