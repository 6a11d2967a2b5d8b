# Copyright (c) 2022,2026 SASV Developers.
# Distributed under the terms of the BSD 2-Clause License.
# SPDX-License-Identifier: BSD-2-Clause
"""This module defines the spoof-aggregated SASV network and its losses.

The shared embedding of an utterance is

    E_u = F_c(concat(F_asv(asv_features), F_raw(raw_features)))

where F_asv is a frozen random projection standing in for a pre-trained
speaker encoder, F_raw is a trainable two-layer dense net and F_c is a
linear layer over the concatenation.  The embedding feeds

  * a countermeasure head (binary cross-entropy on bonafide/spoof),
  * a bonafide-masked AAM-softmax speaker head,
  * a TTS and a VC spoof-source head behind gradient reversal layers,
  * the spoof-source triplet loss,

and the total objective is
    l_cm + lambda1 * l_asv + lambda2 * l_tts + lambda3 * l_vc + lambda4 * l_st.
"""
import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from sasv import Autograd as ag
from sasv.Autograd import GrlConfig, Tensor
from sasv.Datatypes import (
    ContractError,
    Embedding,
    Family,
    Source,
    TTS_HEAD_CLASSES,
    VC_HEAD_CLASSES,
)

# logger
_logger = logging.getLogger(__name__)

DEFAULT_LAMBDAS = (1.0, 0.1, 0.1, 0.2)
DEFAULT_MARGIN = 0.5
DEFAULT_AAM_SCALE = 30.0
DEFAULT_AAM_MARGIN = 0.2

MINING_STRATEGIES = ["hardest", "random"]

# ablation rows: which of (lambda1, lambda2, lambda3, lambda4) are forced to zero
ABLATIONS = {
    "full": (False, False, False, False),
    "no-triplet": (False, False, False, True),
    "no-aggregator": (False, True, True, False),
    "naive-multitask": (False, True, True, True),
}

# tensor names, in checkpoint order
PARAM_NAMES = [
    "f_asv_weights",
    "f_raw_w1",
    "f_raw_b1",
    "f_raw_w2",
    "f_raw_b2",
    "f_c_weights",
    "f_c_bias",
    "cm_head_weights",
    "cm_head_bias",
    "asv_head_class_weights",
    "tts_head_weights",
    "tts_head_bias",
    "vc_head_weights",
    "vc_head_bias",
]
FROZEN_PARAMS = {"f_asv_weights"}
ENCODER_PARAMS = ["f_raw_w1", "f_raw_b1", "f_raw_w2", "f_raw_b2", "f_c_weights", "f_c_bias"]
HEAD_PARAMS = [
    "cm_head_weights",
    "cm_head_bias",
    "asv_head_class_weights",
    "tts_head_weights",
    "tts_head_bias",
    "vc_head_weights",
    "vc_head_bias",
]


def ablation_lambdas(lambdas: Sequence[float], ablation: str = "full") -> Tuple[float, ...]:
    """Apply an ablation preset to the configured loss weights."""
    if ablation not in ABLATIONS:
        raise ContractError("unrecognized ablation: '" + ablation + "'")
    return tuple(0.0 if off else float(lam) for lam, off in zip(lambdas, ABLATIONS[ablation]))


@dataclass
class ModelConfig(object):
    """Widths of the encoder stand-ins and heads."""

    asv_dim: int = 32
    raw_dim: int = 32
    asv_out: int = 32
    raw_hidden: int = 64
    raw_out: int = 32
    embed_dim: int = 64
    n_speakers: int = 8
    normalize: bool = True

    def __post_init__(self):
        for name in ("asv_dim", "raw_dim", "asv_out", "raw_hidden", "raw_out", "embed_dim"):
            if getattr(self, name) < 1:
                raise ContractError("%s must be >= 1: '%s'" % (name, getattr(self, name)))
        if self.n_speakers < 2:
            raise ContractError("n_speakers must be >= 2: '%s'" % self.n_speakers)

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        d = self.embed_dim
        return {
            "f_asv_weights": (self.asv_dim, self.asv_out),
            "f_raw_w1": (self.raw_dim, self.raw_hidden),
            "f_raw_b1": (self.raw_hidden,),
            "f_raw_w2": (self.raw_hidden, self.raw_out),
            "f_raw_b2": (self.raw_out,),
            "f_c_weights": (self.asv_out + self.raw_out, d),
            "f_c_bias": (d,),
            "cm_head_weights": (d, 2),
            "cm_head_bias": (2,),
            "asv_head_class_weights": (self.n_speakers, d),
            "tts_head_weights": (d, len(TTS_HEAD_CLASSES)),
            "tts_head_bias": (len(TTS_HEAD_CLASSES),),
            "vc_head_weights": (d, len(VC_HEAD_CLASSES)),
            "vc_head_bias": (len(VC_HEAD_CLASSES),),
        }


def _unit_rows(matrix):
    return matrix / np.linalg.norm(matrix, axis=1, keepdims=True)


class ModelParams(object):
    """All weight tensors of the network, keyed by name in PARAM_NAMES order."""

    def __init__(self, tensors: Dict[str, np.ndarray], config: ModelConfig):
        shapes = config.shapes()
        missing = [name for name in PARAM_NAMES if name not in tensors]
        if missing:
            raise ContractError("missing model tensors: " + ", ".join(missing))
        for name in PARAM_NAMES:
            if tuple(tensors[name].shape) != shapes[name]:
                raise ContractError(
                    "tensor '%s' has shape %s, expected %s"
                    % (name, tuple(tensors[name].shape), shapes[name])
                )
        self.tensors = {name: np.asarray(tensors[name]) for name in PARAM_NAMES}
        self.config = config

    @classmethod
    def initialize(cls, config: ModelConfig, seed: int = 0) -> "ModelParams":
        """Seeded random initialization; ASV class vectors start at unit length."""
        rng = np.random.default_rng(seed)
        shapes = config.shapes()
        tensors = {}
        for name in PARAM_NAMES:
            shape = shapes[name]
            if len(shape) == 1:
                tensors[name] = np.zeros(shape)
            elif name == "f_raw_w1":
                tensors[name] = rng.normal(0.0, math.sqrt(2.0 / shape[0]), shape)
            else:
                tensors[name] = rng.normal(0.0, math.sqrt(1.0 / shape[0]), shape)
        tensors["asv_head_class_weights"] = _unit_rows(tensors["asv_head_class_weights"])
        return cls(tensors, config)

    @classmethod
    def identity(cls, asv_dim: int, raw_dim: int, n_speakers: int = 2) -> "ModelParams":
        """Identity stand-ins: F_asv = id, F_raw = relu(id), F_c = concat."""
        config = ModelConfig(
            asv_dim=asv_dim,
            raw_dim=raw_dim,
            asv_out=asv_dim,
            raw_hidden=raw_dim,
            raw_out=raw_dim,
            embed_dim=asv_dim + raw_dim,
            n_speakers=n_speakers,
            normalize=False,
        )
        params = cls.initialize(config, seed=0)
        tensors = dict(params.tensors)
        tensors["f_asv_weights"] = np.eye(asv_dim)
        tensors["f_raw_w1"] = np.eye(raw_dim)
        tensors["f_raw_w2"] = np.eye(raw_dim)
        tensors["f_c_weights"] = np.eye(asv_dim + raw_dim)
        return cls(tensors, config)

    def __getitem__(self, name):
        return self.tensors[name]

    def __repr__(self):
        return "ModelParams(%s)" % ", ".join(
            "%s=%s" % (name, self.tensors[name].shape) for name in PARAM_NAMES
        )

    def copy(self) -> "ModelParams":
        return ModelParams({k: v.copy() for k, v in self.tensors.items()}, self.config)

    def astype(self, dtype) -> "ModelParams":
        return ModelParams({k: v.astype(dtype) for k, v in self.tensors.items()}, self.config)

    def trainable(self) -> List[str]:
        return [name for name in PARAM_NAMES if name not in FROZEN_PARAMS]

    def bind(self, requires_grad: bool = True) -> Dict[str, Tensor]:
        """Wrap every tensor as a graph leaf; frozen tensors never require grad."""
        return {
            name: Tensor(
                self.tensors[name],
                requires_grad=requires_grad and name not in FROZEN_PARAMS,
                name=name,
            )
            for name in PARAM_NAMES
        }


def collect_gradients(bound: Dict[str, Tensor], gradients: Dict[Tensor, np.ndarray]):
    """Map leaf gradients back to parameter names; frozen tensors get zeros."""
    return {
        name: gradients.get(leaf, np.zeros_like(leaf.data)) for name, leaf in bound.items()
    }


# encoder


def asv_branch(x_asv, bound) -> Tensor:
    """F_asv: the frozen projection."""
    return ag.matmul(x_asv, bound["f_asv_weights"])


def raw_branch(x_raw, bound) -> Tensor:
    """F_raw: two dense layers with a relu in between."""
    hidden = ag.relu(ag.matmul(x_raw, bound["f_raw_w1"]) + bound["f_raw_b1"])
    return ag.matmul(hidden, bound["f_raw_w2"]) + bound["f_raw_b2"]


def encode_batch(x_asv, x_raw, bound: Dict[str, Tensor], normalize: bool = True) -> Tensor:
    """Embeddings (B, D) for a batch of feature rows."""
    x_asv = ag._lift(x_asv, bound["f_raw_w1"])
    x_raw = ag._lift(x_raw, bound["f_raw_w1"])
    asv_dim = bound["f_asv_weights"].shape[0]
    raw_dim = bound["f_raw_w1"].shape[0]
    if x_asv.data.ndim != 2 or x_asv.shape[1] != asv_dim:
        raise ContractError(
            "asv feature dimension mismatch: got %s, model expects %d" % (x_asv.shape, asv_dim)
        )
    if x_raw.data.ndim != 2 or x_raw.shape[1] != raw_dim:
        raise ContractError(
            "raw feature dimension mismatch: got %s, model expects %d" % (x_raw.shape, raw_dim)
        )
    fused = ag.concat([asv_branch(x_asv, bound), raw_branch(x_raw, bound)], axis=1)
    emb = ag.matmul(fused, bound["f_c_weights"]) + bound["f_c_bias"]
    if normalize:
        emb = emb / ag.l2_norm(emb, axis=1)
    return emb


def encode(u, p: ModelParams) -> Embedding:
    """Embed a single utterance."""
    bound = p.bind(requires_grad=False)
    emb = encode_batch(
        np.atleast_2d(u.asv_features), np.atleast_2d(u.raw_features), bound, p.config.normalize
    )
    return Embedding(emb.data[0])


def embed_utterances(utterances: Sequence, p: ModelParams):
    """One gradient-free forward pass over many utterances.

    Returns (embeddings, p_bonafide, asv_branch_outputs) as numpy arrays.
    """
    if not utterances:
        raise ContractError("no utterances to embed")
    bound = p.bind(requires_grad=False)
    x_asv = np.stack([u.asv_features for u in utterances])
    x_raw = np.stack([u.raw_features for u in utterances])
    emb = encode_batch(x_asv, x_raw, bound, p.config.normalize)
    probs = ag.softmax(ag.matmul(emb, bound["cm_head_weights"]) + bound["cm_head_bias"])
    branch = asv_branch(ag.constant(x_asv), bound)
    return emb.data, probs.data[:, 1].copy(), branch.data


# countermeasure head


def binary_cross_entropy(logits, is_bonafide) -> Tensor:
    """Mean of -[y ln p + (1 - y) ln(1 - p)], with y = 1 for bonafide.

    logits has one (spoof, bonafide) row per utterance and p is its
    softmax bonafide column; the log-probabilities come from a log-softmax
    so a saturated head gives a finite loss.
    """
    logits = ag._lift(logits)
    y = np.asarray(is_bonafide, dtype=bool)
    if y.size == 0 or logits.data.size == 0:
        raise ContractError("cm loss needs a nonempty batch")
    if logits.data.ndim != 2 or logits.shape != (y.size, 2):
        raise ContractError("cm loss expects (N, 2) logits and N labels")
    picked = ag.constant(np.stack([~y, y], axis=1), logits)
    return ag.mean(-ag.total(ag.log_softmax(logits, axis=1) * picked, axis=1))


def cm_loss(embeddings: Tensor, is_bonafide, bound: Dict[str, Tensor]):
    """BCE of the countermeasure head; returns (l_cm, p_bonafide array)."""
    is_bonafide = np.asarray(is_bonafide, dtype=bool)
    if embeddings.shape[0] == 0 or is_bonafide.size == 0:
        raise ContractError("cm loss needs a nonempty batch")
    if is_bonafide.shape != (embeddings.shape[0],):
        raise ContractError("cm loss: one label per embedding is required")
    logits = ag.matmul(embeddings, bound["cm_head_weights"]) + bound["cm_head_bias"]
    p = ag.softmax(logits).data[:, 1].copy()
    return binary_cross_entropy(logits, is_bonafide), p


# speaker head


def aam_softmax_loss(embeddings: Tensor, class_weights: Tensor, labels, s: float, m_aam: float):
    """AAM-softmax cross-entropy on cosine logits with an angular margin."""
    if s <= 0:
        raise ContractError("AAM scale must be > 0: '" + str(s) + "'")
    if m_aam < 0:
        raise ContractError("AAM margin must be >= 0: '" + str(m_aam) + "'")
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = class_weights.shape[0]
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ContractError("speaker label outside the %d training speakers" % n_classes)
    en = embeddings / ag.l2_norm(embeddings, axis=1)
    wn = class_weights / ag.l2_norm(class_weights, axis=1)
    cosine = ag.matmul(en, ag.transpose(wn))
    if m_aam == 0:
        return ag.cross_entropy(cosine * s, labels)
    onehot = ag.constant(np.eye(n_classes, dtype=cosine.dtype)[labels])
    phi = ag.cos(ag.arccos(cosine) + m_aam)
    # past theta = pi - m the margin would wrap around; use the linear fallback
    th = math.cos(math.pi - m_aam)
    mm = math.sin(math.pi - m_aam) * m_aam
    phi = ag.where(cosine.data - th > 0, phi, cosine - mm)
    logits = (phi * onehot + cosine * (1.0 - onehot)) * s
    return ag.cross_entropy(logits, labels)


@dataclass
class MaskedLoss(object):
    value: Tensor
    empty_mask: bool


def asv_loss_masked(
    embeddings: Tensor,
    speaker_labels,
    is_bonafide,
    bound: Dict[str, Tensor],
    s: float = DEFAULT_AAM_SCALE,
    m_aam: float = DEFAULT_AAM_MARGIN,
) -> MaskedLoss:
    """AAM-softmax speaker loss over the bonafide rows only.

    Spoofed rows never enter the graph, so they get neither loss nor
    gradient.  A batch without bonafide rows yields 0 with empty_mask set.
    """
    mask = np.flatnonzero(np.asarray(is_bonafide, dtype=bool))
    if mask.size == 0:
        _logger.warning("asv loss: no bonafide samples in batch")
        return MaskedLoss(ag.constant(0.0, embeddings), True)
    labels = np.asarray(speaker_labels)[mask]
    loss = aam_softmax_loss(
        embeddings[mask], bound["asv_head_class_weights"], labels, s, m_aam
    )
    return MaskedLoss(loss, False)


# spoof aggregator


def _head_loss(embeddings, sources, classes, weights, bias, grl):
    index = [i for i, src in enumerate(sources) if src in classes]
    if not index:
        return ag.constant(0.0, embeddings)
    labels = [classes.index(sources[i]) for i in index]
    feats = embeddings[np.asarray(index)]
    if grl is not None:
        feats = ag.grl_apply(feats, grl)
    return ag.cross_entropy(ag.matmul(feats, weights) + bias, labels)


def spoof_aggregator_loss(
    embeddings: Tensor, sources: Sequence[Source], bound: Dict[str, Tensor], grl: Optional[GrlConfig]
) -> Tuple[Tensor, Tensor]:
    """Cross-entropy of the TTS head (A01-A04) and the VC head (A05-A06).

    Each head sits behind its own gradient reversal layer; pass grl=None to
    disable the reversal.  A family with no samples in the batch gives 0.
    """
    sources = list(sources)
    l_tts = _head_loss(
        embeddings, sources, TTS_HEAD_CLASSES, bound["tts_head_weights"], bound["tts_head_bias"], grl
    )
    l_vc = _head_loss(
        embeddings, sources, VC_HEAD_CLASSES, bound["vc_head_weights"], bound["vc_head_bias"], grl
    )
    return l_tts, l_vc


# triplet losses


def triplet_loss(a, p_, n, m: float = DEFAULT_MARGIN) -> Tensor:
    """Hinge triplet loss max(0, |a - p| - |a - n| + m).

    Vectors give a scalar; (T, D) rows give one loss per row, shape (T, 1).
    """
    a, p_, n = ag._lift(a), ag._lift(p_), ag._lift(n)
    if not a.shape == p_.shape == n.shape:
        raise ContractError(
            "triplet dimension mismatch: %s, %s, %s" % (a.shape, p_.shape, n.shape)
        )
    if m < 0:
        raise ContractError("triplet margin must be >= 0: '" + str(m) + "'")
    axis = -1 if a.data.ndim > 1 else None
    keep = a.data.ndim > 1
    d_ap = ag.l2_norm(a - p_, axis=axis, keepdims=keep)
    d_an = ag.l2_norm(a - n, axis=axis, keepdims=keep)
    return ag.relu(d_ap - d_an + m)


@dataclass
class TripletPlan(object):
    """Index triples chosen by negative mining for one batch."""

    anchors: np.ndarray
    positives: np.ndarray
    negatives: np.ndarray
    categories: List[str] = field(default_factory=list)
    n_anchors: int = 0

    def terms_per_anchor(self) -> Dict[int, int]:
        counts = {}
        for a in self.anchors.tolist():
            counts[a] = counts.get(a, 0) + 1
        return counts


def _pick(distances, candidates, nearest, rng):
    values = distances[candidates]
    best = candidates[int(np.argmin(values) if nearest else np.argmax(values))]
    if nearest and distances[best] == 0.0:
        # degenerate hardest negative: fall back to a random non-coincident one
        others = candidates[values > 0.0]
        if others.size:
            best = others[int(rng.integers(others.size))]
    return int(best)


def mine_triplets(
    embeddings: np.ndarray,
    speaker_labels,
    sources: Sequence[Source],
    mining: str = "hardest",
    seed: int = 0,
) -> TripletPlan:
    """Choose (anchor, positive, negative) indices for the spoof-source loss.

    Every bonafide sample whose speaker has another bonafide sample in the
    batch is an anchor.  Its terms use a TTS negative, a VC negative and one
    bonafide negative from every other speaker present.
    """
    if mining not in MINING_STRATEGIES:
        raise ContractError("unrecognized mining strategy: '" + mining + "'")
    rng = np.random.default_rng(seed)
    emb = np.asarray(embeddings, dtype=np.float64)
    speakers = np.asarray(speaker_labels)
    sources = list(sources)
    bonafide = np.array([s.is_bonafide for s in sources], dtype=bool)
    tts = np.flatnonzero([s.family is Family.TTS for s in sources])
    vc = np.flatnonzero([s.family is Family.VC for s in sources])
    if tts.size == 0:
        raise ContractError("spoof-source triplet loss: batch has no TTS negative")
    if vc.size == 0:
        raise ContractError("spoof-source triplet loss: batch has no VC negative")
    by_speaker = {}
    for i in np.flatnonzero(bonafide):
        by_speaker.setdefault(speakers[i].item(), []).append(i)
    by_speaker = {k: np.asarray(v) for k, v in sorted(by_speaker.items())}
    anchors, positives, negatives, categories = [], [], [], []
    n_anchors = 0
    for spk, members in by_speaker.items():
        if members.size < 2:
            continue
        for a in members:
            dist = np.sqrt(((emb - emb[a]) ** 2).sum(axis=1))
            same = members[members != a]
            if mining == "hardest":
                pos = _pick(dist, same, False, rng)
                negs = [("tts", _pick(dist, tts, True, rng)), ("vc", _pick(dist, vc, True, rng))]
                for other, others in by_speaker.items():
                    if other != spk:
                        negs.append(("spk:%s" % other, _pick(dist, others, True, rng)))
            else:
                pos = int(same[rng.integers(same.size)])
                negs = [
                    ("tts", int(tts[rng.integers(tts.size)])),
                    ("vc", int(vc[rng.integers(vc.size)])),
                ]
                for other, others in by_speaker.items():
                    if other != spk:
                        negs.append(("spk:%s" % other, int(others[rng.integers(others.size)])))
            n_anchors += 1
            for category, neg in negs:
                anchors.append(int(a))
                positives.append(pos)
                negatives.append(neg)
                categories.append(category)
    if n_anchors == 0:
        raise ContractError(
            "spoof-source triplet loss: no speaker has two bonafide utterances in the batch"
        )
    _logger.debug("mined %d triplets over %d anchors", len(anchors), n_anchors)
    return TripletPlan(
        np.asarray(anchors), np.asarray(positives), np.asarray(negatives), categories, n_anchors
    )


def spoof_source_triplet_loss(
    embeddings: Tensor,
    speaker_labels,
    sources: Sequence[Source],
    m: float = DEFAULT_MARGIN,
    mining: str = "hardest",
    seed: int = 0,
) -> Tensor:
    """Sum of triplet terms per anchor (TTS, VC, every other speaker), averaged over anchors."""
    plan = mine_triplets(embeddings.data, speaker_labels, sources, mining, seed)
    terms = triplet_loss(
        embeddings[plan.anchors], embeddings[plan.positives], embeddings[plan.negatives], m
    )
    return ag.total(terms) / float(plan.n_anchors)


# total objective


@dataclass(frozen=True)
class LossBreakdown(object):
    """The five loss components, their weights and the weighted total."""

    l_cm: float
    l_asv: float
    l_tts: float
    l_vc: float
    l_st: float
    total: float
    lambdas: Tuple[float, float, float, float] = DEFAULT_LAMBDAS

    def components(self) -> Tuple[float, float, float, float, float]:
        return (self.l_cm, self.l_asv, self.l_tts, self.l_vc, self.l_st)

    def recompute(self) -> float:
        l1, l2, l3, l4 = self.lambdas
        return self.l_cm + l1 * self.l_asv + l2 * self.l_tts + l3 * self.l_vc + l4 * self.l_st

    def __str__(self):
        return self.string()

    def string(self) -> str:
        """Space-separated components and total, 6 significant digits."""
        return " ".join("%.6g" % v for v in self.components() + (self.total,))


def _check_lambdas(lambdas):
    lambdas = tuple(float(v) for v in lambdas)
    if len(lambdas) != 4:
        raise ContractError("expected four loss weights, got %d" % len(lambdas))
    return lambdas


def total_loss(l_cm, l_asv, l_tts, l_vc, l_st, lambdas=DEFAULT_LAMBDAS) -> LossBreakdown:
    """Weighted total of the five components, in the fixed summation order."""
    l1, l2, l3, l4 = _check_lambdas(lambdas)
    parts = [float(v) for v in (l_cm, l_asv, l_tts, l_vc, l_st)]
    total = parts[0] + l1 * parts[1] + l2 * parts[2] + l3 * parts[3] + l4 * parts[4]
    return LossBreakdown(*parts, total=total, lambdas=(l1, l2, l3, l4))


def weighted_total(l_cm, l_asv, l_tts, l_vc, l_st, lambdas=DEFAULT_LAMBDAS) -> Tensor:
    """Graph counterpart of total_loss(), with the same arithmetic order."""
    l1, l2, l3, l4 = _check_lambdas(lambdas)
    return l_cm + l_asv * l1 + l_tts * l2 + l_vc * l3 + l_st * l4


@dataclass
class LossSettings(object):
    """Hyperparameters of the batch objective."""

    lambdas: Tuple[float, float, float, float] = DEFAULT_LAMBDAS
    margin: float = DEFAULT_MARGIN
    grl: Optional[GrlConfig] = field(default_factory=GrlConfig)
    aam_scale: float = DEFAULT_AAM_SCALE
    aam_margin: float = DEFAULT_AAM_MARGIN
    mining: str = "hardest"
    normalize: bool = True
    seed: int = 0


@dataclass
class Objective(object):
    root: Tensor
    parts: Dict[str, Tensor]
    breakdown: LossBreakdown
    empty_mask: bool
    p_bonafide: np.ndarray


def batch_objective(
    x_asv, x_raw, speaker_labels, sources: Sequence[Source], bound, settings: LossSettings
) -> Objective:
    """Build the full graph for one batch: encoder, five losses, weighted total.

    A NaN or Inf while building a loss term is re-raised as a NumericError
    whose message and component attribute name that term.
    """
    sources = list(sources)
    is_bonafide = np.array([s.is_bonafide for s in sources], dtype=bool)
    lambdas = _check_lambdas(settings.lambdas)
    with _component("encoder"):
        emb = encode_batch(x_asv, x_raw, bound, settings.normalize)
    parts = {}
    with _component("l_cm"):
        parts["l_cm"], p_bonafide = cm_loss(emb, is_bonafide, bound)
    with _component("l_asv"):
        masked = asv_loss_masked(
            emb, speaker_labels, is_bonafide, bound, settings.aam_scale, settings.aam_margin
        )
    parts["l_asv"] = masked.value
    with _component("l_tts/l_vc"):
        parts["l_tts"], parts["l_vc"] = spoof_aggregator_loss(emb, sources, bound, settings.grl)
    with _component("l_st"):
        parts["l_st"] = spoof_source_triplet_loss(
            emb, speaker_labels, sources, settings.margin, settings.mining, settings.seed
        )
    with _component("total"):
        root = weighted_total(
            parts["l_cm"], parts["l_asv"], parts["l_tts"], parts["l_vc"], parts["l_st"], lambdas
        )
    breakdown = total_loss(*(parts[k].item() for k in ("l_cm", "l_asv", "l_tts", "l_vc", "l_st")), lambdas=lambdas)
    return Objective(root, parts, breakdown, masked.empty_mask, p_bonafide)


@contextmanager
def _component(name: str):
    try:
        yield
    except ag.NumericError as err:
        raise ag.NumericError("%s: %s" % (name, err), err.op, name) from err
