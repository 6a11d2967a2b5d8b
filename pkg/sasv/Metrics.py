# Copyright (c) 2022,2026 SASV Developers.
# Distributed under the terms of the BSD 2-Clause License.
# SPDX-License-Identifier: BSD-2-Clause
"""Trial scoring, equal error rates and the score-sum fusion baseline.

Three EERs summarize a SASV system:

  * SASV-EER over every trial, with only target trials positive;
  * SV-EER over target and nontarget (zero-effort impostor) trials;
  * SPF-EER over target and spoof trials.

All three are computed from the same per-trial score.
"""
import json
import logging
import math
from dataclasses import asdict, dataclass
from functools import partial
from multiprocessing import Pool
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd

from sasv.Datatypes import ContractError, Embedding, error_rate
from sasv.Model import ModelParams, embed_utterances
from sasv.Protocol import TrialRecord
from sasv import Storage

# logger
_logger = logging.getLogger(__name__)

SCORERS = ["sasv", "asv-branch"]
DEFAULT_FUSION_WEIGHT = 1.0
# keeps the CM log-odds finite when the head saturates
LOG_ODDS_CLIP = 1e-12


@dataclass(frozen=True)
class ScoredTrial(object):
    trial: TrialRecord
    score: float

    def __post_init__(self):
        if not math.isfinite(self.score):
            raise ContractError(
                "non-finite score for trial with test '%s'" % self.trial.test_utt_id
            )

    @property
    def label(self) -> str:
        return self.trial.label


@dataclass(frozen=True)
class MetricSuite(object):
    """SASV-, SV- and SPF-EER (fractions) with their thresholds."""

    sasv_eer: float
    sv_eer: float
    spf_eer: float
    sasv_threshold: float = 0.0
    sv_threshold: float = 0.0
    spf_threshold: float = 0.0

    def __post_init__(self):
        for name in ("sasv_eer", "sv_eer", "spf_eer"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ContractError("%s must lie in [0, 1]: '%s'" % (name, value))

    def rates(self) -> Tuple[error_rate, error_rate, error_rate]:
        return (error_rate(self.sasv_eer), error_rate(self.sv_eer), error_rate(self.spf_eer))

    def string(self) -> str:
        sasv, sv, spf = self.rates()
        return "SASV-EER %s%%, SV-EER %s%%, SPF-EER %s%%" % (sasv, sv, spf)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MetricSuite":
        try:
            values = json.loads(text)
            return cls(**{k: float(values[k]) for k in cls.__dataclass_fields__})
        except (ValueError, KeyError, TypeError) as err:
            raise ContractError("malformed metrics file: %s" % err)


def _vector(e) -> np.ndarray:
    return e.vector if isinstance(e, Embedding) else np.asarray(e, dtype=np.float64).reshape(-1)


def cosine_score(e1, e2) -> float:
    a, b = _vector(e1), _vector(e2)
    if a.shape != b.shape:
        raise ContractError("embedding dimension mismatch: %d vs %d" % (a.size, b.size))
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ContractError("cosine score of a zero-norm embedding")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def sasv_score(enroll_embs: Sequence, test_emb, p_bonafide: float, w: float = DEFAULT_FUSION_WEIGHT) -> float:
    """cos(mean enrollment, test) + w * (2 p_bonafide - 1)."""
    if len(enroll_embs) == 0:
        raise ContractError("sasv score needs at least one enrollment embedding")
    if not 0.0 <= p_bonafide <= 1.0:
        raise ContractError("p_bonafide must lie in [0, 1]: '%s'" % p_bonafide)
    if w < 0:
        raise ContractError("fusion weight must be >= 0: '%s'" % w)
    centroid = np.mean([_vector(e) for e in enroll_embs], axis=0)
    return cosine_score(centroid, test_emb) + w * (2.0 * p_bonafide - 1.0)


def cm_log_odds(p_bonafide) -> np.ndarray:
    """ln(p / (1 - p)), the uncalibrated CM score."""
    p = np.clip(np.asarray(p_bonafide, dtype=np.float64), LOG_ODDS_CLIP, 1.0 - LOG_ODDS_CLIP)
    return np.log(p / (1.0 - p))


def compute_eer(scored: Sequence[ScoredTrial], positive_label: str = "target") -> Tuple[float, float]:
    """Equal error rate and its threshold.

    A trial is accepted when score >= threshold.  FRR and FAR are
    evaluated at every distinct score (and at +inf); the EER is linearly
    interpolated between the two adjacent vertices where FRR - FAR
    changes sign.
    """
    scores = np.array([s.score for s in scored], dtype=np.float64)
    positive = np.array([s.label == positive_label for s in scored], dtype=bool)
    pos = np.sort(scores[positive])
    neg = np.sort(scores[~positive])
    if pos.size == 0 or neg.size == 0:
        raise ContractError(
            "eer needs positive and negative trials, got %d and %d" % (pos.size, neg.size)
        )
    thresholds = np.append(np.unique(scores), np.inf)
    frr = np.searchsorted(pos, thresholds, side="left") / pos.size
    far = (neg.size - np.searchsorted(neg, thresholds, side="left")) / neg.size
    gap = frr - far
    i = int(np.argmax(gap >= 0.0))
    if gap[i] == 0.0:
        return float(frr[i]), float(thresholds[i])
    alpha = -gap[i - 1] / (gap[i] - gap[i - 1])
    eer = frr[i - 1] + alpha * (frr[i] - frr[i - 1])
    if np.isinf(thresholds[i]):
        threshold = thresholds[i - 1]
    else:
        threshold = thresholds[i - 1] + alpha * (thresholds[i] - thresholds[i - 1])
    return float(eer), float(threshold)


# trial subsets entering each metric
SUBSETS = {
    "sasv": ("target", "nontarget", "spoof"),
    "sv": ("target", "nontarget"),
    "spf": ("target", "spoof"),
}


def compute_metric_suite(scored: Sequence[ScoredTrial]) -> MetricSuite:
    """SASV-, SV- and SPF-EER of one list of scored trials."""
    present = {s.label for s in scored}
    values = {}
    for name, labels in SUBSETS.items():
        missing = [label for label in labels if label not in present]
        if missing:
            raise ContractError(
                "%s-eer subset is empty: no %s trials" % (name, " or ".join(missing))
            )
        subset = [s for s in scored if s.label in labels]
        values[name + "_eer"], values[name + "_threshold"] = compute_eer(subset, "target")
    suite = MetricSuite(**values)
    _logger.info("%d trials: %s", len(scored), suite.string())
    return suite


def score_sum_baseline(asv_scores, cm_scores) -> pd.Series:
    """Elementwise sum of aligned ASV and CM scores, without calibration."""
    asv = asv_scores if isinstance(asv_scores, pd.Series) else pd.Series(asv_scores, dtype=float)
    cm = cm_scores if isinstance(cm_scores, pd.Series) else pd.Series(cm_scores, dtype=float)
    if len(asv) != len(cm):
        raise ContractError("score lists differ in length: %d vs %d" % (len(asv), len(cm)))
    if not asv.index.equals(cm.index):
        raise ContractError("asv and cm score files are not aligned on trial index")
    fused = asv + cm
    fused.name = "score"
    return fused


# scoring a trial list with a trained model


@dataclass
class EmbeddingLookup(object):
    """Frozen per-utterance model outputs, keyed by utterance id."""

    rows: Dict[str, int]
    embeddings: np.ndarray
    p_bonafide: np.ndarray
    asv_branch: np.ndarray

    @classmethod
    def build(cls, utterances: Sequence, params: ModelParams) -> "EmbeddingLookup":
        emb, p, branch = embed_utterances(utterances, params.astype(np.float64))
        return cls({u.id: i for i, u in enumerate(utterances)}, emb, p, branch)

    def row(self, utt_id: str) -> int:
        try:
            return self.rows[utt_id]
        except KeyError:
            raise ContractError("trial references unknown utterance: '" + utt_id + "'")


def score_one(trial: TrialRecord, lookup: EmbeddingLookup, w: float, scorer: str) -> float:
    enroll = [lookup.row(i) for i in trial.enroll_utt_ids]
    test = lookup.row(trial.test_utt_id)
    if scorer == "asv-branch":
        centroid = lookup.asv_branch[enroll].mean(axis=0)
        return cosine_score(centroid, lookup.asv_branch[test])
    return sasv_score(
        list(lookup.embeddings[enroll]), lookup.embeddings[test], float(lookup.p_bonafide[test]), w
    )


def _score_chunk(chunk, lookup, w, scorer):
    return [score_one(t, lookup, w, scorer) for t in chunk]


def _split_trials(trials, n_chunks):
    """Split a trial list into n_chunks contiguous pieces of near-equal size."""
    n_chunks = min(n_chunks, len(trials))
    base, larger = divmod(len(trials), n_chunks)
    chunks = []
    start = 0
    for i in range(n_chunks):
        end = start + base + (1 if i < larger else 0)
        chunks.append(trials[start:end])
        start = end
    return chunks


def score_trials(
    trials: Sequence[TrialRecord],
    lookup: EmbeddingLookup,
    w: float = DEFAULT_FUSION_WEIGHT,
    scorer: str = "sasv",
    threads: int = 1,
) -> np.ndarray:
    """Score every trial; threads > 1 scores contiguous chunks in a process pool."""
    if scorer not in SCORERS:
        raise ContractError("unrecognized scorer: '" + scorer + "'")
    if threads < 1:
        raise ContractError("threads must be >= 1: '%s'" % threads)
    trials = list(trials)
    if threads == 1 or len(trials) < 2:
        return np.array(_score_chunk(trials, lookup, w, scorer), dtype=np.float64)
    worker = partial(_score_chunk, lookup=lookup, w=w, scorer=scorer)
    with Pool(threads) as pool:
        parts = pool.map(worker, _split_trials(trials, threads))
    return np.array([s for part in parts for s in part], dtype=np.float64)


def scored_trials(trials: Sequence[TrialRecord], scores) -> List[ScoredTrial]:
    scores = np.asarray(scores, dtype=np.float64)
    if len(trials) != scores.size:
        raise ContractError("%d scores for %d trials" % (scores.size, len(trials)))
    return [ScoredTrial(t, float(s)) for t, s in zip(trials, scores)]


def evaluate(
    utterances: Sequence,
    params: ModelParams,
    trials: Sequence[TrialRecord],
    w: float = DEFAULT_FUSION_WEIGHT,
    scorer: str = "sasv",
    threads: int = 1,
) -> Tuple[MetricSuite, np.ndarray]:
    """Embed the utterances once, score the trials and compute the suite."""
    lookup = EmbeddingLookup.build(utterances, params)
    scores = score_trials(trials, lookup, w, scorer, threads)
    return compute_metric_suite(scored_trials(trials, scores)), scores


# score files: one "trial_index score" line per trial


def format_scores(scores) -> str:
    series = scores if isinstance(scores, pd.Series) else pd.Series(np.asarray(scores, dtype=float))
    return "".join("%d %.9g\n" % (int(i), float(s)) for i, s in series.items())


def write_scores(path, scores):
    with Storage.atomic_write(path, "w", encoding="ascii") as fh:
        fh.write(format_scores(scores))


def read_scores(path) -> pd.Series:
    """Read a score file into a Series indexed by trial index."""
    try:
        frame = pd.read_csv(
            path, sep=r"\s+", header=None, names=["trial_index", "score"], dtype={"score": float}
        )
    except pd.errors.EmptyDataError:
        return pd.Series([], dtype=float, name="score")
    except ValueError as err:
        raise ContractError("%s: malformed score file: %s" % (path, err))
    if frame.isna().any().any():
        raise ContractError("%s: every score line needs 2 fields" % path)
    if not np.isfinite(frame["score"].to_numpy()).all():
        raise ContractError("%s: non-finite score" % path)
    if frame["trial_index"].duplicated().any():
        raise ContractError("%s: duplicate trial index" % path)
    return frame.set_index("trial_index")["score"]


def write_metrics(path, suite: MetricSuite):
    with Storage.atomic_write(path, "w", encoding="ascii") as fh:
        fh.write(suite.to_json())


def read_metrics(path) -> MetricSuite:
    with open(path, "r", encoding="ascii") as fh:
        return MetricSuite.from_json(fh.read())


def suite_from_score_file(trials: Sequence[TrialRecord], scores: pd.Series) -> MetricSuite:
    """Metric suite of a score file, matched to the trial list by index."""
    expected = pd.RangeIndex(len(trials))
    if not scores.index.sort_values().equals(expected):
        raise ContractError(
            "score file covers %d trial indices, trial list has %d trials" % (len(scores), len(trials))
        )
    return compute_metric_suite(scored_trials(trials, scores.sort_index().to_numpy()))
