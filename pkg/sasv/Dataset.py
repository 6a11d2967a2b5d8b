# Copyright (c) 2022,2026 SASV Developers.
# Distributed under the terms of the BSD 2-Clause License.
# SPDX-License-Identifier: BSD-2-Clause
"""Synthetic ASVspoof-LA-shaped datasets, batch sampling and trial lists.

Features are drawn from Gaussian components.  Speaker identity lives in a
low-rank subspace of the ASV branch, so unseen speakers are spanned by
the training speakers.  Each spoof carries a generation artifact in the
raw branch, scaled by a per-utterance strength, and a family trace in the
ASV branch that lies outside the speaker subspace.  The two families sit
on opposite sides of both directions, and the attacks of one family
(TTS: A01-A04, VC: A05-A06) differ only by small deviations.  Spoofed
utterances copy most of their target speaker's ASV-branch component, so
a speaker-only scorer is fooled by them.

The train, dev and eval splits have disjoint speakers.  The eval split
additionally holds two generators never seen in training: A07 (TTS
family) and A08 (VC family).
"""
import logging
import os
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from sasv.Datatypes import (
    ContractError,
    EVAL_ONLY_ATTACKS,
    Family,
    Source,
    TRAIN_ATTACKS,
)
from sasv.Protocol import (
    ProtocolRecord,
    TrialRecord,
    format_protocol,
    format_trials,
)
from sasv import Storage

# logger
_logger = logging.getLogger(__name__)

SPLITS = ["train", "dev", "eval"]
SPLIT_PREFIX = {"train": "T", "dev": "D", "eval": "E"}
ENROLL_SIZE = 3
MIN_BATCH_SIZE = 8

# component geometry, relative to class_separation
SPEAKER_RANK = 8
FAMILY_RAW_OFFSET = 3.0
FAMILY_ASV_TRACE = 1.25
ATTACK_WITHIN_FAMILY = 0.1
ATTACK_ASV_SHARE = 0.05
SPEAKER_RAW_SHARE = 0.1
SPOOF_MIMICRY = 0.9
SPOOF_RAW_SPEAKER = 0.3
# artifact strength ranges; unseen generators leave fainter artifacts
SEEN_STRENGTH = (0.5, 1.0)
UNSEEN_STRENGTH = (0.1, 0.4)


@dataclass
class DatasetConfig(object):
    """Sizes and geometry of a synthetic dataset."""

    n_speakers: int = 8
    utts_per_speaker_bonafide: int = 20
    utts_per_attack_per_speaker: int = 4
    asv_dim: int = 32
    raw_dim: int = 32
    seed: int = 0
    class_separation: float = 3.0
    n_dev_speakers: int = 4
    n_eval_speakers: int = 8

    def __post_init__(self):
        for name in (
            "utts_per_speaker_bonafide",
            "utts_per_attack_per_speaker",
            "asv_dim",
            "raw_dim",
        ):
            if getattr(self, name) < 1:
                raise ContractError("%s must be >= 1: '%s'" % (name, getattr(self, name)))
        for name in ("n_speakers", "n_dev_speakers", "n_eval_speakers"):
            if getattr(self, name) < 2:
                raise ContractError("%s must be >= 2: '%s'" % (name, getattr(self, name)))
        if not self.class_separation > 0:
            raise ContractError("class_separation must be > 0: '%s'" % self.class_separation)


@dataclass(eq=False)
class Utterance(object):
    """One synthetic sample."""

    id: str
    speaker: str
    source: Source
    asv_features: np.ndarray
    raw_features: np.ndarray
    split: str = "train"

    @property
    def is_bonafide(self) -> bool:
        return self.source.is_bonafide

    @property
    def family(self) -> Optional[Family]:
        return self.source.family


class Dataset(object):
    """An immutable collection of utterances grouped into splits."""

    def __init__(self, utterances: Sequence[Utterance], config: Optional[DatasetConfig] = None):
        self.utterances = list(utterances)
        self.config = config
        self.by_id = {}
        self.splits = {}
        for u in self.utterances:
            if u.id in self.by_id:
                raise ContractError("duplicate utterance id: '" + u.id + "'")
            self.by_id[u.id] = u
            self.splits.setdefault(u.split, []).append(u)
        self.train_speakers = sorted(
            {u.speaker for u in self.splits.get("train", []) if u.is_bonafide}
        )
        self._speaker_index = {spk: i for i, spk in enumerate(self.train_speakers)}

    def __len__(self):
        return len(self.utterances)

    def __repr__(self):
        sizes = ", ".join("%s=%d" % (k, len(v)) for k, v in self.splits.items())
        return "Dataset(%s)" % sizes

    @property
    def asv_dim(self) -> int:
        return int(self.utterances[0].asv_features.shape[0]) if self.utterances else 0

    @property
    def raw_dim(self) -> int:
        return int(self.utterances[0].raw_features.shape[0]) if self.utterances else 0

    def split(self, name: str) -> List[Utterance]:
        if name not in self.splits:
            raise ContractError("dataset has no split: '" + name + "'")
        return self.splits[name]

    def speaker_index(self, speaker: str) -> int:
        """Index of a training speaker in the ASV head."""
        try:
            return self._speaker_index[speaker]
        except KeyError:
            raise ContractError("not a training speaker: '" + speaker + "'")

    def protocol(self, split: str) -> List[ProtocolRecord]:
        return [
            ProtocolRecord(
                u.speaker,
                u.id,
                None if u.is_bonafide else u.source.value,
                "bonafide" if u.is_bonafide else "spoof",
            )
            for u in self.split(split)
        ]


def _as_float32(x):
    # features are stored as float32 on disk; keep the in-memory copy identical
    return x.astype(np.float32).astype(np.float64)


def _unit(vector: np.ndarray) -> np.ndarray:
    return vector / np.linalg.norm(vector)


def generate_synthetic_dataset(cfg: DatasetConfig) -> Dataset:
    """Draw a train/dev/eval dataset; a pure function of cfg."""
    rng = np.random.default_rng(cfg.seed)
    scale = cfg.class_separation
    # speaker subspace plus one orthogonal family-trace direction
    rank = max(1, min(SPEAKER_RANK, cfg.asv_dim - 1))
    basis, _ = np.linalg.qr(rng.normal(size=(cfg.asv_dim, min(rank + 1, cfg.asv_dim))))
    voices = basis[:, :rank]
    trace = basis[:, -1]
    artifact = _unit(rng.normal(size=cfg.raw_dim))
    side = {Family.TTS: 1.0, Family.VC: -1.0}
    attack_raw = {}
    attack_asv = {}
    for attack in TRAIN_ATTACKS + EVAL_ONLY_ATTACKS:
        sign = side[attack.family]
        attack_raw[attack] = sign * FAMILY_RAW_OFFSET * scale * artifact + rng.normal(
            0.0, ATTACK_WITHIN_FAMILY * scale, cfg.raw_dim
        )
        attack_asv[attack] = sign * FAMILY_ASV_TRACE * scale * trace + rng.normal(
            0.0, ATTACK_ASV_SHARE * scale, cfg.asv_dim
        )
    counts = {"train": cfg.n_speakers, "dev": cfg.n_dev_speakers, "eval": cfg.n_eval_speakers}
    utterances = []
    speaker_no = 0
    for split in SPLITS:
        attacks = TRAIN_ATTACKS + (EVAL_ONLY_ATTACKS if split == "eval" else [])
        utt_no = 0
        for _ in range(counts[split]):
            speaker_no += 1
            speaker = "LA_%04d" % speaker_no
            spk_asv = voices @ rng.normal(0.0, scale, rank)
            spk_raw = rng.normal(0.0, SPEAKER_RAW_SHARE * scale, cfg.raw_dim)
            # speakers do not move the artifact direction
            spk_raw -= (spk_raw @ artifact) * artifact
            plan = [(Source.BONAFIDE, cfg.utts_per_speaker_bonafide)]
            plan += [(a, cfg.utts_per_attack_per_speaker) for a in attacks]
            for source, n in plan:
                for _ in range(n):
                    utt_no += 1
                    asv_noise = rng.normal(0.0, 1.0, cfg.asv_dim)
                    raw_noise = rng.normal(0.0, 1.0, cfg.raw_dim)
                    if source.is_bonafide:
                        asv = spk_asv + asv_noise
                        raw = spk_raw + raw_noise
                    else:
                        low, high = UNSEEN_STRENGTH if source in EVAL_ONLY_ATTACKS else SEEN_STRENGTH
                        strength = rng.uniform(low, high)
                        asv = SPOOF_MIMICRY * spk_asv + attack_asv[source] + asv_noise
                        raw = SPOOF_RAW_SPEAKER * spk_raw + strength * attack_raw[source] + raw_noise
                    utterances.append(
                        Utterance(
                            "LA_%s_%07d" % (SPLIT_PREFIX[split], utt_no),
                            speaker,
                            source,
                            _as_float32(asv),
                            _as_float32(raw),
                            split,
                        )
                    )
    dataset = Dataset(utterances, cfg)
    _logger.info("generated %r", dataset)
    return dataset


@dataclass
class Batch(object):
    """A training batch and its composition guarantees."""

    utterances: List[Utterance]
    speakers: List[str] = field(default_factory=list)
    has_speaker_pairs: bool = False
    has_tts: bool = False
    has_vc: bool = False

    @property
    def ids(self) -> List[str]:
        return [u.id for u in self.utterances]


def _composition(utterances, speakers):
    bona = {}
    for u in utterances:
        if u.is_bonafide:
            bona[u.speaker] = bona.get(u.speaker, 0) + 1
    pairs = len(speakers) >= 2 and all(bona.get(s, 0) >= 2 for s in speakers)
    tts = any(u.family is Family.TTS for u in utterances)
    vc = any(u.family is Family.VC for u in utterances)
    return pairs, tts, vc


def sample_batch(dataset: Dataset, batch_size: int, seed: int, split: str = "train") -> Batch:
    """Sample a batch in which >= 2 speakers have >= 2 bonafide utterances
    and both spoof families are present; deterministic given seed."""
    if batch_size < MIN_BATCH_SIZE:
        raise ContractError("batch_size must be >= %d: '%s'" % (MIN_BATCH_SIZE, batch_size))
    pool = dataset.split(split)
    bona = {}
    tts, vc = [], []
    for i, u in enumerate(pool):
        if u.is_bonafide:
            bona.setdefault(u.speaker, []).append(i)
        elif u.family is Family.TTS:
            tts.append(i)
        else:
            vc.append(i)
    eligible = sorted(spk for spk, idx in bona.items() if len(idx) >= 2)
    if len(eligible) < 2:
        raise ContractError("dataset too small: fewer than 2 speakers with 2 bonafide utterances")
    if not tts:
        raise ContractError("dataset too small: no TTS attack in split '%s'" % split)
    if not vc:
        raise ContractError("dataset too small: no VC attack in split '%s'" % split)
    rng = np.random.default_rng(seed)
    n_spk = min(len(eligible), max(2, batch_size // 4))
    speakers = sorted(rng.choice(eligible, n_spk, replace=False).tolist())
    chosen = []
    for spk in speakers:
        chosen.extend(rng.choice(bona[spk], 2, replace=False).tolist())
    chosen.append(int(rng.choice(tts)))
    chosen.append(int(rng.choice(vc)))
    taken = set(chosen)
    rest = [i for i in range(len(pool)) if i not in taken]
    n_fill = min(len(rest), batch_size - len(chosen))
    if n_fill > 0:
        chosen.extend(rng.choice(rest, n_fill, replace=False).tolist())
    utterances = [pool[i] for i in sorted(chosen)]
    pairs, has_tts, has_vc = _composition(utterances, speakers)
    _logger.debug("batch seed=%d: %d utterances, speakers %s", seed, len(utterances), speakers)
    return Batch(utterances, speakers, pairs, has_tts, has_vc)


def label_trial(dataset: Dataset, enroll_utt_ids: Sequence[str], test_utt_id: str) -> str:
    """Ground-truth label of a trial: spoof, target or nontarget."""
    claimed = dataset.by_id[enroll_utt_ids[0]].speaker
    test = dataset.by_id[test_utt_id]
    if not test.is_bonafide:
        return "spoof"
    return "target" if test.speaker == claimed else "nontarget"


def _select(candidates, n, rng, what):
    if n is None:
        return candidates
    if n < 0 or n > len(candidates):
        raise ContractError(
            "insufficient utterances: %d %s trials requested, %d available"
            % (n, what, len(candidates))
        )
    picked = np.sort(rng.choice(len(candidates), n, replace=False)) if n else []
    return [candidates[i] for i in picked]


def build_trials(
    dataset: Dataset,
    split: str,
    seed: int,
    n_target: Optional[int] = None,
    n_nontarget: Optional[int] = None,
    n_spoof: Optional[int] = None,
) -> List[TrialRecord]:
    """Target, nontarget and spoof trials over one split.

    Every speaker with at least three bonafide utterances is enrolled with
    three of them, and enrollment utterances are never used as tests.
    Counts default to all targets, as many nontargets as targets, and all
    spoofs.
    """
    utts = dataset.split(split)
    rng = np.random.default_rng(seed)
    bona = {}
    spoofs = {}
    for u in utts:
        (bona if u.is_bonafide else spoofs).setdefault(u.speaker, []).append(u.id)
    enroll = {}
    for spk in sorted(bona):
        if len(bona[spk]) >= ENROLL_SIZE:
            enroll[spk] = tuple(sorted(rng.choice(bona[spk], ENROLL_SIZE, replace=False).tolist()))
    if not enroll:
        raise ContractError("insufficient utterances: no speaker in '%s' can be enrolled" % split)
    enrolled_ids = {i for ids in enroll.values() for i in ids}
    tests = {spk: [i for i in ids if i not in enrolled_ids] for spk, ids in bona.items()}
    targets, nontargets, spoof_trials = [], [], []
    for spk, enr in enroll.items():
        targets.extend(TrialRecord(enr, t, "target") for t in tests[spk])
        for other in sorted(tests):
            if other != spk:
                nontargets.extend(TrialRecord(enr, t, "nontarget") for t in tests[other])
        spoof_trials.extend(TrialRecord(enr, t, "spoof") for t in spoofs.get(spk, []))
    if n_nontarget is None:
        n_nontarget = min(len(targets), len(nontargets))
    trials = (
        _select(targets, n_target, rng, "target")
        + _select(nontargets, n_nontarget, rng, "nontarget")
        + _select(spoof_trials, n_spoof, rng, "spoof")
    )
    _logger.debug("built %d trials for split '%s'", len(trials), split)
    return trials


# on-disk form

MANIFEST_NAME = "manifest.txt"
ASV_FEATURES_NAME = "asv_features.sasf"
RAW_FEATURES_NAME = "raw_features.sasf"


def protocol_name(split: str) -> str:
    return "protocol_%s.txt" % split


def trials_name(split: str) -> str:
    return "trials_%s.txt" % split


def save_dataset(dataset: Dataset, directory, seed: int = 0):
    """Write manifest, feature files, per-split protocols and dev/eval trials."""
    os.makedirs(directory, exist_ok=True)
    Storage.write_manifest(
        os.path.join(directory, MANIFEST_NAME),
        [(u.id, u.speaker, u.source.value, u.split) for u in dataset.utterances],
    )
    Storage.write_features(
        os.path.join(directory, ASV_FEATURES_NAME),
        np.stack([u.asv_features for u in dataset.utterances]),
    )
    Storage.write_features(
        os.path.join(directory, RAW_FEATURES_NAME),
        np.stack([u.raw_features for u in dataset.utterances]),
    )
    for split in dataset.splits:
        with Storage.atomic_write(os.path.join(directory, protocol_name(split)), encoding="ascii") as fh:
            fh.write(format_protocol(dataset.protocol(split)))
        if split != "train":
            with Storage.atomic_write(os.path.join(directory, trials_name(split)), encoding="ascii") as fh:
                fh.write(format_trials(build_trials(dataset, split, seed)))
    _logger.info("saved %r to %s", dataset, directory)


def load_dataset(directory) -> Dataset:
    """Read a dataset written by save_dataset()."""
    manifest = Storage.read_manifest(os.path.join(directory, MANIFEST_NAME))
    n = len(manifest)
    asv = Storage.read_features(os.path.join(directory, ASV_FEATURES_NAME), n)
    raw = Storage.read_features(os.path.join(directory, RAW_FEATURES_NAME), n)
    utterances = []
    for i, row in enumerate(manifest.itertuples(index=False)):
        if row.split not in SPLITS:
            raise Storage.StorageError("unrecognized split: '" + row.split + "'")
        utterances.append(
            Utterance(row.id, row.speaker, Source.parse(row.source), asv[i], raw[i], row.split)
        )
    return Dataset(utterances)
