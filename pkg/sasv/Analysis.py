# Copyright (c) 2022,2026 SASV Developers.
# Distributed under the terms of the BSD 2-Clause License.
# SPDX-License-Identifier: BSD-2-Clause
"""Embedding-space analysis: clustering of spoof sources and 2-D projection."""
import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import pandas as pd
from scipy.spatial import distance

from sasv.Datatypes import ContractError, Family, Source
from sasv import Storage

# logger
_logger = logging.getLogger(__name__)

# relative eigenvalue below which a principal direction counts as absent
RANK_TOLERANCE = 1e-12


def cosine_distances(embeddings) -> np.ndarray:
    """Square matrix of pairwise cosine distances."""
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2:
        raise ContractError("embeddings must be an (n, d) matrix")
    if np.any(np.linalg.norm(x, axis=1) == 0.0):
        raise ContractError("cosine distance of a zero-norm embedding")
    return distance.squareform(distance.pdist(x, "cosine"), checks=False)


def agglomerative_cluster(embeddings, k: int) -> np.ndarray:
    """Average-linkage clustering under cosine distance, down to k clusters.

    Each step merges the closest pair of clusters; ties go to the pair
    with the smallest (min index, max index).  A cluster is named by its
    smallest member, and the returned labels 0..k-1 follow that order.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    n = x.shape[0] if x.ndim == 2 else 0
    if not 1 <= k <= max(n, 1) or n == 0:
        raise ContractError("k must lie in [1, %d]: '%s'" % (n, k))
    d = cosine_distances(x)
    # only the upper triangle is live; argmin then scans (i, j) lexicographically
    d[np.tril_indices(n)] = np.inf
    sizes = np.ones(n)
    root = np.arange(n)
    for _ in range(n - k):
        i, j = np.unravel_index(np.argmin(d), d.shape)
        merged = (sizes[i] * _row(d, i) + sizes[j] * _row(d, j)) / (sizes[i] + sizes[j])
        merged[[i, j]] = np.inf
        d[:i, i] = merged[:i]
        d[i, i + 1:] = merged[i + 1:]
        d[j, :] = np.inf
        d[:, j] = np.inf
        sizes[i] += sizes[j]
        root[root == j] = i
    _, labels = np.unique(root, return_inverse=True)
    _logger.debug("clustered %d embeddings into %d clusters", n, k)
    return labels


def _row(d, i):
    """Distances from cluster i to every cluster, read from the upper triangle."""
    return np.concatenate([d[:i, i], [np.inf], d[i, i + 1:]])


def cluster_purity(assignments, labels) -> float:
    """Share of points whose cluster's majority label is their own."""
    frame = pd.DataFrame({"cluster": np.asarray(assignments), "label": np.asarray(labels)})
    if frame.empty:
        raise ContractError("purity of an empty clustering")
    majority = frame.groupby("cluster")["label"].agg(lambda s: s.value_counts().iloc[0])
    return float(majority.sum() / len(frame))


def family_labels(sources: Sequence[Source]) -> np.ndarray:
    """"bonafide", "TTS" or "VC" per utterance."""
    return np.array(["bonafide" if s.is_bonafide else s.family.value for s in sources])


@dataclass(frozen=True)
class FamilyDistances(object):
    """Mean cosine distances within and between the spoof families."""

    intra_tts: float
    intra_vc: float
    inter: float

    @property
    def separated(self) -> bool:
        return self.intra_tts < self.inter and self.intra_vc < self.inter


def family_distances(embeddings, sources: Sequence[Source]) -> FamilyDistances:
    x = np.asarray(embeddings, dtype=np.float64)
    fams = [s.family for s in sources]
    tts = x[[f is Family.TTS for f in fams]]
    vc = x[[f is Family.VC for f in fams]]
    if len(tts) < 2 or len(vc) < 2:
        raise ContractError("family distances need two TTS and two VC embeddings")
    return FamilyDistances(
        float(distance.pdist(tts, "cosine").mean()),
        float(distance.pdist(vc, "cosine").mean()),
        float(distance.cdist(tts, vc, "cosine").mean()),
    )


@dataclass
class Projection(object):
    """Top-2 principal component coordinates of a point set."""

    coords: np.ndarray
    eigenvalues: np.ndarray
    rank_deficient: bool = False


def project_2d(embeddings) -> Projection:
    """Project mean-centred embeddings onto their two leading principal axes.

    eigenvalues are those of the covariance (normalized by n), in
    decreasing order.  If fewer than two directions carry variance the
    missing coordinates are zero and rank_deficient is set.
    """
    x = np.asarray(embeddings, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 3:
        raise ContractError("projection needs at least 3 points")
    centred = x - x.mean(axis=0)
    cov = centred.T @ centred / x.shape[0]
    values, vectors = np.linalg.eigh(cov)
    values = values[::-1].clip(min=0.0)
    vectors = vectors[:, ::-1]
    scale = max(values[0], np.finfo(float).tiny)
    axes = []
    rank_deficient = False
    for c in range(2):
        v = vectors[:, c] if c < vectors.shape[1] else np.zeros(x.shape[1])
        if c >= len(values) or values[c] <= RANK_TOLERANCE * scale:
            rank_deficient = True
            v = np.zeros(x.shape[1])
        elif v[np.argmax(np.abs(v))] < 0:
            v = -v
        axes.append(v)
    if rank_deficient:
        _logger.warning("projection input is rank deficient")
    coords = centred @ np.stack(axes, axis=1)
    return Projection(coords, values, rank_deficient)


# CSV exports


def _utterance_columns(utterances):
    return {
        "id": [u.id for u in utterances],
        "speaker": [u.speaker for u in utterances],
        "source": [u.source.value for u in utterances],
    }


def write_clusters(path, utterances, assignments):
    frame = pd.DataFrame(_utterance_columns(utterances))
    frame["cluster"] = np.asarray(assignments, dtype=int)
    with Storage.atomic_write(path, "w", encoding="ascii", newline="") as fh:
        frame.to_csv(fh, index=False)


def write_projection(path, utterances, projection: Projection):
    frame = pd.DataFrame(_utterance_columns(utterances))
    frame["x"] = projection.coords[:, 0]
    frame["y"] = projection.coords[:, 1]
    with Storage.atomic_write(path, "w", encoding="ascii", newline="") as fh:
        frame.to_csv(fh, index=False, float_format="%.9g")
