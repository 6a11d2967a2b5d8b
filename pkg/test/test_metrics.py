"""Test scoring, equal error rates and score files."""
import math

import numpy as np
import pandas as pd
import pytest

from sasv.Dataset import DatasetConfig, build_trials, generate_synthetic_dataset
from sasv.Datatypes import ContractError, Embedding
from sasv.Metrics import (
    EmbeddingLookup,
    MetricSuite,
    ScoredTrial,
    cm_log_odds,
    compute_eer,
    compute_metric_suite,
    cosine_score,
    read_metrics,
    read_scores,
    sasv_score,
    score_sum_baseline,
    score_trials,
    scored_trials,
    suite_from_score_file,
    write_metrics,
    write_scores,
)
from sasv.Model import ModelConfig, ModelParams
from sasv.Protocol import TrialRecord


def _scored(labels, scores):
    """Scored trials with distinct dummy ids."""
    return [
        ScoredTrial(TrialRecord(("e%d" % i,), "t%d" % i, label), float(score))
        for i, (label, score) in enumerate(zip(labels, scores))
    ]


def test_cosine_examples():
    assert cosine_score([1.0, 0.0], [0.0, 1.0]) == 0.0
    assert cosine_score([1.0, 2.0], [2.0, 4.0]) == pytest.approx(1.0)
    assert cosine_score(Embedding([1.0, 0.0]), [-3.0, 0.0]) == -1.0
    with pytest.raises(ContractError):
        cosine_score([0.0, 0.0], [1.0, 0.0])
    with pytest.raises(ContractError):
        cosine_score([1.0, 0.0], [1.0, 0.0, 0.0])


def test_sasv_score_examples():
    test = [0.9, math.sqrt(1.0 - 0.81)]
    assert sasv_score([[1.0, 0.0]], test, 1.0) == pytest.approx(1.9)
    assert sasv_score([[1.0, 0.0]], test, 0.0) == pytest.approx(-0.1)
    assert sasv_score([[1.0, 0.0]], test, 0.5) == pytest.approx(0.9)
    assert sasv_score([[1.0, 0.0]], test, 0.0, w=0.0) == pytest.approx(0.9)
    # the enrollment centroid is the mean embedding
    assert sasv_score([[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0], 0.5) == pytest.approx(1.0)


def test_sasv_score_checks():
    with pytest.raises(ContractError):
        sasv_score([], [1.0, 0.0], 0.5)
    with pytest.raises(ContractError):
        sasv_score([[1.0, 0.0]], [1.0, 0.0], 1.5)
    with pytest.raises(ContractError):
        sasv_score([[1.0, 0.0]], [1.0, 0.0], 0.5, w=-1.0)


def test_cm_log_odds():
    assert cm_log_odds(0.5) == 0.0
    assert cm_log_odds([0.75])[0] == pytest.approx(math.log(3.0))
    assert np.all(np.isfinite(cm_log_odds([0.0, 1.0])))


def test_eer_perfect_separation():
    eer, threshold = compute_eer(_scored(["target"] * 2 + ["nontarget"] * 2, [1.0, 2.0, -1.0, 0.0]))
    assert eer == 0.0
    assert threshold == 1.0


def test_eer_identical_distributions():
    eer, _ = compute_eer(_scored(["target", "target", "spoof", "spoof"], [0.0, 1.0, 0.0, 1.0]))
    assert eer == 0.5


def test_eer_one_third():
    labels = ["target"] * 3 + ["nontarget"] * 3
    eer, threshold = compute_eer(_scored(labels, [0.2, 0.6, 0.9, 0.1, 0.3, 0.7]))
    assert eer == pytest.approx(1.0 / 3.0)
    assert threshold == 0.6


def test_eer_interpolates():
    labels = ["target"] * 3 + ["nontarget"] * 2
    eer, threshold = compute_eer(_scored(labels, [0.0, 1.0, 2.0, 1.5, 3.0]))
    assert eer == pytest.approx(2.0 / 3.0)
    assert threshold == pytest.approx(1.5 + 2.0 / 3.0 * 0.5)


def test_eer_needs_both_classes():
    with pytest.raises(ContractError):
        compute_eer(_scored(["target", "target"], [0.0, 1.0]))


def _eer_by_counting(pos, neg):
    """FRR and FAR counted directly at every threshold, then interpolated."""
    thresholds = sorted(set(pos) | set(neg)) + [math.inf]
    frr = [sum(1 for s in pos if s < t) / len(pos) for t in thresholds]
    far = [sum(1 for s in neg if s >= t) / len(neg) for t in thresholds]
    for i, t in enumerate(thresholds):
        if frr[i] - far[i] >= 0:
            if frr[i] == far[i]:
                return frr[i]
            g0, g1 = frr[i - 1] - far[i - 1], frr[i] - far[i]
            return frr[i - 1] + (-g0 / (g1 - g0)) * (frr[i] - frr[i - 1])


def test_eer_matches_counting_oracle():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n_pos, n_neg = rng.integers(1, 51, size=2)
        # a coarse grid forces ties between and within classes
        pos = list(np.round(rng.normal(1.0, 1.0, n_pos), 1))
        neg = list(np.round(rng.normal(0.0, 1.0, n_neg), 1))
        eer, _ = compute_eer(_scored(["target"] * n_pos + ["spoof"] * n_neg, pos + neg))
        assert 0.0 <= eer <= 1.0
        assert eer == pytest.approx(_eer_by_counting(pos, neg), abs=1e-12)


def test_eer_invariances():
    rng = np.random.default_rng(1)
    labels = ["target"] * 30 + ["nontarget"] * 40
    scores = np.concatenate([rng.normal(1.0, 1.0, 30), rng.normal(0.0, 1.0, 40)])
    eer, _ = compute_eer(_scored(labels, scores))
    monotone, _ = compute_eer(_scored(labels, 3.0 * np.tanh(scores) + 7.0))
    assert monotone == pytest.approx(eer, abs=1e-12)
    order = rng.permutation(len(labels))
    shuffled, _ = compute_eer(_scored([labels[i] for i in order], scores[order]))
    assert shuffled == pytest.approx(eer, abs=1e-12)


def test_metric_suite_subsets():
    rng = np.random.default_rng(2)
    labels = ["target"] * 20 + ["nontarget"] * 20 + ["spoof"] * 20
    scores = np.concatenate(
        [rng.normal(2.0, 1.0, 20), rng.normal(0.0, 1.0, 20), rng.normal(1.0, 1.0, 20)]
    )
    scored = _scored(labels, scores)
    suite = compute_metric_suite(scored)
    assert suite.sasv_eer == compute_eer(scored)[0]
    assert suite.sv_eer == compute_eer([s for s in scored if s.label != "spoof"])[0]
    assert suite.spf_eer == compute_eer([s for s in scored if s.label != "nontarget"])[0]


def test_metric_suite_empty_subset():
    scored = _scored(["target", "spoof"], [1.0, 0.0])
    with pytest.raises(ContractError) as err:
        compute_metric_suite(scored)
    assert "no nontarget trials" in str(err.value)


def test_metric_suite_json(tmp_path):
    suite = MetricSuite(0.0486, 0.0806, 0.005, 0.1, -0.2, 0.3)
    assert suite.string() == "SASV-EER 4.86%, SV-EER 8.06%, SPF-EER 0.50%"
    path = tmp_path / "metrics.json"
    write_metrics(path, suite)
    assert read_metrics(path) == suite
    with pytest.raises(ContractError):
        MetricSuite(1.5, 0.0, 0.0)
    with pytest.raises(ContractError):
        MetricSuite.from_json('{"sasv_eer": 0.1}')


def test_score_sum_examples():
    fused = score_sum_baseline([0.5, -0.2], [1.0, 2.0])
    assert list(fused) == pytest.approx([1.5, 1.8])
    with pytest.raises(ContractError):
        score_sum_baseline([0.5], [1.0, 2.0])
    with pytest.raises(ContractError):
        score_sum_baseline(pd.Series([1.0, 2.0], index=[0, 1]), pd.Series([1.0, 2.0], index=[1, 2]))


def test_score_sum_can_fail_on_well_separated_subsystems():
    """Each subsystem separates its own task, yet the uncalibrated sum mis-ranks."""
    labels = ["target", "nontarget", "spoof"]
    asv = [1.0, -1.0, 0.9]
    cm = [1.0, 5.0, -10.0]
    assert compute_eer(_scored(labels[:2], asv[:2]))[0] == 0.0
    assert compute_eer(_scored([labels[0], labels[2]], [cm[0], cm[2]]))[0] == 0.0
    fused = score_sum_baseline(asv, cm)
    assert compute_eer(_scored(labels, fused))[0] == 0.5


def test_score_file_round_trip(tmp_path):
    path = tmp_path / "scores.txt"
    scores = np.array([0.25, -1.5, 3.0000000001, 1e-7])
    write_scores(path, scores)
    assert path.read_text().splitlines()[0] == "0 0.25"
    back = read_scores(path)
    assert list(back.index) == [0, 1, 2, 3]
    assert np.allclose(back.to_numpy(), scores, rtol=1e-8, atol=0)


def test_score_file_errors(tmp_path):
    path = tmp_path / "scores.txt"
    path.write_text("0 0.5\n1\n")
    with pytest.raises(ContractError):
        read_scores(path)
    path.write_text("0 0.5\n0 0.7\n")
    with pytest.raises(ContractError):
        read_scores(path)
    path.write_text("0 0.5\n1 nan\n")
    with pytest.raises(ContractError):
        read_scores(path)


def test_suite_from_score_file():
    trials = [
        TrialRecord(("a",), "b", "target"),
        TrialRecord(("a",), "c", "nontarget"),
        TrialRecord(("a",), "d", "spoof"),
    ]
    scores = pd.Series([0.1, 0.9, 0.2], index=[2, 0, 1])
    suite = suite_from_score_file(trials, scores)
    assert suite == compute_metric_suite(scored_trials(trials, [0.9, 0.2, 0.1]))
    with pytest.raises(ContractError):
        suite_from_score_file(trials, pd.Series([0.1, 0.9], index=[0, 1]))


@pytest.fixture(scope="module")
def scoring_setup():
    data = generate_synthetic_dataset(
        DatasetConfig(n_speakers=2, utts_per_speaker_bonafide=6, utts_per_attack_per_speaker=1,
                      asv_dim=6, raw_dim=5, n_dev_speakers=2, n_eval_speakers=3, seed=8)
    )
    config = ModelConfig(asv_dim=6, raw_dim=5, asv_out=4, raw_hidden=6, raw_out=4, embed_dim=5, n_speakers=2)
    params = ModelParams.initialize(config, 3)
    utterances = data.split("eval")
    return EmbeddingLookup.build(utterances, params), build_trials(data, "eval", 0)


def test_scoring_with_threads(scoring_setup):
    lookup, trials = scoring_setup
    single = score_trials(trials, lookup, 1.0, "sasv", 1)
    pooled = score_trials(trials, lookup, 1.0, "sasv", 3)
    assert np.array_equal(single, pooled)
    assert len(single) == len(trials)


def test_scoring_checks(scoring_setup):
    lookup, trials = scoring_setup
    with pytest.raises(ContractError):
        score_trials(trials, lookup, 1.0, "fused")
    with pytest.raises(ContractError):
        score_trials([TrialRecord(("nope",), trials[0].test_utt_id, "target")], lookup)


def test_asv_branch_ignores_cm(scoring_setup):
    lookup, trials = scoring_setup
    assert np.array_equal(
        score_trials(trials, lookup, 0.0, "asv-branch"), score_trials(trials, lookup, 5.0, "asv-branch")
    )
    assert not np.array_equal(score_trials(trials, lookup, 0.0), score_trials(trials, lookup, 5.0))


def test_cosine_scorer_is_fooled_by_mimicry():
    """Spoofs that copy the target speaker pass a cosine-only scorer."""
    rng = np.random.default_rng(4)
    centres = rng.normal(0.0, 3.0, size=(5, 16))
    attack = rng.normal(0.0, 0.1, size=16)
    labels, scores = [], []
    for s, centre in enumerate(centres):
        for _ in range(10):
            tests = {
                "target": centre + rng.normal(size=16),
                "nontarget": centres[(s + 1) % 5] + rng.normal(size=16),
                "spoof": centre + attack + rng.normal(size=16),
            }
            for label, test in tests.items():
                labels.append(label)
                scores.append(cosine_score(centre, test))
    suite = compute_metric_suite(_scored(labels, scores))
    assert suite.spf_eer > suite.sv_eer
    assert suite.spf_eer > 0.2
