# Copyright (c) 2022,2026 SASV Developers.
# Distributed under the terms of the BSD 2-Clause License.
# SPDX-License-Identifier: BSD-2-Clause
"""Command-line entry point: sasv <subcommand> [options].

Exit status is 0 on success, 1 when an input fails validation and 2 on a
numeric failure or a usage error.  Every output file is written to a
temporary file and renamed into place.
"""
import argparse
import dataclasses
import logging
import sys
from typing import Callable, Dict, List, Optional

import numpy as np

from sasv import __version__
from sasv import Analysis, Metrics
from sasv.Autograd import NumericError
from sasv.Checkpoint import load_checkpoint, save_checkpoint
from sasv.Config import load_config
from sasv.Dataset import Dataset, generate_synthetic_dataset, load_dataset, save_dataset
from sasv.Datatypes import ContractError
from sasv.Model import ModelParams, embed_utterances
from sasv.Protocol import parse_trials
from sasv.Report import report_table
from sasv.Storage import atomic_write
from sasv.Trainer import train

# logger
_logger = logging.getLogger(__name__)


# Exceptions
class UsageError(Exception):
    """Exception raised for a malformed command line."""

    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError("%s%s: error: %s" % (self.format_usage(), self.prog, message))


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sasv", description="Spoofing-aware speaker verification experiments.")
    parser.add_argument("--version", action="version", version="sasv " + __version__)
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-d", "--debug", action="store_true", help="log debugging detail")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="log warnings and errors only")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    p = sub.add_parser("gen-data", help="generate a synthetic dataset")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--out", required=True, help="dataset directory")

    p = sub.add_parser("train", help="train a model")
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--out", required=True, help="checkpoint path")
    p.add_argument("--log", help="training log path")
    p.add_argument("--threads", type=int, help="processes for dev scoring")

    p = sub.add_parser("eval", help="score a trial list and compute the EERs")
    p.add_argument("--ckpt", required=True, help="checkpoint path")
    p.add_argument("--data", required=True, help="dataset directory")
    p.add_argument("--trials", required=True, help="trial list")
    p.add_argument("--out", required=True, help="metrics JSON path")
    p.add_argument("--fusion-weight", type=float, default=Metrics.DEFAULT_FUSION_WEIGHT)
    p.add_argument("--scorer", choices=Metrics.SCORERS, default="sasv")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--scores-out", help="per-trial scores of the chosen scorer")
    p.add_argument("--asv-scores-out", help="per-trial ASV-branch cosine scores")
    p.add_argument("--cm-scores-out", help="per-trial CM log-odds of the test utterance")

    p = sub.add_parser("cluster", help="cluster embeddings of one split")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--k", type=int, required=True, help="number of clusters")
    p.add_argument("--split", default="eval")
    p.add_argument("--out", required=True, help="CSV path")

    p = sub.add_parser("project", help="2-D principal component projection of one split")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--split", default="eval")
    p.add_argument("--out", required=True, help="CSV path")

    p = sub.add_parser("fuse", help="score-sum fusion of ASV and CM score files")
    p.add_argument("--asv-scores", required=True)
    p.add_argument("--cm-scores", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("metrics", help="compute the EERs of a score file")
    p.add_argument("--scores", required=True)
    p.add_argument("--trials", required=True)
    p.add_argument("--out", required=True, help="metrics JSON path")

    p = sub.add_parser("report", help="markdown table of metrics files")
    p.add_argument("--metrics", required=True, help="comma-separated metrics JSON paths")
    p.add_argument("--names", required=True, help="comma-separated row names")
    p.add_argument("--out", required=True)
    return parser


def parse_cli(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse argv into a plan; raises UsageError on a bad command line."""
    return _build_parser().parse_args(argv)


def _check_dims(params: ModelParams, dataset: Dataset):
    if (params.config.asv_dim, params.config.raw_dim) != (dataset.asv_dim, dataset.raw_dim):
        raise ContractError(
            "dimension mismatch: checkpoint expects asv/raw features of %d/%d, data has %d/%d"
            % (params.config.asv_dim, params.config.raw_dim, dataset.asv_dim, dataset.raw_dim)
        )


def _model_and_data(plan):
    params = load_checkpoint(plan.ckpt)
    dataset = load_dataset(plan.data)
    _check_dims(params, dataset)
    return params, dataset


def _write_text(path, text):
    with atomic_write(path, "w", encoding="ascii") as fh:
        fh.write(text)


def _gen_data(plan):
    config = load_config(plan.config)
    dataset = generate_synthetic_dataset(config.dataset_config())
    save_dataset(dataset, plan.out, seed=config.get("seed"))


def _train(plan):
    cfg = load_config(plan.config).train_config()
    if plan.threads is not None:
        cfg = dataclasses.replace(cfg, threads=plan.threads)
    dataset = load_dataset(plan.data)
    params, history = train(dataset, cfg)
    save_checkpoint(params, plan.out)
    if plan.log:
        _write_text(plan.log, "".join(line + "\n" for line in history.log_lines()))
    if history.dev:
        _logger.info("final dev metrics: %s", history.dev[-1].string())


def _eval(plan):
    params, dataset = _model_and_data(plan)
    trials = parse_trials(plan.trials)
    lookup = Metrics.EmbeddingLookup.build(dataset.utterances, params)
    scores = Metrics.score_trials(trials, lookup, plan.fusion_weight, plan.scorer, plan.threads)
    suite = Metrics.compute_metric_suite(Metrics.scored_trials(trials, scores))
    Metrics.write_metrics(plan.out, suite)
    if plan.scores_out:
        Metrics.write_scores(plan.scores_out, scores)
    if plan.asv_scores_out:
        asv = Metrics.score_trials(trials, lookup, 0.0, "asv-branch", plan.threads)
        Metrics.write_scores(plan.asv_scores_out, asv)
    if plan.cm_scores_out:
        p = np.array([lookup.p_bonafide[lookup.row(t.test_utt_id)] for t in trials])
        Metrics.write_scores(plan.cm_scores_out, Metrics.cm_log_odds(p))
    print(suite.string())


def _split_embeddings(plan):
    params, dataset = _model_and_data(plan)
    utterances = dataset.split(plan.split)
    emb, _, _ = embed_utterances(utterances, params)
    return utterances, emb


def _cluster(plan):
    utterances, emb = _split_embeddings(plan)
    assignments = Analysis.agglomerative_cluster(emb, plan.k)
    purity = Analysis.cluster_purity(
        assignments, Analysis.family_labels([u.source for u in utterances])
    )
    _logger.info("cluster purity against family labels: %.4f", purity)
    Analysis.write_clusters(plan.out, utterances, assignments)


def _project(plan):
    utterances, emb = _split_embeddings(plan)
    Analysis.write_projection(plan.out, utterances, Analysis.project_2d(emb))


def _fuse(plan):
    fused = Metrics.score_sum_baseline(
        Metrics.read_scores(plan.asv_scores), Metrics.read_scores(plan.cm_scores)
    )
    Metrics.write_scores(plan.out, fused)


def _metrics(plan):
    trials = parse_trials(plan.trials)
    suite = Metrics.suite_from_score_file(trials, Metrics.read_scores(plan.scores))
    Metrics.write_metrics(plan.out, suite)
    print(suite.string())


def _report(plan):
    paths = plan.metrics.split(",")
    names = plan.names.split(",")
    if len(paths) != len(names):
        raise ContractError("%d metrics files but %d names" % (len(paths), len(names)))
    rows = [(name, Metrics.read_metrics(path)) for name, path in zip(names, paths)]
    _write_text(plan.out, report_table(rows))


COMMANDS: Dict[str, Callable] = {
    "gen-data": _gen_data,
    "train": _train,
    "eval": _eval,
    "cluster": _cluster,
    "project": _project,
    "fuse": _fuse,
    "metrics": _metrics,
    "report": _report,
}


def run_pipeline(plan: argparse.Namespace) -> int:
    """Run one subcommand; returns the process exit status."""
    try:
        COMMANDS[plan.command](plan)
    except NumericError as err:
        _logger.error("%s: %s", type(err).__module__, err)
        return 2
    except ContractError as err:
        _logger.error("%s: %s", type(err).__module__, err)
        return 1
    except OSError as err:
        _logger.error("%s: %s", plan.command, err)
        return 1
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    try:
        plan = parse_cli(argv)
    except UsageError as err:
        print(err, file=sys.stderr)
        return 2
    if plan.debug:
        level = logging.DEBUG
    elif plan.quiet:
        level = logging.WARNING
    else:
        level = logging.INFO
    logging.basicConfig(level=level, format="%(name)s %(levelname)s: %(message)s")
    return run_pipeline(plan)
