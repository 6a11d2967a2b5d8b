"""Test the command-line entry point and the full pipeline."""
import os

import pandas as pd
import pytest

import sasv
from sasv import Cli
from sasv.Autograd import NumericError
from sasv.Cli import UsageError, main, parse_cli
from sasv.Metrics import read_metrics, read_scores
from sasv.Protocol import parse_trials

TINY_CONFIG = """\
n_speakers = 3
utts_per_speaker_bonafide = 6
utts_per_attack_per_speaker = 1
asv_dim = 8
raw_dim = 8
n_dev_speakers = 2
n_eval_speakers = 2
seed = 2
epochs = 1
batch_size = 8
embed_dim = 8
raw_hidden = 8
"""


def test_parse_eval():
    plan = parse_cli(["eval", "--ckpt", "m.ckpt", "--data", "d", "--trials", "t.txt", "--out", "o.json"])
    assert plan.command == "eval"
    assert plan.ckpt == "m.ckpt"
    assert plan.scorer == "sasv"
    assert plan.fusion_weight == 1.0
    assert plan.threads == 1
    assert plan.scores_out is None


def test_parse_options():
    plan = parse_cli(["-q", "cluster", "--ckpt", "m", "--data", "d", "--k", "3", "--out", "c.csv"])
    assert plan.quiet
    assert plan.k == 3
    assert plan.split == "eval"


@pytest.mark.parametrize(
    "argv",
    [
        [],
        ["eval", "--data", "d", "--trials", "t", "--out", "o"],
        ["eval", "--ckpt", "m", "--data", "d", "--trials", "t", "--out", "o", "--scorer", "fused"],
        ["cluster", "--ckpt", "m", "--data", "d", "--k", "three", "--out", "c"],
        ["-d", "-q", "report", "--metrics", "a", "--names", "b", "--out", "c"],
        ["bogus"],
    ],
)
def test_usage_errors(argv):
    with pytest.raises(UsageError):
        parse_cli(argv)


def test_usage_exit_status(capsys):
    assert main(["eval", "--data", "d", "--trials", "t", "--out", "o"]) == 2
    assert "--ckpt" in capsys.readouterr().err


def test_version(capsys):
    with pytest.raises(SystemExit) as err:
        main(["--version"])
    assert err.value.code == 0
    assert sasv.__version__ in capsys.readouterr().out


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """Generate data, train a checkpoint and evaluate it through the CLI."""
    root = tmp_path_factory.mktemp("run")
    config = root / "run.cfg"
    config.write_text(TINY_CONFIG)
    paths = {
        "config": str(config),
        "data": str(root / "data"),
        "ckpt": str(root / "model.ckpt"),
        "log": str(root / "train.log"),
        "metrics": str(root / "metrics.json"),
        "scores": str(root / "scores.txt"),
        "asv": str(root / "asv.txt"),
        "cm": str(root / "cm.txt"),
        "root": root,
    }
    assert main(["-q", "gen-data", "--config", paths["config"], "--out", paths["data"]]) == 0
    assert main(
        ["-q", "train", "--config", paths["config"], "--data", paths["data"],
         "--out", paths["ckpt"], "--log", paths["log"]]
    ) == 0
    assert main(
        ["-q", "eval", "--ckpt", paths["ckpt"], "--data", paths["data"],
         "--trials", os.path.join(paths["data"], "trials_eval.txt"), "--out", paths["metrics"],
         "--scores-out", paths["scores"], "--asv-scores-out", paths["asv"],
         "--cm-scores-out", paths["cm"]]
    ) == 0
    return paths


def test_pipeline_outputs(pipeline):
    assert os.path.exists(os.path.join(pipeline["data"], "manifest.txt"))
    log = open(pipeline["log"]).read().splitlines()
    assert log[0].split()[0] == "0"
    assert all(len(line.split()) == 7 for line in log)
    assert 0.0 <= read_metrics(pipeline["metrics"]).sasv_eer <= 1.0
    trials = parse_trials(os.path.join(pipeline["data"], "trials_eval.txt"))
    scores = read_scores(pipeline["scores"])
    assert len(scores) == len(trials)
    assert len(read_scores(pipeline["asv"])) == len(trials)
    assert len(read_scores(pipeline["cm"])) == len(trials)


def test_metrics_of_score_file(pipeline, capsys):
    out = str(pipeline["root"] / "metrics_again.json")
    trials = os.path.join(pipeline["data"], "trials_eval.txt")
    assert main(["-q", "metrics", "--scores", pipeline["scores"], "--trials", trials, "--out", out]) == 0
    again = read_metrics(out)
    first = read_metrics(pipeline["metrics"])
    assert again.sasv_eer == pytest.approx(first.sasv_eer, abs=1e-6)
    assert again.sv_eer == pytest.approx(first.sv_eer, abs=1e-6)
    assert again.spf_eer == pytest.approx(first.spf_eer, abs=1e-6)
    assert "SASV-EER" in capsys.readouterr().out


def test_fuse_and_report(pipeline):
    root = pipeline["root"]
    fused = str(root / "fused.txt")
    assert main(["-q", "fuse", "--asv-scores", pipeline["asv"], "--cm-scores", pipeline["cm"], "--out", fused]) == 0
    expected = read_scores(pipeline["asv"]) + read_scores(pipeline["cm"])
    assert (read_scores(fused) - expected).abs().max() < 1e-6
    trials = os.path.join(pipeline["data"], "trials_eval.txt")
    fused_metrics = str(root / "fused.json")
    assert main(["-q", "metrics", "--scores", fused, "--trials", trials, "--out", fused_metrics]) == 0
    table = str(root / "table.md")
    assert main(
        ["-q", "report", "--metrics", pipeline["metrics"] + "," + fused_metrics,
         "--names", "Full,Score-sum", "--out", table]
    ) == 0
    lines = open(table).read().splitlines()
    assert lines[0] == "| Configuration | SASV | SV | SPF |"
    assert lines[2].startswith("| Full | ")
    assert lines[3].startswith("| Score-sum | ")
    assert main(
        ["-q", "report", "--metrics", pipeline["metrics"], "--names", "a,b", "--out", table]
    ) == 1


def test_cluster_and_project(pipeline):
    root = pipeline["root"]
    clusters = str(root / "clusters.csv")
    assert main(
        ["-q", "cluster", "--ckpt", pipeline["ckpt"], "--data", pipeline["data"], "--k", "3", "--out", clusters]
    ) == 0
    frame = pd.read_csv(clusters)
    assert sorted(frame["cluster"].unique()) == [0, 1, 2]
    projection = str(root / "projection.csv")
    assert main(
        ["-q", "project", "--ckpt", pipeline["ckpt"], "--data", pipeline["data"], "--out", projection]
    ) == 0
    frame = pd.read_csv(projection)
    assert list(frame.columns) == ["id", "speaker", "source", "x", "y"]
    assert main(
        ["-q", "cluster", "--ckpt", pipeline["ckpt"], "--data", pipeline["data"],
         "--k", "100000", "--out", str(root / "bad.csv")]
    ) == 1
    assert not os.path.exists(str(root / "bad.csv"))


def test_dimension_mismatch(pipeline, tmp_path):
    config = tmp_path / "other.cfg"
    config.write_text(TINY_CONFIG.replace("asv_dim = 8", "asv_dim = 6"))
    other = str(tmp_path / "other")
    assert main(["-q", "gen-data", "--config", str(config), "--out", other]) == 0
    out = str(tmp_path / "m.json")
    assert main(
        ["-q", "eval", "--ckpt", pipeline["ckpt"], "--data", other,
         "--trials", os.path.join(other, "trials_eval.txt"), "--out", out]
    ) == 1
    assert not os.path.exists(out)


def test_missing_and_corrupt_inputs(pipeline, tmp_path):
    trials = os.path.join(pipeline["data"], "trials_eval.txt")
    out = str(tmp_path / "m.json")
    assert main(
        ["-q", "eval", "--ckpt", str(tmp_path / "none.ckpt"), "--data", pipeline["data"],
         "--trials", trials, "--out", out]
    ) == 1
    corrupt = tmp_path / "bad.ckpt"
    corrupt.write_bytes(open(pipeline["ckpt"], "rb").read()[:100])
    assert main(
        ["-q", "eval", "--ckpt", str(corrupt), "--data", pipeline["data"], "--trials", trials, "--out", out]
    ) == 1
    assert not os.path.exists(out)


def test_unwritable_output(pipeline, tmp_path):
    trials = os.path.join(pipeline["data"], "trials_eval.txt")
    out = str(tmp_path / "missing_dir" / "m.json")
    assert main(
        ["-q", "eval", "--ckpt", pipeline["ckpt"], "--data", pipeline["data"], "--trials", trials, "--out", out]
    ) == 1
    assert not os.path.exists(os.path.dirname(out))


def test_numeric_failure_exit_status(pipeline, tmp_path, monkeypatch):
    def diverging(dataset, cfg):
        raise NumericError("step 3: non-finite value produced by 'exp' node", "exp")

    monkeypatch.setattr(Cli, "train", diverging)
    out = str(tmp_path / "m.ckpt")
    assert main(
        ["-q", "train", "--config", pipeline["config"], "--data", pipeline["data"], "--out", out]
    ) == 2
    assert not os.path.exists(out)


def test_training_is_reproducible_through_cli(pipeline, tmp_path):
    again = str(tmp_path / "again.ckpt")
    log = str(tmp_path / "again.log")
    assert main(
        ["-q", "train", "--config", pipeline["config"], "--data", pipeline["data"],
         "--out", again, "--log", log]
    ) == 0
    assert open(again, "rb").read() == open(pipeline["ckpt"], "rb").read()
    assert open(log).read() == open(pipeline["log"]).read()
