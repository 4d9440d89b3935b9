import numpy as np
import pytest

import gnnsurrogate as gs
from gnnsurrogate.cli import cli_main

GEN_INI = """\
[synthetic]
seed = 5
count = 8
min_nodes = 5
max_nodes = 9
family = chain
"""

TRAIN_INI = """\
[model]
encoding = airfoil
task = node_level
latent_size = 4
steps = 2
depth = 2
width = 5
graph_output_size = 3
node_output_size = 1
target_mode = zscore

[training]
epochs = 3
batch_size = 4
initial_lr = 5e-4
seed = 1
"""


@pytest.fixture
def workspace(tmp_path):
    gen_cfg = tmp_path / "gen.ini"
    gen_cfg.write_text(GEN_INI)
    train_cfg = tmp_path / "train.ini"
    train_cfg.write_text(TRAIN_INI)
    data = tmp_path / "data.jsonl"
    assert cli_main(["gen", "--config", str(gen_cfg), "--out", str(data)]) == 0
    return tmp_path, train_cfg, data


def train(tmp_path, train_cfg, data, name="m.ckpt", extra=()):
    out = tmp_path / name
    rc = cli_main(["train", "--config", str(train_cfg), "--data", str(data),
                   "--out", str(out), *extra])
    assert rc == 0
    return out


class TestGen:
    def test_deterministic_files(self, tmp_path):
        cfg = tmp_path / "gen.ini"
        cfg.write_text(GEN_INI)
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        assert cli_main(["gen", "--config", str(cfg), "--out", str(a)]) == 0
        assert cli_main(["gen", "--config", str(cfg), "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_missing_config_fails(self, tmp_path):
        assert cli_main(["gen", "--config", str(tmp_path / "nope.ini"),
                         "--out", str(tmp_path / "o")]) != 0


class TestTrainEval:
    def test_train_writes_checkpoint_and_log(self, workspace):
        tmp_path, train_cfg, data = workspace
        out = train(tmp_path, train_cfg, data)
        assert out.exists()
        log_lines = (tmp_path / "m.ckpt.log").read_text().strip().splitlines()
        assert len(log_lines) == 3

    def test_eval_prints_report_and_csv(self, workspace, capsys):
        tmp_path, train_cfg, data = workspace
        out = train(tmp_path, train_cfg, data)
        csv = tmp_path / "per_graph.csv"
        assert cli_main(["eval", "--ckpt", str(out), "--data", str(data),
                         "--csv", str(csv)]) == 0
        stdout = capsys.readouterr().out
        assert "%" in stdout
        rows = csv.read_text().strip().splitlines()
        assert rows[0] == "graph_id,num_nodes,eps_r_percent"
        assert len(rows) == 9

    def test_resume_continues(self, workspace):
        tmp_path, train_cfg, data = workspace
        out = train(tmp_path, train_cfg, data)
        out2 = tmp_path / "m2.ckpt"
        assert cli_main(["train", "--config", str(train_cfg), "--data", str(data),
                         "--out", str(out2), "--resume", str(out)]) == 0
        log_lines = (tmp_path / "m2.ckpt.log").read_text().strip().splitlines()
        import json
        assert json.loads(log_lines[0])["epoch"] == 3  # continues the epoch count

    def test_determinism_across_runs(self, workspace):
        tmp_path, train_cfg, data = workspace
        a = train(tmp_path, train_cfg, data, "a.ckpt")
        b = train(tmp_path, train_cfg, data, "b.ckpt")
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "a.ckpt.log").read_bytes() == (tmp_path / "b.ckpt.log").read_bytes()

    def test_graph_level_training(self, workspace):
        tmp_path, train_cfg, data = workspace
        cfg = tmp_path / "train_g.ini"
        cfg.write_text(TRAIN_INI.replace("task = node_level", "task = graph_level")
                       .replace("graph_output_size = 3", "graph_output_size = 1"))
        out = train(tmp_path, cfg, data, "g.ckpt")
        assert cli_main(["eval", "--ckpt", str(out), "--data", str(data)]) == 0


class TestPredictInspect:
    def test_predict_node_csv(self, workspace, capsys):
        tmp_path, train_cfg, data = workspace
        out = train(tmp_path, train_cfg, data)
        capsys.readouterr()  # drop the training chatter
        assert cli_main(["predict", "--ckpt", str(out), "--data", str(data),
                         "--index", "0"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "node,prediction"
        recs = gs.read_dataset(data)
        assert len(lines) == 1 + recs[0].positions.shape[0]

    def test_predict_bad_index_fails(self, workspace):
        tmp_path, train_cfg, data = workspace
        out = train(tmp_path, train_cfg, data)
        assert cli_main(["predict", "--ckpt", str(out), "--data", str(data),
                         "--index", "99"]) != 0

    def test_inspect_dataset_reports_node_range(self, workspace, capsys):
        tmp_path, train_cfg, data = workspace
        assert cli_main(["inspect", "--data", str(data)]) == 0
        out = capsys.readouterr().out
        recs = gs.read_dataset(data)
        counts = [r.positions.shape[0] for r in recs]
        assert f"{min(counts)}–{max(counts)} nodes" in out

    def test_inspect_checkpoint(self, workspace, capsys):
        tmp_path, train_cfg, data = workspace
        out = train(tmp_path, train_cfg, data)
        assert cli_main(["inspect", "--ckpt", str(out)]) == 0
        text = capsys.readouterr().out
        assert "node_level" in text and "latent 4" in text

    def test_inspect_without_arguments_fails(self):
        assert cli_main(["inspect"]) != 0
