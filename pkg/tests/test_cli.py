import json

import pytest
from click.testing import CliRunner

from wildsplit.cli import main


@pytest.fixture(scope="module")
def world_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("world")
    runner = CliRunner()
    res = runner.invoke(
        main,
        ["synth", "--out", str(out), "--seed", "1", "--datasets", "2",
         "--identities", "12"],
    )
    assert res.exit_code == 0, res.output
    return out


def run(args):
    return CliRunner().invoke(main, [str(a) for a in args])


class TestSynthCommand:
    def test_outputs_exist(self, world_dir):
        for name in ("metadata.csv", "embeddings.emb1", "truth.json"):
            assert (world_dir / name).exists()
        assert (world_dir / "world.manifest.json").exists()

    def test_bad_spec_exit_1(self, tmp_path):
        res = run(["synth", "--out", tmp_path / "w", "--sigma-img", "0.5",
                   "--sigma-enc", "0.1"])
        assert res.exit_code == 1
        assert "BadSpec" in res.output


class TestSplitCommand:
    def test_split_and_verify(self, world_dir, tmp_path):
        split = tmp_path / "split.csv"
        res = run(["split", "--metadata", world_dir / "metadata.csv",
                   "--embeddings", world_dir / "embeddings.emb1",
                   "--seed", "3", "--out", split])
        assert res.exit_code == 0, res.output
        assert split.exists()
        assert (tmp_path / "split.summary.json").exists()
        manifest = json.loads((tmp_path / "split.csv.manifest.json").read_text())
        assert manifest["command"] == "split"
        assert manifest["resolved_config"]["seed"] == 3
        res = run(["verify", "--metadata", world_dir / "metadata.csv",
                   "--embeddings", world_dir / "embeddings.emb1",
                   "--split", split])
        assert res.exit_code == 0, res.output

    def test_byte_identical_across_runs_and_threads(self, world_dir, tmp_path):
        outs = []
        for name, threads in [("a.csv", "1"), ("b.csv", "1"), ("c.csv", "4")]:
            p = tmp_path / name
            res = run(["split", "--metadata", world_dir / "metadata.csv",
                       "--embeddings", world_dir / "embeddings.emb1",
                       "--seed", "3", "--threads", threads, "--out", p])
            assert res.exit_code == 0, res.output
            outs.append(p.read_bytes())
        assert outs[0] == outs[1] == outs[2]

    def test_row_mismatch_exit_1(self, world_dir, tmp_path):
        bad_meta = tmp_path / "bad.csv"
        lines = (world_dir / "metadata.csv").read_text().splitlines()
        bad_meta.write_text("\n".join(lines[:-1]) + "\n")
        res = run(["split", "--metadata", bad_meta,
                   "--embeddings", world_dir / "embeddings.emb1",
                   "--out", tmp_path / "s.csv"])
        assert res.exit_code == 1
        assert "RowMismatch" in res.output


class TestVerifyCommand:
    def test_random_split_leaks(self, world_dir, tmp_path):
        split = tmp_path / "split.csv"
        run(["split", "--metadata", world_dir / "metadata.csv",
             "--embeddings", world_dir / "embeddings.emb1",
             "--seed", "3", "--out", split])
        rnd = tmp_path / "rnd.csv"
        res = run(["random-split", "--metadata", world_dir / "metadata.csv",
                   "--split", split, "--seed", "4", "--out", rnd])
        assert res.exit_code == 0, res.output
        res = run(["verify", "--metadata", world_dir / "metadata.csv",
                   "--embeddings", world_dir / "embeddings.emb1",
                   "--split", rnd])
        report = json.loads(res.output)
        assert res.exit_code == 1
        assert report["similarity_leaks"] > 0


class TestOtherCommands:
    def test_cluster(self, world_dir, tmp_path):
        out = tmp_path / "clusters.csv"
        res = run(["cluster", "--metadata", world_dir / "metadata.csv",
                   "--embeddings", world_dir / "embeddings.emb1",
                   "--theta", "0.95", "--out", out])
        assert res.exit_code == 0, res.output
        assert out.read_text().splitlines()[0] == "image_id,dataset,identity,cluster_id"

    def test_sweep(self, world_dir, tmp_path):
        out = tmp_path / "sweep.csv"
        res = run(["sweep", "--metadata", world_dir / "metadata.csv",
                   "--embeddings", world_dir / "embeddings.emb1",
                   "--theta-min", "0.9", "--theta-max", "1.0",
                   "--theta-step", "0.01", "--out", out])
        assert res.exit_code == 0, res.output
        lines = out.read_text().splitlines()
        assert lines[0] == "theta,tp,fp"
        assert len(lines) == 12

    def test_quality(self, world_dir, tmp_path):
        out = tmp_path / "q.json"
        res = run(["quality", "--metadata", world_dir / "metadata.csv",
                   "--embeddings", world_dir / "embeddings.emb1",
                   "--dataset", "synth00", "--theta", "0.95", "--out", out])
        assert res.exit_code == 0, res.output
        body = json.loads(out.read_text())
        assert body["tp"] is not None  # synth00 is timestamped

    def test_eval_deterministic(self, world_dir, tmp_path):
        split = tmp_path / "split.csv"
        run(["split", "--metadata", world_dir / "metadata.csv",
             "--embeddings", world_dir / "embeddings.emb1",
             "--seed", "3", "--out", split])
        bodies = []
        for name in ("r1.json", "r2.json"):
            out = tmp_path / name
            res = run(["eval", "--metadata", world_dir / "metadata.csv",
                       "--embeddings", world_dir / "embeddings.emb1",
                       "--split", split, "--scorer", "knn",
                       "--t-new", "0.9", "--out", out])
            assert res.exit_code == 0, res.output
            bodies.append(out.read_bytes())
        assert bodies[0] == bodies[1]

    def test_stats(self, world_dir, tmp_path):
        split = tmp_path / "split.csv"
        run(["split", "--metadata", world_dir / "metadata.csv",
             "--embeddings", world_dir / "embeddings.emb1",
             "--seed", "3", "--out", split])
        out = tmp_path / "stats.json"
        res = run(["stats", "--metadata", world_dir / "metadata.csv",
                   "--split", split, "--out", out])
        assert res.exit_code == 0, res.output
        assert "train" in json.loads(out.read_text())

    def test_unknown_flag_exit_2(self):
        res = run(["split", "--frobnicate"])
        assert res.exit_code == 2
