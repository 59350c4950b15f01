"""CLI harness: a tiny end-to-end pipeline exercised through main(), plus the
documented exit-code contract (0 ok, 2 usage/config, 3 data, 1 internal)."""

import csv
import json
from pathlib import Path

import pytest

from scanpaths import cli
from scanpaths.data import (
    make_synthetic_dataset,
    reference_scanpaths,
    save_image,
    write_fixations,
)

TINY = [
    "--set", "dataset.n_train=24",
    "--set", "dataset.n_test=8",
    "--set", "dataset.image_size=16",
    "--set", "task.epochs=1",
    "--set", "task.width=4",
    "--set", "task.input_size=16",
    "--set", "attention.epochs=1",
    "--set", "attention.width=4",
    "--set", "attention.horizon=2",
    "--set", "attention.batch_size=8",
    "--set", "evaluation.length=4",
    "--set", "evaluation.max_k=2",
]

TEST_IDS = [f"synthetic-{i:04d}" for i in range(8)]


def run(*argv) -> int:
    return cli.main([str(a) for a in argv])


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.reader(fh))


def make_human_csv(path: Path) -> Path:
    # Same draw cmd_generate makes internally: one seeded pool, test = tail.
    samples = make_synthetic_dataset(32, seed=0, image_size=16)[24:]
    records = reference_scanpaths(samples, TEST_IDS, n_subjects=3, length=4, seed=1)
    rows = []
    for rec in records:
        for idx, (x, y) in enumerate(rec.fixations):
            rows.append((rec.image_id, rec.subject_id, idx, float(x), float(y)))
    return write_fixations(path, rows)


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    """train-task -> train-attention -> generate x4 -> evaluate, once."""
    out = tmp_path_factory.mktemp("cli_run")
    assert run("train-task", "--output-dir", out, *TINY) == 0
    task_ckpt = out / "task_classification.pt"
    assert run("train-attention", "--output-dir", out, "--task-checkpoint", task_ckpt, *TINY) == 0
    attn_ckpt = out / "attention.pt"
    for method in ("random", "center", "wta"):
        assert run("generate", "--output-dir", out, "--method", method, *TINY) == 0
    assert run("generate", "--output-dir", out, "--method", "attention",
               "--checkpoint", attn_ckpt, *TINY) == 0
    human = make_human_csv(out / "human.csv")
    assert run("evaluate", "--output-dir", out, "--human", human,
               *TINY,
               "--scanpaths",
               out / "scanpaths_random.csv", out / "scanpaths_center.csv",
               out / "scanpaths_wta.csv", out / "scanpaths_attention.csv") == 0
    return out


class TestTrainTask:
    def test_artifacts_written(self, pipeline):
        assert (pipeline / "task_classification.pt").is_file()
        log = read_rows(pipeline / "task_classification_log.csv")
        assert log[0] == ["metric", "epoch", "value"]
        assert log[1][0] == "train_loss"
        assert log[-1][0] == "val_accuracy"
        manifest = json.loads((pipeline / "manifest_train_task.json").read_text())
        assert manifest["command"] == "train-task"
        assert manifest["config"]["dataset"]["n_train"] == 24

    def test_classification_on_unlabelled_images_refused(self, tmp_path):
        rc = run("train-task", "--output-dir", tmp_path,
                 "--set", "dataset.kind=images", "--set", f"dataset.images_dir={tmp_path}")
        assert rc == 2


class TestTrainAttention:
    def test_artifacts_written(self, pipeline):
        assert (pipeline / "attention.pt").is_file()
        log = read_rows(pipeline / "attention_log.csv")
        assert log[0] == ["metric", "epoch", "value"]
        manifest = json.loads((pipeline / "manifest_train_attention.json").read_text())
        assert manifest["args"]["task_checkpoint"].endswith("task_classification.pt")

    def test_missing_checkpoint_is_usage_error(self, tmp_path):
        rc = run("train-attention", "--output-dir", tmp_path,
                 "--task-checkpoint", tmp_path / "absent.pt", *TINY)
        assert rc == 2

    def test_task_kind_mismatch_is_usage_error(self, pipeline, tmp_path):
        rc = run("train-attention", "--output-dir", tmp_path,
                 "--task-checkpoint", pipeline / "task_classification.pt",
                 *TINY, "--set", "task.kind=reconstruction")
        assert rc == 2


class TestGenerate:
    def test_one_file_per_method_with_canonical_schema(self, pipeline):
        for method in ("random", "center", "wta", "attention"):
            rows = read_rows(pipeline / f"scanpaths_{method}.csv")
            assert rows[0] == ["image_id", "subject_id", "fixation_index", "x_px", "y_px"]
            assert len(rows) == 1 + 8 * 4  # 8 test images, length 4
            assert {r[1] for r in rows[1:]} == {method}
            assert sorted({r[0] for r in rows[1:]}) == TEST_IDS

    def test_per_image_seeds_differ(self, pipeline):
        rows = read_rows(pipeline / "scanpaths_random.csv")[1:]
        first = {r[0]: (r[3], r[4]) for r in rows if r[2] == "0"}
        assert first[TEST_IDS[0]] != first[TEST_IDS[1]]

    def test_rerun_is_byte_identical(self, pipeline, tmp_path):
        assert run("generate", "--output-dir", tmp_path, "--method", "random", *TINY) == 0
        a = (pipeline / "scanpaths_random.csv").read_bytes()
        b = (tmp_path / "scanpaths_random.csv").read_bytes()
        assert a == b

    def test_manifest_feeds_back_as_config(self, tmp_path):
        first, second = tmp_path / "a", tmp_path / "b"
        assert run("generate", "--output-dir", first, "--method", "center", *TINY) == 0
        assert run("generate", "--config", first / "manifest_generate.json",
                   "--method", "center", "--output-dir", second) == 0
        assert (first / "scanpaths_center.csv").read_bytes() == \
            (second / "scanpaths_center.csv").read_bytes()

    def test_seed_flag_changes_output(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        assert run("generate", "--output-dir", a, "--method", "random", "--seed", 1, *TINY) == 0
        assert run("generate", "--output-dir", b, "--method", "random", "--seed", 2, *TINY) == 0
        assert (a / "scanpaths_random.csv").read_bytes() != (b / "scanpaths_random.csv").read_bytes()

    def test_method_name_relabels_the_file(self, tmp_path):
        assert run("generate", "--output-dir", tmp_path, "--method", "random",
                   "--method-name", "chance", *TINY) == 0
        rows = read_rows(tmp_path / "scanpaths_chance.csv")
        assert {r[1] for r in rows[1:]} == {"chance"}

    def test_attention_requires_existing_checkpoint(self, tmp_path):
        assert run("generate", "--output-dir", tmp_path, "--method", "attention", *TINY) == 2
        assert run("generate", "--output-dir", tmp_path, "--method", "attention",
                   "--checkpoint", tmp_path / "absent.pt", *TINY) == 2

    def test_unknown_method_rejected_by_parser(self, tmp_path, capsys):
        assert run("generate", "--output-dir", tmp_path, "--method", "saliency") == 2
        assert "invalid choice" in capsys.readouterr().err


class TestEvaluate:
    def test_per_image_and_summary_files(self, pipeline):
        per_image = read_rows(pipeline / "evaluation_per_image.csv")
        assert per_image[0] == ["image_id", "method", "metric", "aggregation", "value"]
        # 4 generated methods + the human baseline, 8 images, 2 metrics x 2 aggs.
        assert len(per_image) == 1 + 5 * 8 * 2 * 2
        methods = {r[1] for r in per_image[1:]}
        assert methods == {"random", "center", "wta", "attention", "human"}
        summary = read_rows(pipeline / "evaluation_summary.csv")
        assert summary[0] == ["metric", "aggregation", "attention", "center", "human", "random", "wta"]
        assert [r[:2] for r in summary[1:]] == [
            ["sed", "mean"], ["sed", "spp"], ["sbtde", "mean"], ["sbtde", "spp"]]

    def test_copy_of_a_human_subject_scores_zero_spp_sed(self, tmp_path, capsys):
        human = make_human_csv(tmp_path / "human.csv")
        rows = read_rows(human)
        copycat = [(r[0], "copycat", int(r[2]), float(r[3]), float(r[4]))
                   for r in rows[1:] if r[1] == "ref00"]
        write_fixations(tmp_path / "copy.csv", copycat)
        assert run("evaluate", "--output-dir", tmp_path, "--human", human,
                   "--scanpaths", tmp_path / "copy.csv", *TINY) == 0
        table = capsys.readouterr().out
        assert "copycat" in table and "human" in table
        per_image = read_rows(tmp_path / "evaluation_per_image.csv")
        spp_sed = [float(r[4]) for r in per_image[1:]
                   if r[1] == "copycat" and r[2] == "sed" and r[3] == "spp"]
        assert spp_sed == [0.0] * 8

    def test_disjoint_image_ids_is_data_error(self, tmp_path):
        human = make_human_csv(tmp_path / "human.csv")
        write_fixations(tmp_path / "foreign.csv", [("elsewhere", "m", 0, 1.0, 1.0)])
        rc = run("evaluate", "--output-dir", tmp_path, "--human", human,
                 "--scanpaths", tmp_path / "foreign.csv", *TINY)
        assert rc == 3

    def test_missing_human_file_is_usage_error(self, tmp_path):
        write_fixations(tmp_path / "gen.csv", [(TEST_IDS[0], "m", 0, 1.0, 1.0)])
        rc = run("evaluate", "--output-dir", tmp_path, "--human", tmp_path / "absent.csv",
                 "--scanpaths", tmp_path / "gen.csv", *TINY)
        assert rc == 2


class TestPlot:
    def test_three_panels_for_a_synthetic_stimulus(self, pipeline, tmp_path):
        rc = run("plot", "--output-dir", tmp_path, "--scanpaths", pipeline / "scanpaths_wta.csv",
                 "--image", TEST_IDS[0], *TINY)
        assert rc == 0
        for suffix in ("original", "mask", "perceived"):
            panel = tmp_path / f"{TEST_IDS[0]}_wta_{suffix}.png"
            assert panel.is_file() and panel.stat().st_size > 0
        manifest = json.loads((tmp_path / "manifest_plot.json").read_text())
        assert len(manifest["args"]["panels"]) == 3

    def test_image_file_path_instead_of_id(self, tmp_path):
        samples = make_synthetic_dataset(1, seed=5, image_size=16)
        save_image(tmp_path / "photo.png", samples[0].stimulus)
        write_fixations(tmp_path / "sp.csv", [
            ("photo", "m", 0, 4.0, 4.0), ("photo", "m", 1, 12.0, 12.0)])
        rc = run("plot", "--output-dir", tmp_path, "--scanpaths", tmp_path / "sp.csv",
                 "--image", tmp_path / "photo.png")
        assert rc == 0
        assert (tmp_path / "photo_m_mask.png").is_file()

    def test_method_flag_disambiguates(self, pipeline, tmp_path):
        merged = tmp_path / "merged.csv"
        a = read_rows(pipeline / "scanpaths_random.csv")
        b = read_rows(pipeline / "scanpaths_center.csv")
        rows = [(r[0], r[1], int(r[2]), float(r[3]), float(r[4])) for r in a[1:] + b[1:]]
        write_fixations(merged, rows)
        common = ["--scanpaths", merged, "--image", TEST_IDS[0], *TINY]
        assert run("plot", "--output-dir", tmp_path, *common) == 2  # ambiguous
        assert run("plot", "--output-dir", tmp_path, *common, "--method", "center") == 0

    def test_noncontiguous_fixation_index_is_usage_error(self, tmp_path):
        write_fixations(tmp_path / "gap.csv", [
            (TEST_IDS[0], "m", 0, 4.0, 4.0), (TEST_IDS[0], "m", 2, 8.0, 8.0)])
        rc = run("plot", "--output-dir", tmp_path, "--scanpaths", tmp_path / "gap.csv",
                 "--image", TEST_IDS[0], *TINY)
        assert rc == 2

    def test_out_of_bounds_fixation_is_data_error(self, tmp_path):
        write_fixations(tmp_path / "oob.csv", [(TEST_IDS[0], "m", 0, 40.0, 4.0)])
        rc = run("plot", "--output-dir", tmp_path, "--scanpaths", tmp_path / "oob.csv",
                 "--image", TEST_IDS[0], *TINY)
        assert rc == 3

    def test_unknown_stimulus_id_is_usage_error(self, tmp_path):
        write_fixations(tmp_path / "sp.csv", [("ghost", "m", 0, 4.0, 4.0)])
        rc = run("plot", "--output-dir", tmp_path, "--scanpaths", tmp_path / "sp.csv",
                 "--image", "ghost", *TINY)
        assert rc == 2


class TestExitCodes:
    def test_no_subcommand_is_usage_error(self, capsys):
        assert run() == 2
        capsys.readouterr()

    def test_version_exits_cleanly(self, capsys):
        assert run("--version") == 0
        assert "scanpaths" in capsys.readouterr().out

    def test_handler_exceptions_map_to_documented_codes(self, monkeypatch, capsys):
        from scanpaths.data import DataError

        cases = [
            (ZeroDivisionError("boom"), 1),
            (ValueError("bad"), 2),
            (DataError("corrupt"), 3),
        ]
        for exc, expected in cases:
            def explode(cfg, args, exc=exc):
                raise exc
            monkeypatch.setitem(cli.HANDLERS, "train-task", explode)
            assert run("train-task") == expected
        capsys.readouterr()

    def test_bad_override_is_usage_error(self, tmp_path, capsys):
        assert run("generate", "--output-dir", tmp_path, "--method", "random",
                   "--set", "dataset.bogus=1") == 2
        assert "config error" in capsys.readouterr().err
