"""Command-line behaviour: generation, evaluation, smoke runs, determinism."""

import json
from pathlib import Path

import numpy as np

from spotshift.cli import main
from spotshift.imgio import read_gray, write_gray_map

DATA = Path(__file__).parent / "data"

def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err

def dir_snapshot(path: Path) -> dict[str, bytes]:
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}

class TestGenerate:
    def test_all_zero_mask(self, tmp_path, capsys):
        in_dir = tmp_path / "in"
        in_dir.mkdir()
        write_gray_map(in_dir / "empty.png", np.zeros((9, 9)))
        out_dir = tmp_path / "out"
        code, out, err = run(capsys, "generate", "--input", str(in_dir), "--output", str(out_dir))
        assert code == 0
        assert read_gray(out_dir / "empty.png").sum() == 0
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["images"][0]["foreground_pixels"] == 0

    def test_outputs_match_oracle_goldens(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code, _, _ = run(
            capsys,
            "generate",
            "--input", str(DATA / "masks"),
            "--output", str(out_dir),
            "--max-radius", "4",
        )
        assert code == 0
        for golden in sorted((DATA / "golden_shadows").glob("*.png")):
            got = read_gray(out_dir / golden.name)
            want = read_gray(golden)
            assert np.array_equal(got, want), golden.name

    def test_two_runs_byte_identical(self, tmp_path, capsys):
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        for out in (out1, out2):
            code, _, _ = run(
                capsys, "generate", "--input", str(DATA / "masks"), "--output", str(out)
            )
            assert code == 0
        assert dir_snapshot(out1) == dir_snapshot(out2)

    def test_threads_do_not_change_output(self, tmp_path, capsys):
        out1 = tmp_path / "a"
        out2 = tmp_path / "b"
        run(capsys, "generate", "--input", str(DATA / "masks"), "--output", str(out1))
        run(capsys, "generate", "--input", str(DATA / "masks"), "--output", str(out2), "--threads", "4")
        assert dir_snapshot(out1) == dir_snapshot(out2)

    def test_empty_input_dir_fails(self, tmp_path, capsys):
        in_dir = tmp_path / "in"
        in_dir.mkdir()
        out_dir = tmp_path / "out"
        code, _, err = run(capsys, "generate", "--input", str(in_dir), "--output", str(out_dir))
        assert code == 1
        assert "no PNG masks" in err

    def test_unreadable_file_skipped_with_nonzero_exit(self, tmp_path, capsys):
        in_dir = tmp_path / "in"
        in_dir.mkdir()
        write_gray_map(in_dir / "ok.png", np.zeros((6, 6)))
        (in_dir / "broken.png").write_bytes(b"junk")
        out_dir = tmp_path / "out"
        code, _, err = run(capsys, "generate", "--input", str(in_dir), "--output", str(out_dir))
        assert code == 1
        assert "broken.png" in err
        assert (out_dir / "ok.png").exists()
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["skipped"][0]["name"] == "broken.png"

    def test_config_file_and_flag_precedence(self, tmp_path, capsys):
        cfg = tmp_path / "dilation.cfg"
        cfg.write_text("max_radius = 2\nspotlights = tl\n")
        in_dir = tmp_path / "in"
        in_dir.mkdir()
        mask = np.zeros((16, 16))
        mask[4:12, 4:12] = 1
        write_gray_map(in_dir / "m.png", mask)
        out_dir = tmp_path / "out"
        code, _, _ = run(
            capsys,
            "generate",
            "--input", str(in_dir),
            "--output", str(out_dir),
            "--config", str(cfg),
            "--max-radius", "3",
        )
        assert code == 0
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["config"]["max_radius"] == 3  # flag wins over file
        assert manifest["config"]["spotlights"] == ["tl"]

    def test_env_var_override(self, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("SPOTSHIFT_MAX_RADIUS", "5")
        in_dir = tmp_path / "in"
        in_dir.mkdir()
        write_gray_map(in_dir / "m.png", np.zeros((5, 5)))
        out_dir = tmp_path / "out"
        code, _, _ = run(capsys, "generate", "--input", str(in_dir), "--output", str(out_dir))
        assert code == 0
        manifest = json.loads((out_dir / "manifest.json").read_text())
        assert manifest["config"]["max_radius"] == 5

    def test_manifest_contains_spotlights_and_radii(self, tmp_path, capsys):
        out_dir = tmp_path / "out"
        run(capsys, "generate", "--input", str(DATA / "masks"), "--output", str(out_dir))
        manifest = json.loads((out_dir / "manifest.json").read_text())
        entry = manifest["images"][0]
        corners = [s["corner"] for s in entry["spotlights"]]
        assert corners == ["tl", "br"]
        first = entry["spotlights"][0]
        assert {"x", "y", "edge_pixels", "radius_min", "radius_max", "radius_mean"} <= set(first)

class TestEvaluate:
    def make_dirs(self, tmp_path, n=3):
        pred_dir = tmp_path / "pred"
        gt_dir = tmp_path / "gt"
        pred_dir.mkdir()
        gt_dir.mkdir()
        rng = np.random.default_rng(1)
        for i in range(n):
            gt = (rng.random((12, 12)) < 0.5).astype(np.float64)
            write_gray_map(gt_dir / f"i{i}.png", gt)
            write_gray_map(pred_dir / f"i{i}.png", gt)
        return pred_dir, gt_dir

    def test_identical_dirs_score_perfectly(self, tmp_path, capsys):
        pred_dir, gt_dir = self.make_dirs(tmp_path)
        report = tmp_path / "report.csv"
        code, out, _ = run(
            capsys, "evaluate", "--pred", str(pred_dir), "--gt", str(gt_dir), "--output", str(report)
        )
        assert code == 0
        assert "s_measure=1.000000" in out and "mae=0.000000" in out
        lines = report.read_text().strip().split("\n")
        assert lines[-1].startswith("aggregate,1,1,1,0,")

    def test_json_format(self, tmp_path, capsys):
        pred_dir, gt_dir = self.make_dirs(tmp_path)
        report = tmp_path / "report.json"
        code, _, _ = run(
            capsys,
            "evaluate",
            "--pred", str(pred_dir),
            "--gt", str(gt_dir),
            "--output", str(report),
            "--format", "json",
        )
        assert code == 0
        payload = json.loads(report.read_text())
        assert payload["aggregate"]["count"] == 3

    def test_disjoint_names_fail(self, tmp_path, capsys):
        pred_dir = tmp_path / "pred"
        gt_dir = tmp_path / "gt"
        pred_dir.mkdir()
        gt_dir.mkdir()
        write_gray_map(pred_dir / "a.png", np.zeros((4, 4)))
        write_gray_map(gt_dir / "b.png", np.zeros((4, 4)))
        code, _, err = run(
            capsys, "evaluate", "--pred", str(pred_dir), "--gt", str(gt_dir),
            "--output", str(tmp_path / "r.csv"),
        )
        assert code == 1
        assert "no paired images" in err

    def test_size_mismatch_gives_nonzero_exit(self, tmp_path, capsys):
        pred_dir, gt_dir = self.make_dirs(tmp_path, n=2)
        write_gray_map(pred_dir / "bad.png", np.zeros((4, 4)))
        write_gray_map(gt_dir / "bad.png", np.zeros((6, 6)))
        code, _, err = run(
            capsys, "evaluate", "--pred", str(pred_dir), "--gt", str(gt_dir),
            "--output", str(tmp_path / "r.csv"),
        )
        assert code == 1
        assert "skipped bad" in err

class TestSmoke:
    def test_default_run_prints_stages(self, capsys):
        code, out, _ = run(capsys, "smoke")
        assert code == 0
        lines = out.strip().split("\n")
        names = [line.split()[0] for line in lines]
        assert names == ["shadow_feature", "pred_shadow", "stage2", "stage3", "stage4", "pred_mask"]
        assert "pred_mask 32x32" in out
        assert all("sha256=" in line for line in lines)

    def test_checksums_stable_across_runs(self, capsys):
        _, out1, _ = run(capsys, "smoke", "--seed", "9")
        _, out2, _ = run(capsys, "smoke", "--seed", "9")
        assert out1 == out2

    def test_seed_changes_checksums(self, capsys):
        _, out1, _ = run(capsys, "smoke", "--seed", "1")
        _, out2, _ = run(capsys, "smoke", "--seed", "2")
        assert out1 != out2

    def test_golden_checksums(self, capsys):
        golden = json.loads((DATA / "smoke_checksums.json").read_text())
        code, out, _ = run(capsys, "smoke", "--seed", str(golden["seed"]))
        assert code == 0
        assert out == golden["stdout"]

    def test_indivisible_heads_fail_naming_stage(self, capsys):
        code, _, err = run(capsys, "smoke", "--channels", "30", "--heads", "4")
        assert code == 1
        assert "attention stage 2" in err
        assert "not divisible" in err
