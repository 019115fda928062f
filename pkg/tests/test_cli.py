"""Command-line interface: simulate, invert, eval, selfcheck.

Every test drives rsinvert.cli.main(argv) in process and checks exit codes,
emitted files, and report contents. Exit conventions: 0 on success, 1 for
toolkit validation failures (bad inputs of the right shape), 2 for
configuration, file format, and OS errors, matching argparse's own usage
errors. A static scene pins the identity RS == GS; a moving scene feeds the
invert and eval round trips.
"""

from __future__ import annotations

import json

import numpy as np
import pytest

from rsinvert import read_png, write_png
from rsinvert.cli import main

MOVING_CFG = """
width = 120
height = 96
focal = 110.0
gamma = 1.0
v = [0.06, 0.02, 0.0]
omega = [0.0, 0.0, 0.001]
texture_seed = 5
gs_scanlines = [0.0, 48.0]

[depth_ramp]
z0 = 2.0
dz_dx = 0.0008
"""

STATIC_CFG = """
width = 64
height = 48
focal = 90.0
gamma = 0.8
v = [0.0, 0.0, 0.0]
omega = [0.0, 0.0, 0.0]
plane_depth = 2.0
texture_seed = 9
gs_scanlines = [0.0]
"""


@pytest.fixture(scope="module")
def moving_cfg(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "moving.toml"
    path.write_text(MOVING_CFG)
    return path


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory, moving_cfg):
    out = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--scene", str(moving_cfg), "--out", str(out)]) == 0
    return out


@pytest.fixture(scope="module")
def inv_dir(tmp_path_factory, sim_dir):
    out = tmp_path_factory.mktemp("inv")
    code = main([
        "invert",
        "--rs1", str(sim_dir / "rs_1.png"),
        "--rs2", str(sim_dir / "rs_2.png"),
        "--gamma", "1.0",
        "--scanlines", "0,48",
        "--flow", "files",
        "--flow-fwd", str(sim_dir / "flow_fwd.flo"),
        "--flow-bwd", str(sim_dir / "flow_bwd.flo"),
        "--out", str(out),
    ])
    assert code == 0
    return out


def _masked_psnr(pred: np.ndarray, gt: np.ndarray, mask: np.ndarray) -> float:
    err = (pred.astype(np.float64) - gt.astype(np.float64))[mask]
    mse = float(np.mean(err * err))
    if mse == 0.0:
        return 99.0
    return 10.0 * np.log10(255.0**2 / mse)


class TestSimulateCommand:
    def test_manifest_lists_every_emitted_file(self, sim_dir):
        manifest = json.loads((sim_dir / "manifest.json").read_text())
        assert manifest["gamma"] == 1.0
        assert manifest["width"] == 120
        assert manifest["height"] == 96
        assert manifest["frames"] == 2
        assert manifest["scanlines"] == [0.0, 48.0]
        assert manifest["files"]["rs"] == ["rs_1.png", "rs_2.png"]
        assert manifest["files"]["flows"] == ["flow_fwd.flo", "flow_bwd.flo"]
        assert manifest["files"]["depths"] == [
            "depth_rs_1.pfm", "depth_rs_2.pfm",
        ]
        assert sorted(manifest["files"]["gs"]) == [
            "gs_1_0000.00.png", "gs_1_0048.00.png",
            "gs_2_0000.00.png", "gs_2_0048.00.png",
        ]
        assert len(manifest["files"]["occlusion"]) == 4
        for group in manifest["files"].values():
            for name in group:
                assert (sim_dir / name).is_file()

    def test_repeat_run_is_bit_identical(self, tmp_path, moving_cfg, sim_dir):
        out = tmp_path / "again"
        assert main(["simulate", "--scene", str(moving_cfg),
                     "--out", str(out)]) == 0
        for name in ("manifest.json", "rs_1.png", "flow_fwd.flo",
                     "gs_2_0048.00.png"):
            assert (out / name).read_bytes() == (sim_dir / name).read_bytes()

    def test_static_scene_rs_equals_gs(self, tmp_path):
        cfg = tmp_path / "static.toml"
        cfg.write_text(STATIC_CFG)
        out = tmp_path / "static"
        assert main(["simulate", "--scene", str(cfg), "--out", str(out)]) == 0
        for frame in (1, 2):
            rs = read_png(out / f"rs_{frame}.png")
            gs = read_png(out / f"gs_{frame}_0000.00.png")
            np.testing.assert_array_equal(rs, gs)

    def test_missing_scene_file_exits_2(self, tmp_path, capsys):
        code = main(["simulate", "--scene", str(tmp_path / "nope.toml"),
                     "--out", str(tmp_path / "o")])
        assert code == 2
        assert "error:" in capsys.readouterr().err

    def test_invalid_gamma_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "bad.toml"
        cfg.write_text(MOVING_CFG.replace("gamma = 1.0", "gamma = 1.5"))
        code = main(["simulate", "--scene", str(cfg),
                     "--out", str(tmp_path / "o")])
        assert code == 2
        assert "gamma" in capsys.readouterr().err


class TestInvertCommand:
    def test_outputs_named_by_scanline_tag(self, inv_dir):
        for tag in ("0000.00", "0048.00"):
            for stem in ("gs_1", "mask_1", "gs_2", "mask_2"):
                assert (inv_dir / f"{stem}_{tag}.png").is_file()

    def test_reconstruction_matches_simulated_gs(self, sim_dir, inv_dir):
        for frame in (1, 2):
            pred = read_png(inv_dir / f"gs_{frame}_0048.00.png")
            gt = read_png(sim_dir / f"gs_{frame}_0048.00.png")
            mask = read_png(inv_dir / f"mask_{frame}_0048.00.png") > 127
            assert mask.mean() > 0.9
            assert _masked_psnr(pred, gt, mask) >= 35.0

    def test_gt_flow_route_agrees_with_flow_files(
        self, tmp_path, sim_dir, moving_cfg, inv_dir
    ):
        # .flo storage rounds the flow to float32; after splatting and
        # quantization the two routes may differ by at most one gray level.
        out = tmp_path / "gtflow"
        code = main([
            "invert",
            "--rs1", str(sim_dir / "rs_1.png"),
            "--rs2", str(sim_dir / "rs_2.png"),
            "--gamma", "1.0",
            "--scanlines", "0,48",
            "--flow", "gt",
            "--scene", str(moving_cfg),
            "--out", str(out),
        ])
        assert code == 0
        for name in ("gs_1_0048.00.png", "gs_2_0000.00.png"):
            a = read_png(out / name).astype(np.int64)
            b = read_png(inv_dir / name).astype(np.int64)
            assert np.abs(a - b).max() <= 1

    def test_acceleration_with_zero_phi_is_bitwise_velocity(
        self, tmp_path, sim_dir, inv_dir
    ):
        out = tmp_path / "acc0"
        code = main([
            "invert",
            "--rs1", str(sim_dir / "rs_1.png"),
            "--rs2", str(sim_dir / "rs_2.png"),
            "--gamma", "1.0",
            "--scanlines", "0,48",
            "--flow", "files",
            "--flow-fwd", str(sim_dir / "flow_fwd.flo"),
            "--flow-bwd", str(sim_dir / "flow_bwd.flo"),
            "--model", "acceleration",
            "--phi1", "0.0",
            "--out", str(out),
        ])
        assert code == 0
        for path in sorted(inv_dir.glob("*.png")):
            assert (out / path.name).read_bytes() == path.read_bytes()

    def test_depth_weighted_route_matches_gs(self, tmp_path, sim_dir, moving_cfg):
        out = tmp_path / "depth"
        code = main([
            "invert",
            "--rs1", str(sim_dir / "rs_1.png"),
            "--rs2", str(sim_dir / "rs_2.png"),
            "--gamma", "1.0",
            "--scanlines", "48",
            "--flow", "files",
            "--flow-fwd", str(sim_dir / "flow_fwd.flo"),
            "--flow-bwd", str(sim_dir / "flow_bwd.flo"),
            "--depth", "scene",
            "--scene", str(moving_cfg),
            "--out", str(out),
        ])
        assert code == 0
        pred = read_png(out / "gs_1_0048.00.png")
        gt = read_png(sim_dir / "gs_1_0048.00.png")
        mask = read_png(out / "mask_1_0048.00.png") > 127
        assert _masked_psnr(pred, gt, mask) >= 35.0

    def test_threads_env_does_not_change_output(
        self, tmp_path, sim_dir, inv_dir, monkeypatch
    ):
        monkeypatch.setenv("RSINVERT_THREADS", "3")
        out = tmp_path / "threads"
        code = main([
            "invert",
            "--rs1", str(sim_dir / "rs_1.png"),
            "--rs2", str(sim_dir / "rs_2.png"),
            "--gamma", "1.0",
            "--scanlines", "0,48",
            "--flow", "files",
            "--flow-fwd", str(sim_dir / "flow_fwd.flo"),
            "--flow-bwd", str(sim_dir / "flow_bwd.flo"),
            "--out", str(out),
        ])
        assert code == 0
        for path in sorted(inv_dir.glob("*.png")):
            assert (out / path.name).read_bytes() == path.read_bytes()

    def test_bad_threads_env_exits_2(self, tmp_path, sim_dir, monkeypatch, capsys):
        monkeypatch.setenv("RSINVERT_THREADS", "many")
        code = main([
            "invert",
            "--rs1", str(sim_dir / "rs_1.png"),
            "--rs2", str(sim_dir / "rs_2.png"),
            "--gamma", "1.0",
            "--scanlines", "0",
            "--flow", "files",
            "--flow-fwd", str(sim_dir / "flow_fwd.flo"),
            "--flow-bwd", str(sim_dir / "flow_bwd.flo"),
            "--out", str(tmp_path / "o"),
        ])
        assert code == 2
        assert "RSINVERT_THREADS" in capsys.readouterr().err

    def test_fit_phi_without_references_exits_1(self, tmp_path, sim_dir, capsys):
        code = main([
            "invert",
            "--rs1", str(sim_dir / "rs_1.png"),
            "--rs2", str(sim_dir / "rs_2.png"),
            "--gamma", "1.0",
            "--scanlines", "0",
            "--flow", "files",
            "--flow-fwd", str(sim_dir / "flow_fwd.flo"),
            "--flow-bwd", str(sim_dir / "flow_bwd.flo"),
            "--model", "acceleration",
            "--fit-phi",
            "--out", str(tmp_path / "o"),
        ])
        assert code == 1
        assert "--fit-phi" in capsys.readouterr().err

    def test_flow_files_without_paths_exits_2(self, tmp_path, sim_dir, capsys):
        code = main([
            "invert",
            "--rs1", str(sim_dir / "rs_1.png"),
            "--rs2", str(sim_dir / "rs_2.png"),
            "--gamma", "1.0",
            "--scanlines", "0",
            "--out", str(tmp_path / "o"),
        ])
        assert code == 2
        assert "--flow-fwd" in capsys.readouterr().err

    def test_missing_rs_file_exits_2(self, tmp_path, sim_dir):
        code = main([
            "invert",
            "--rs1", str(tmp_path / "absent.png"),
            "--rs2", str(sim_dir / "rs_2.png"),
            "--gamma", "1.0",
            "--scanlines", "0",
            "--flow", "files",
            "--flow-fwd", str(sim_dir / "flow_fwd.flo"),
            "--flow-bwd", str(sim_dir / "flow_bwd.flo"),
            "--out", str(tmp_path / "o"),
        ])
        assert code == 2

    def test_argparse_missing_required_flag_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main(["invert"])
        assert exc.value.code == 2


class TestEvalCommand:
    def test_identical_dirs_hit_metric_caps(self, tmp_path, sim_dir):
        report_path = tmp_path / "report.json"
        code = main([
            "eval", "--pred", str(sim_dir), "--gt", str(sim_dir),
            "--report", str(report_path),
        ])
        assert code == 0
        report = json.loads(report_path.read_text())
        assert report["mean_psnr"] == 99.0
        assert report["mean_ssim"] == 1.0
        assert report["mean_psnr_masked"] == 99.0
        assert len(report["frames"]) == 4
        names = [row["frame"] for row in report["frames"]]
        assert names == sorted(names)

    def test_report_is_deterministic(self, tmp_path, sim_dir, inv_dir):
        r1 = tmp_path / "r1.json"
        r2 = tmp_path / "r2.json"
        for path in (r1, r2):
            code = main([
                "eval", "--pred", str(inv_dir), "--gt", str(sim_dir),
                "--report", str(path),
            ])
            assert code == 0
        assert r1.read_bytes() == r2.read_bytes()

    def test_masked_psnr_ignores_flagged_pixels(self, tmp_path, rng):
        gt_dir = tmp_path / "gt"
        pred_dir = tmp_path / "pred"
        gt_dir.mkdir()
        pred_dir.mkdir()
        clean = rng.random((32, 32))
        write_png(gt_dir / "gs_1_0000.00.png", clean)
        damaged = clean.copy()
        damaged[:4] = 1.0 - damaged[:4]
        write_png(pred_dir / "gs_1_0000.00.png", damaged)
        mask = np.ones((32, 32))
        mask[:4] = 0.0
        write_png(pred_dir / "mask_1_0000.00.png", mask)

        report_path = tmp_path / "r.json"
        code = main([
            "eval", "--pred", str(pred_dir), "--gt", str(gt_dir),
            "--report", str(report_path),
        ])
        assert code == 0
        report = json.loads(report_path.read_text())
        row = report["frames"][0]
        assert row["psnr"] < 40.0
        assert row["psnr_masked"] == 99.0

    def test_no_mask_flag_drops_masked_metrics(self, tmp_path, sim_dir):
        report_path = tmp_path / "r.json"
        code = main([
            "eval", "--pred", str(sim_dir), "--gt", str(sim_dir),
            "--no-mask", "--report", str(report_path),
        ])
        assert code == 0
        report = json.loads(report_path.read_text())
        assert "mean_psnr_masked" not in report
        assert all("psnr_masked" not in row for row in report["frames"])

    def test_mismatched_frame_sets_exit_1(self, tmp_path, sim_dir, capsys):
        empty = tmp_path / "empty"
        empty.mkdir()
        code = main(["eval", "--pred", str(sim_dir), "--gt", str(empty)])
        assert code == 1
        assert "frame sets differ" in capsys.readouterr().err

    def test_two_empty_dirs_exit_1(self, tmp_path, capsys):
        a = tmp_path / "a"
        b = tmp_path / "b"
        a.mkdir()
        b.mkdir()
        code = main(["eval", "--pred", str(a), "--gt", str(b)])
        assert code == 1
        assert "no gs_*.png frames" in capsys.readouterr().err


class TestParserBasics:
    def test_no_subcommand_exits_2(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 2

    def test_selfcheck_subcommand_is_registered(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["selfcheck", "--help"])
        assert exc.value.code == 0
        assert "selfcheck" in capsys.readouterr().out
