"""Command-line interface: subcommands, exit codes, artifact determinism."""

import subprocess
import sys

import numpy as np
import pytest

from voxelprobe.cli import run
from voxelprobe.io_formats import read_tensor, write_tensor

from _tables import BACKBONE_TABLE
from _util import groups_config_text, table_to_csv_text


@pytest.fixture()
def backbone_files(tmp_path):
    table = tmp_path / "table.csv"
    groups = tmp_path / "groups.cfg"
    table.write_text(table_to_csv_text(BACKBONE_TABLE))
    groups.write_text(groups_config_text())
    return table, groups


class TestSynthAndScore:
    def test_tokens_pipeline_scores_one(self, tmp_path, capsys):
        out = tmp_path / "synth"
        assert run(["synth", "--mode", "tokens", "--sigma", "0", "--seed", "1",
                    "--output", str(out)]) == 0
        manifest = capsys.readouterr().out.strip()
        assert manifest.endswith("manifest.json")
        assert run(["corr-score", manifest]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "score 1.000000"

    def test_room_pipeline_scores_one(self, tmp_path, capsys):
        out = tmp_path / "synth"
        assert run(["synth", "--mode", "room", "--sigma", "0", "--seed", "2",
                    "--views", "8", "--image-size", "24x32",
                    "--output", str(out)]) == 0
        manifest = capsys.readouterr().out.strip()
        assert run(["corr-score", manifest, "--output", str(tmp_path / "scores.csv")]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "score 1.000000"
        report = (tmp_path / "scores.csv").read_text()
        assert report.splitlines()[0] == "scene_id,score,pair_count,multiview_voxel_count"

    def test_single_view_scene_reports_nan_and_exits_zero(self, tmp_path, capsys):
        out = tmp_path / "synth"
        assert run(["synth", "--mode", "tokens", "--views", "1", "--seed", "3",
                    "--output", str(out)]) == 0
        manifest = capsys.readouterr().out.strip()
        assert run(["corr-score", manifest]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "score nan"
        assert "valid 0 nan 1" in lines[1]

    def test_shell_pipeline_via_stdin(self, tmp_path):
        # synth prints manifest paths; corr-score consumes them from stdin
        result = subprocess.run(
            f"{sys.executable} -m voxelprobe synth --mode tokens --sigma 0 --seed 4 "
            f"--output {tmp_path}/p | {sys.executable} -m voxelprobe corr-score",
            shell=True, capture_output=True, text=True, timeout=300,
        )
        assert result.returncode == 0, result.stderr
        assert result.stdout.splitlines()[0] == "score 1.000000"

    def test_identical_flags_produce_identical_artifacts(self, tmp_path, capsys):
        for sub in ("a", "b"):
            assert run(["synth", "--mode", "tokens", "--seed", "9", "--sigma", "0.3",
                        "--output", str(tmp_path / sub)]) == 0
        capsys.readouterr()
        for name in ("manifest.json", "features.vgt", "coords.vgt", "view_ids.vgt"):
            assert (tmp_path / "a" / "tokens_0009" / name).read_bytes() == (
                tmp_path / "b" / "tokens_0009" / name
            ).read_bytes()

    def test_multi_scene_aggregation(self, tmp_path, capsys):
        out = tmp_path / "many"
        assert run(["synth", "--mode", "tokens", "--scenes", "3", "--sigma", "0",
                    "--seed", "5", "--output", str(out)]) == 0
        manifests = capsys.readouterr().out.split()
        assert len(manifests) == 3
        assert run(["corr-score", *manifests]) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "score 1.000000"
        assert "valid 3 nan 0" in lines[1]


class TestLeaderboardCommands:
    def test_nos_emits_published_scores(self, backbone_files, tmp_path, capsys):
        table, groups = backbone_files
        out = tmp_path / "nos.csv"
        assert run(["nos", "--table", str(table), "--groups", str(groups),
                    "--output", str(out)]) == 0
        stdout = capsys.readouterr().out
        assert "VGGT,88.24" in stdout
        assert "Wan2.1-VACE,89.32" in stdout
        assert "Baseline@discriminative,13.58" in stdout
        assert "Baseline@generative,12.22" in stdout
        assert "VGGT,88.24" in out.read_text()

    def test_rank_command(self, backbone_files, capsys):
        table, _ = backbone_files
        assert run(["rank", "--table", str(table)]) == 0
        stdout = capsys.readouterr().out
        assert any(line.startswith("Wan2.1-T2V,") for line in stdout.splitlines())

    def test_correlate_command(self, tmp_path, capsys):
        pairs = tmp_path / "pairs.csv"
        pairs.write_text("x,y\n0,10\n1,8\n2,6\n3,4\n")
        assert run(["correlate", "--pairs", str(pairs)]) == 0
        out = capsys.readouterr().out.strip()
        assert out.startswith("r -1.000000")


class TestFuseCheck:
    def test_passes_at_default_tolerance(self, capsys):
        assert run(["fuse-check", "--trials", "3"]) == 0
        assert "max relative error" in capsys.readouterr().out

    def test_fails_on_unreachable_tolerance(self, capsys):
        assert run(["fuse-check", "--trials", "2", "--tolerance", "1e-14"]) == 1


class TestNoiseAndTensorCommands:
    def test_noise_at_zero_returns_input(self, tmp_path, capsys):
        z0 = np.random.default_rng(0).standard_normal((4, 6))
        src = tmp_path / "z0.vgt"
        dst = tmp_path / "zk.vgt"
        write_tensor(src, z0)
        assert run(["noise", "--input", str(src), "--timestep", "0",
                    "--output", str(dst)]) == 0
        assert read_tensor(dst).tobytes() == z0.tobytes()

    def test_noise_deterministic(self, tmp_path, capsys):
        src = tmp_path / "z0.vgt"
        write_tensor(src, np.zeros((8, 8)))
        for name in ("a.vgt", "b.vgt"):
            assert run(["noise", "--input", str(src), "--timestep", "300",
                        "--seed", "7", "--output", str(tmp_path / name)]) == 0
        assert (tmp_path / "a.vgt").read_bytes() == (tmp_path / "b.vgt").read_bytes()

    def test_pool_command(self, tmp_path, capsys):
        src = tmp_path / "grid.vgt"
        write_tensor(src, np.array([[1.0, 2.0], [3.0, 4.0]]))
        dst = tmp_path / "pooled.vgt"
        assert run(["pool", "--input", str(src), "--grid", "1x1",
                    "--output", str(dst)]) == 0
        assert read_tensor(dst).reshape(-1)[0] == 2.5

    def test_pca_vis_writes_ppm_frames(self, tmp_path, capsys):
        rng = np.random.default_rng(1)
        src = tmp_path / "tokens.vgt"
        write_tensor(src, rng.standard_normal((2, 6, 6, 8)))
        out = tmp_path / "vis.ppm"
        assert run(["pca-vis", "--input", str(src), "--output", str(out)]) == 0
        produced = capsys.readouterr().out.splitlines()
        assert (tmp_path / "vis_000.ppm").exists()
        assert (tmp_path / "vis_001.ppm").exists()
        assert produced[-1].startswith("explained variance ratios")


class TestExitCodes:
    def test_unknown_flag_is_usage_error(self, capsys):
        assert run(["corr-score", "--no-such-flag"]) == 1

    def test_unknown_subcommand(self, capsys):
        assert run(["frobnicate"]) == 1

    def test_no_subcommand_prints_help(self, capsys):
        assert run([]) == 1
        assert "usage" in capsys.readouterr().out.lower()

    def test_help_exits_zero(self, capsys):
        assert run(["--help"]) == 0
        for sub in ("corr-score", "nos", "rank", "correlate", "fuse-check",
                    "noise", "synth", "pca-vis", "pool"):
            assert run([sub, "--help"]) == 0

    def test_missing_file_is_io_error(self, tmp_path):
        assert run(["noise", "--input", str(tmp_path / "nope.vgt"),
                    "--output", str(tmp_path / "o.vgt")]) == 2

    def test_corrupt_tensor_is_io_error(self, tmp_path):
        bad = tmp_path / "bad.vgt"
        bad.write_bytes(b"XXXX" + b"\0" * 32)
        assert run(["noise", "--input", str(bad), "--output", str(tmp_path / "o.vgt")]) == 2

    def test_corrupt_manifest_is_io_error(self, tmp_path):
        bad = tmp_path / "manifest.json"
        bad.write_text("{ not json")
        assert run(["corr-score", str(bad)]) == 2

    def test_geometry_only_manifest_is_validation_error(self, tmp_path, capsys):
        from voxelprobe.io_formats import write_scene_manifest
        from voxelprobe.synth import RoomConfig, gen_rgbd_room

        scene = gen_rgbd_room(RoomConfig(n_views=2, image_hw=(8, 8)))
        manifest = write_scene_manifest(tmp_path / "geo", scene)
        assert run(["corr-score", str(manifest)]) == 1

    def test_invalid_timestep_is_validation_error(self, tmp_path):
        src = tmp_path / "z.vgt"
        write_tensor(src, np.zeros(4))
        assert run(["noise", "--input", str(src), "--timestep", "2000",
                    "--output", str(tmp_path / "o.vgt")]) == 1
