"""Command-line interface: arguments, configs, manifests, and exit codes."""

import json
import os

import pytest

from oamturb import load_screen
from oamturb.cli import main


def run(args):
    return main(list(args))


TINY_PH = [
    "ph-curve", "--strengths", "0.0,0.6", "--realizations", "4",
    "--grid-n", "64", "--grid-extent", "6.0", "--seed", "3",
    "--radial-nodes", "100", "--angular-nodes", "128",
]


class TestParsing:
    def test_version_exits_cleanly(self, capsys):
        assert run(["--version"]) == 0
        assert "oamturb" in capsys.readouterr().out

    def test_help_exits_cleanly(self, capsys):
        assert run(["--help"]) == 0
        out = capsys.readouterr().out
        for name in ("ph-curve", "fidelity-scan", "rotation-scan",
                     "screen-validate", "calibrate"):
            assert name in out

    def test_missing_subcommand_fails(self):
        assert run([]) == 1

    def test_unknown_flag_fails(self):
        assert run(["ph-curve", "--frobnicate"]) == 1

    def test_missing_config_file_fails(self, tmp_path, capsys):
        assert run(["ph-curve", "--config", str(tmp_path / "nope.json")]) == 1
        assert "cannot read config" in capsys.readouterr().err

    def test_unknown_config_key_fails(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"sneed": 5}))
        assert run(["ph-curve", "--config", str(cfg)]) == 1
        assert "unknown config keys" in capsys.readouterr().err

    def test_non_object_config_fails(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("[1, 2, 3]")
        assert run(["ph-curve", "--config", str(cfg)]) == 1


@pytest.fixture(scope="module")
def first_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("ph")
    assert run(TINY_PH + ["--out-dir", str(out)]) == 0
    return out


class TestPhCurve:
    def test_outputs_present(self, first_run):
        names = sorted(os.listdir(first_run))
        assert names == ["manifest.json", "ph_curve.csv", "summary.json"]

    def test_csv_layout(self, first_run):
        lines = (first_run / "ph_curve.csv").read_text().splitlines()
        assert lines[0] == "w_over_r0,ph_analytic,ph_mc_mean,ph_mc_stderr"
        assert len(lines) == 3
        zero = lines[1].split(",")
        assert float(zero[0]) == 0.0
        assert float(zero[1]) == 1.0
        assert abs(float(zero[2]) - 1.0) < 1e-6

    def test_summary_reports_both_ring_variants(self, first_run):
        summary = json.loads((first_run / "summary.json").read_text())
        assert summary["n_strengths"] == 2
        assert summary["monotone_nonincreasing"] is True
        half = summary["ph_ring_half_angle_variant"]
        full = summary["ph_ring_full_angle_variant"]
        assert half[1] == pytest.approx(full[1], abs=1e-9)
        # single-radius reduction sits above the two-point value
        rows = (first_run / "ph_curve.csv").read_text().splitlines()[2].split(",")
        assert half[1] > float(rows[1])

    def test_manifest_replay_is_bitwise(self, first_run, tmp_path):
        replay = tmp_path / "replay"
        rc = run(["ph-curve", "--config", str(first_run / "manifest.json"),
                  "--out-dir", str(replay)])
        assert rc == 0
        assert (replay / "ph_curve.csv").read_bytes() == (
            first_run / "ph_curve.csv"
        ).read_bytes()

    def test_worker_count_independent(self, first_run, tmp_path):
        out = tmp_path / "workers"
        assert run(TINY_PH + ["--workers", "3", "--out-dir", str(out)]) == 0
        assert (out / "ph_curve.csv").read_bytes() == (
            first_run / "ph_curve.csv"
        ).read_bytes()

    def test_flag_overrides_config(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 5, "realizations": 4,
                                   "strengths": [0.0], "grid_n": 64,
                                   "grid_extent": 6.0, "radial_nodes": 100,
                                   "angular_nodes": 128}))
        out = tmp_path / "out"
        assert run(["ph-curve", "--config", str(cfg), "--seed", "9",
                    "--out-dir", str(out)]) == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["seed"] == 9
        assert manifest["config"]["realizations"] == 4
        assert manifest["master_seed"] == 9

    def test_manifest_for_wrong_command_rejected(self, first_run, capsys):
        rc = run(["fidelity-scan", "--config", str(first_run / "manifest.json")])
        assert rc == 1
        assert "manifest is for" in capsys.readouterr().err


class TestFidelityScan:
    def test_small_run(self, tmp_path):
        out = tmp_path / "fid"
        rc = run(["fidelity-scan", "--strengths", "0.0,0.4",
                  "--realizations", "3", "--grid-n", "64",
                  "--grid-extent", "6.0", "--out-dir", str(out)])
        assert rc == 0
        lines = (out / "fidelity_scan.csv").read_text().splitlines()
        assert lines[0] == ("w_over_r0,state_label,fidelity_mean,"
                            "fidelity_stderr,loss_rate")
        assert len(lines) == 1 + 12
        summary = json.loads((out / "summary.json").read_text())
        assert summary["overall_fidelity_mean"] == pytest.approx(1.0, abs=1e-9)
        assert summary["total_losses"] == 0


class TestRotationScan:
    def test_small_run(self, tmp_path):
        out = tmp_path / "rot"
        rc = run(["rotation-scan", "--strength", "0.4", "--n-angles", "4",
                  "--realizations", "3", "--grid-n", "64",
                  "--grid-extent", "6.0", "--out-dir", str(out)])
        assert rc == 0
        lines = (out / "rotation_scan.csv").read_text().splitlines()
        assert lines[0] == "theta,state_label,fidelity_mean,fidelity_stderr"
        assert len(lines) == 1 + 24
        summary = json.loads((out / "summary.json").read_text())
        assert summary["max_variation"] < 1e-9

    def test_zero_angles_rejected(self, capsys):
        assert run(["rotation-scan", "--n-angles", "0"]) == 1
        assert "--n-angles" in capsys.readouterr().err


class TestScreenValidate:
    def test_too_few_screens_exit_two(self, tmp_path, capsys):
        out = tmp_path / "sv"
        rc = run(["screen-validate", "--realizations", "50",
                  "--out-dir", str(out)])
        assert rc == 2
        assert "need >= 100 screens" in capsys.readouterr().err

    def test_zero_strength_run(self, tmp_path):
        out = tmp_path / "sv0"
        rc = run(["screen-validate", "--strength", "0.0",
                  "--realizations", "120", "--export-screens", "2",
                  "--out-dir", str(out)])
        assert rc == 0
        summary = json.loads((out / "summary.json").read_text())
        assert summary["passed"] is True
        assert summary["zero_turbulence"] is True
        assert summary["max_abs_phase"] == 0.0
        exported = sorted(os.listdir(out / "screens"))
        assert exported == ["screen_0000.csv", "screen_0001.csv"]
        screen = load_screen(out / "screens" / "screen_0000.csv")
        assert screen.params.w_over_r0 == 0.0


class TestCalibrate:
    def test_partial_physical_quartet_rejected(self, capsys):
        rc = run(["calibrate", "--lambda-nm", "795", "--cn2", "1e-14"])
        assert rc == 1
        assert "physical units need all of" in capsys.readouterr().err

    def test_small_run_with_physical_conversion(self, tmp_path):
        out = tmp_path / "cal"
        rc = run(["calibrate", "--strengths", "0.0,0.3",
                  "--realizations", "100", "--grid-n", "128",
                  "--grid-extent", "16.0", "--seed", "2",
                  "--lambda-nm", "795", "--cn2", "1e-14",
                  "--path-m", "1000", "--waist-mm", "35.2868",
                  "--out-dir", str(out)])
        assert rc == 0
        lines = (out / "calibration.csv").read_text().splitlines()
        assert lines[0] == ("w_over_r0_true,w_t_over_w,w_t_stderr,"
                            "w_over_r0_inferred")
        assert len(lines) == 1 + 3  # 0.0, 0.3, and the converted ~1.0
        summary = json.loads((out / "summary.json").read_text())
        conv = summary["physical_conversion"]
        assert conv["w_over_r0"] == pytest.approx(1.0, rel=1e-3)
        assert summary["monotone_nondecreasing"] is True
        assert summary["guard_failures"] == []
        assert summary["spearman_rho"] == pytest.approx(1.0)
