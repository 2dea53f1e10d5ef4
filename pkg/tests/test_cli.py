import json
import logging

import pytest

from ctrplan.config import settings
from ctrplan.main import EXIT_DOMAIN_ERROR, EXIT_USAGE_ERROR, log_level, main
from ctrplan.services.artifact_service import MANIFEST_NAME, read_csv, verify_manifest


def _run(out_dir, *argv):
    return main([*argv, "--out", str(out_dir)])


class TestExitCodes:
    def test_version(self):
        assert main(["--version"]) == 0

    def test_missing_command(self):
        assert main([]) == EXIT_USAGE_ERROR

    def test_unknown_scenario(self, out_dir):
        assert _run(out_dir, "simulate", "pusher9d") == EXIT_USAGE_ERROR

    def test_invalid_override(self, out_dir):
        assert _run(out_dir, "plan", "pusher1d", "--eta", "-1") == EXIT_USAGE_ERROR

    def test_wrong_command_length(self, out_dir):
        assert _run(out_dir, "simulate", "pusher1d", "--u-const", "0.1,0.2") == EXIT_DOMAIN_ERROR

    def test_wrong_goal_length(self, out_dir):
        assert _run(out_dir, "plan", "pusher1d", "--goal", "0.1,0.2") == EXIT_DOMAIN_ERROR

    def test_failed_gradient_check(self, out_dir):
        argv = ["grad-check", "pusher1d", "--kappas", "100", "--tolerance", "0"]
        assert _run(out_dir, *argv) == EXIT_DOMAIN_ERROR


class TestSimulate:
    def test_writes_trace_and_manifest(self, out_dir):
        assert _run(out_dir, "simulate", "pusher1d", "--u-const", "0.05", "--steps", "3") == 0
        rows = read_csv(out_dir / "trajectory.csv")
        assert rows[0] == ["t", "q0", "q1", "u0", "lambda_n0"]
        assert len(rows) == 1 + 4
        manifest = json.loads((out_dir / MANIFEST_NAME).read_text())
        assert manifest["command"] == "simulate"
        assert manifest["scenario"] == "pusher1d"
        assert verify_manifest(out_dir) == []

    def test_reruns_are_identical(self, tmp_path):
        contents = []
        for run in ("a", "b"):
            out = tmp_path / run
            argv = ["simulate", "boxball2d", "--u-const", "0.02,-0.02", "--steps", "2", "--svg"]
            assert _run(out, *argv) == 0
            contents.append(
                ((out / "trajectory.csv").read_bytes(), (out / "trajectory.svg").read_bytes())
            )
        assert contents[0] == contents[1]

    def test_soft_plant(self, out_dir):
        assert _run(out_dir, "simulate", "pusher1d", "--plant", "soft", "--steps", "2") == 0
        assert (out_dir / "trajectory.csv").is_file()


class TestCommands:
    def test_grad_check(self, out_dir):
        assert _run(out_dir, "grad-check", "pusher1d", "--kappas", "100", "--directions", "2") == 0
        assert read_csv(out_dir / "gradcheck.csv")[0][:3] == ["trial", "kappa", "block"]

    def test_trust_region_with_mode_map(self, out_dir):
        code = _run(
            out_dir, "trust-region", "boxball2d", "--variant", "a-etr,ra-ctr", "--n", "100",
            "--mode-map", "--grid", "3",
        )
        assert code == 0
        assert len(read_csv(out_dir / "trust_region.csv")) == 1 + 200
        assert len(read_csv(out_dir / "mode_map.csv")) == 1 + 9

    def test_plan(self, out_dir):
        assert _run(out_dir, "plan", "pusher1d") == 0
        assert {"plan.csv", "inputs.csv", "trajectory.csv", MANIFEST_NAME} <= {
            p.name for p in out_dir.iterdir()
        }

    @pytest.mark.slow
    def test_mpc(self, out_dir):
        assert _run(out_dir, "mpc", "pusher1d", "--H", "3") == 0
        summary = read_csv(out_dir / "summary.csv")
        assert summary[1][0] == "cqdc"
        assert summary[1][1] == "3"

    @pytest.mark.slow
    def test_bench_horizon_sweep(self, out_dir):
        argv = [
            "bench", "pusher1d", "--goals", "2", "--variants", "etr,ra-ctr",
            "--horizons", "1,2", "--H", "2",
        ]
        assert _run(out_dir, *argv) == 0
        assert len(read_csv(out_dir / "goals.csv")) == 1 + 2
        assert len(read_csv(out_dir / "runs.csv")) == 1 + 8
        aggregate = read_csv(out_dir / "aggregate.csv")
        assert len(aggregate) == 1 + 4
        assert [row[2] for row in aggregate[1:]] == ["1", "2", "1", "2"]


class TestLogging:
    def test_debug_flag_forces_debug_level(self, monkeypatch):
        monkeypatch.setattr(settings, "DEBUG", True)
        assert log_level() == logging.DEBUG

    def test_level_from_settings(self, monkeypatch):
        monkeypatch.setattr(settings, "DEBUG", False)
        monkeypatch.setattr(settings, "LOG_LEVEL", "WARNING")
        assert log_level() == logging.WARNING
