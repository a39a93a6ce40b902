import numpy as np
import pytest

from bacpole.cli import main

TINY_SINGLE = (
    "architecture = SingleIndirect\n"
    "seeds = 0\n"
    "trial_limit = 8\n"
    "success_steps = 50\n"
    "init_fraction = 0.05\n"
    "model_train_steps = 200\n"
)

TINY_TWO_LEVEL = (
    "architecture = TwoLevelIndirect\n"
    "seeds = 0\n"
    "n_ratio = 5\n"
    "success_steps = 30\n"
    "init_fraction = 0.05\n"
    "ll_model_max_trials = 30\n"
    "ll_model_max_steps = 400\n"
    "ll_model_converge = 10.0\n"
    "ll_model_window = 10\n"
    "ll_action_max_trials = 10\n"
    "ll_action_max_steps = 600\n"
    "ll_track_converge = 10.0\n"
    "ll_track_window = 3\n"
    "hl_model_max_trials = 20\n"
    "hl_model_max_steps = 600\n"
    "hl_model_converge = 10.0\n"
    "hl_model_window = 3\n"
    "hl_action_max_trials = 10\n"
    "hl_action_max_steps = 600\n"
)


class TestRunCommand:
    def test_run_writes_outputs_and_exits_zero(self, tmp_path, capsys):
        config = tmp_path / "exp.cfg"
        config.write_text(TINY_SINGLE)
        out = tmp_path / "out"
        code = main(["run", "--config", str(config), "--out", str(out)])
        assert code == 0
        captured = capsys.readouterr().out
        assert "SR" in captured
        for name in ("trials.csv", "series.csv", "summary.csv"):
            assert (out / name).exists()

    def test_seed_override(self, tmp_path, capsys):
        config = tmp_path / "exp.cfg"
        config.write_text(TINY_SINGLE)
        code = main(["run", "--config", str(config), "--seeds", "5,6"])
        assert code == 0
        out = capsys.readouterr().out
        assert "seed 5" in out and "seed 6" in out

    def test_config_error_exits_one(self, tmp_path, capsys):
        config = tmp_path / "broken.cfg"
        config.write_text("trial_limit = -3\n")
        code = main(["run", "--config", str(config)])
        assert code == 1
        assert "trial_limit" in capsys.readouterr().err

    def test_numeric_fault_exits_two(self, tmp_path, capsys):
        config = tmp_path / "hot.cfg"
        config.write_text(TINY_SINGLE + "critic_lr = 1e12\naction_lr = 1e12\nmodel_lr = 1e12\n")
        with np.errstate(all="ignore"):
            code = main(["run", "--config", str(config)])
        assert code == 2

    def test_bad_seeds_flag_is_config_error(self, tmp_path):
        config = tmp_path / "exp.cfg"
        config.write_text(TINY_SINGLE)
        assert main(["run", "--config", str(config), "--seeds", "a,b"]) == 1


class TestGradcheckCommand:
    def test_passes_and_prints_suites(self, capsys):
        code = main(["gradcheck", "--checks", "10"])
        assert code == 0
        out = capsys.readouterr().out
        for name in (
            "weight-gradients",
            "input-gradients",
            "indirect-action-chain",
            "direct-action-chain",
            "plan-sensitivity",
        ):
            assert name in out


class TestPhaseCommand:
    def test_stops_after_requested_phase(self, tmp_path, capsys):
        config = tmp_path / "two.cfg"
        config.write_text(TINY_TWO_LEVEL)
        code = main(["phase", "--only", "II", "--config", str(config)])
        assert code == 0
        out = capsys.readouterr().out
        assert "phase I " in out and "phase II " in out
        assert "phase III" not in out

    def test_rejects_single_level(self, tmp_path, capsys):
        config = tmp_path / "single.cfg"
        config.write_text(TINY_SINGLE)
        assert main(["phase", "--only", "I", "--config", str(config)]) == 1

    def test_rejects_phase_missing_from_architecture(self, tmp_path):
        config = tmp_path / "direct.cfg"
        config.write_text("architecture = TwoLevelDirect\nseeds = 0\n")
        assert main(["phase", "--only", "III", "--config", str(config)]) == 1
