import json

import numpy as np
import pytest

from lpm.cli import main
from lpm.config import PRESETS, RunConfig, build_config, flatten, load_config_file
from lpm.harness import (MAZE_COLUMNS, MNIST_COLUMNS, crossing_step, read_csv, run_maze_coverage,
                         run_mnist_convergence, run_theorem_verify, windowed_abs_mean)


def mnist_config(out, **kw):
    flat = {"experiment": "mnist_convergence", "out_dir": str(out), "total_steps": 40, "seeds": [0, 1],
            "explorers": ["lpm", "pe"], "explorer.queue_size": 10}
    flat.update(kw)
    return build_config(flat)


def maze_config(out, **kw):
    flat = {"experiment": "maze_coverage", "out_dir": str(out), "total_steps": 400, "seeds": [0],
            "explorers": ["lpm"], "noise_modes": ["none", "action_noise"], "log_every": 10,
            "explorer.queue_size": 10}
    flat.update(kw)
    return build_config(flat)


def schema_line(path):
    return path.read_text().splitlines()[0]


class TestCrossing:
    def test_windowed_abs_mean(self):
        np.testing.assert_allclose(windowed_abs_mean([1, -1, 3, -3], 2), [1, 2, 3])
        assert len(windowed_abs_mean([1.0], 2)) == 0

    def test_settles_after_spike(self):
        trace = np.r_[np.ones(10), np.zeros(30)]
        # windows covering any of the first ten ones fail; the last such window ends at step 29
        assert crossing_step(trace, window=20, threshold=0.05) == 29

    def test_never_converges(self):
        assert crossing_step(np.ones(50), window=20) is None

    def test_warmup_windows_ignored(self):
        trace = np.r_[np.ones(5), np.zeros(40)]
        assert crossing_step(trace, window=5, start=12) == 12
        assert crossing_step(trace, window=5, start=0) == 9

    def test_too_short(self):
        assert crossing_step(np.zeros(5), window=20) is None


class TestConfig:
    def test_preset_defaults(self):
        cfg = build_config({"experiment": "mnist_convergence"})
        assert cfg.total_steps == 600 and cfg.seeds == (0, 1, 2, 3, 4)
        assert cfg.explorer["queue_size"] == 100 and cfg.explorer["update_every"] == 1
        assert cfg.explorer["learning_rate"] == 1e-3 and cfg.explorer["batch_size"] == 32
        maze = build_config({"experiment": "maze_coverage"})
        assert maze.total_steps == 30_000 and len(maze.seeds) == 10 and len(maze.noise_modes) == 3

    def test_presets_not_mutated(self):
        build_config({"experiment": "mnist_convergence", "explorer.queue_size": 3})
        assert PRESETS["mnist_convergence"]["explorer"]["queue_size"] == 100

    def test_nested_and_dotted_yaml(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("experiment: maze_coverage\nagent:\n  beta: 0.5\nexplorer.queue_size: 7\n")
        flat = load_config_file(path)
        assert flat == {"experiment": "maze_coverage", "agent.beta": 0.5, "explorer.queue_size": 7}
        cfg = build_config(flat)
        assert cfg.agent_config.beta == 0.5 and cfg.explorer["queue_size"] == 7

    def test_flatten(self):
        assert flatten({"a": {"b": 1, "c": {"d": 2}}, "e": 3}) == {"a.b": 1, "a.c.d": 2, "e": 3}

    @pytest.mark.parametrize("flat", [
        {"experiment": "mnist_convergence", "bogus": 1},
        {"experiment": "mnist_convergence", "explorer.bogus": 1},
        {"experiment": "maze_coverage", "agent.beta": -1.0},
        {"experiment": "maze_coverage", "noise_modes": ["loud"]},
        {"experiment": "mnist_convergence", "explorers": ["icm"]},
        {"experiment": "mnist_convergence", "seeds": []},
        {"experiment": "mnist_convergence", "total_steps": 0},
        {"experiment": "theorem_verify", "instance_count": 0},
        {"experiment": "nope"},
        {},
    ])
    def test_rejected(self, flat):
        with pytest.raises(ValueError):
            build_config(flat)


class TestMnist:
    def test_outputs_and_schema(self, tmp_path):
        result = run_mnist_convergence(mnist_config(tmp_path))
        assert schema_line(tmp_path / "metrics.csv") == "# schema: mnist_convergence/1"
        rows = read_csv(tmp_path / "metrics.csv")
        assert tuple(rows[0]) == MNIST_COLUMNS
        assert len(rows) == 2 * 2 * 40
        assert all(float(r["r_ext"]) == 0.0 for r in rows)
        for name in ("lpm", "pe"):
            for seed in ("0", "1"):
                ts = [int(r["t"]) for r in rows if r["explorer"] == name and r["seed"] == seed]
                assert ts == list(range(40))
        summary = read_csv(tmp_path / "summary.csv")
        assert {(r["explorer"], r["branch"]) for r in summary} == {(e, b) for e in ("lpm", "pe")
                                                                  for b in ("det", "stoch")}
        assert result.warmup_steps["lpm"] == 5 and result.warmup_steps["pe"] == 0
        assert len(result.traces["lpm", "det"]) == 40
        assert not result.partial

    def test_lpm_warmup_rows_are_zero(self, tmp_path):
        run_mnist_convergence(mnist_config(tmp_path, explorers=["lpm"]))
        rows = [r for r in read_csv(tmp_path / "metrics.csv") if int(r["t"]) < 5]
        assert rows and all(float(r["r_int_det"]) == 0 and float(r["r_int_stoch"]) == 0 for r in rows)

    def test_missing_dataset_is_startup_error(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            run_mnist_convergence(mnist_config(tmp_path, **{"digits.synthetic": False}))

    def test_debug_frames(self, tmp_path):
        run_mnist_convergence(mnist_config(tmp_path, explorers=["pe"], seeds=[0], debug_frames=3))
        frames = sorted((tmp_path / "frames").glob("*.pgm"))
        assert len(frames) == 3 and frames[0].read_bytes().startswith(b"P5")


class TestMaze:
    def test_coverage_invariants(self, tmp_path):
        result = run_maze_coverage(maze_config(tmp_path))
        assert schema_line(tmp_path / "metrics.csv") == "# schema: maze_coverage/1"
        rows = read_csv(tmp_path / "metrics.csv")
        assert tuple(rows[0]) == MAZE_COLUMNS
        assert {r["explorer"] for r in rows} == {"lpm", "random"}
        for name in ("lpm", "random"):
            for mode in ("none", "action_noise"):
                group = [r for r in rows if r["explorer"] == name and r["noise_mode"] == mode]
                poses = [int(r["coverage_posedirs"]) for r in group]
                cells = [int(r["coverage_cells"]) for r in group]
                assert poses == sorted(poses) and cells == sorted(cells)
                assert poses[-1] <= result.state_count
                assert all(float(r["r_ext"]) == 0.0 for r in group)
                ts = [int(r["t"]) for r in group]
                assert ts == sorted(ts) and ts[-1] == 399
        assert all(float(r["r_int"]) == 0.0 for r in rows if r["explorer"] == "random")

    def test_summary(self, tmp_path):
        result = run_maze_coverage(maze_config(tmp_path, seeds=[0, 1], noise_modes=["none"]))
        summary = read_csv(tmp_path / "summary.csv")
        row = next(r for r in summary if r["explorer"] == "lpm")
        poses = result.final_coverage["lpm", "none"]
        assert float(row["coverage_posedirs_mean"]) == pytest.approx(np.mean(poses))
        assert float(row["coverage_posedirs_std"]) == pytest.approx(np.std(poses, ddof=1))
        assert float(row["ratio_to_none"]) == 1.0
        assert int(row["state_count"]) == result.state_count

    def test_random_baseline_can_be_disabled(self, tmp_path):
        result = run_maze_coverage(maze_config(tmp_path, include_random=False, noise_modes=["none"]))
        assert set(result.final_coverage) == {("lpm", "none")}

    def test_wall_budget_flags_partial(self, tmp_path):
        cfg = maze_config(tmp_path, total_steps=10_000_000, noise_modes=["none"], include_random=False,
                          max_wall_seconds=0.5)
        result = run_maze_coverage(cfg)
        assert result.partial
        timing = read_csv(tmp_path / "timing.csv")
        assert timing[0]["partial"] == "1" and int(timing[0]["steps_completed"]) < 10_000_000
        assert read_csv(tmp_path / "summary.csv")[0]["partial"] == "1"


class TestReproducibility:
    FILES = ("metrics.csv", "summary.csv")

    def same_files(self, a, b):
        return all((a / f).read_bytes() == (b / f).read_bytes() for f in self.FILES)

    def test_mnist_rerun_byte_identical(self, tmp_path):
        run_mnist_convergence(mnist_config(tmp_path / "a"))
        run_mnist_convergence(mnist_config(tmp_path / "b", workers=2))
        assert self.same_files(tmp_path / "a", tmp_path / "b")

    def test_maze_rerun_byte_identical(self, tmp_path):
        run_maze_coverage(maze_config(tmp_path / "a"))
        run_maze_coverage(maze_config(tmp_path / "b", workers=2))
        assert self.same_files(tmp_path / "a", tmp_path / "b")

    def test_theorem_rerun_byte_identical(self, tmp_path):
        for name in ("a", "b"):
            run_theorem_verify(build_config({"experiment": "theorem_verify", "instance_count": 100,
                                             "out_dir": str(tmp_path / name)}))
        assert self.same_files(tmp_path / "a", tmp_path / "b")


class TestTheoremRun:
    def test_passes_and_writes_csv(self, tmp_path):
        summary, code = run_theorem_verify(build_config({"experiment": "theorem_verify",
                                                         "instance_count": 200, "out_dir": str(tmp_path)}))
        assert code == 0 and summary.passed
        assert schema_line(tmp_path / "summary.csv") == "# schema: theorem_verify_summary/1"
        rows = read_csv(tmp_path / "metrics.csv")
        assert sum(r["kind"] == "random" for r in rows) == 200
        assert any(r["kind"] != "random" for r in rows)  # injected constant grids
        assert not (tmp_path / "counterexamples.json").exists()


class TestCli:
    def test_theorem_verify_exit_zero(self, tmp_path, capsys):
        assert main(["run", "theorem_verify", "--out", str(tmp_path)]) == 0
        assert "monotone_bound" in capsys.readouterr().out

    def test_zero_instances_is_config_error(self, tmp_path, capsys):
        assert main(["run", "theorem_verify", "--instances", "0", "--out", str(tmp_path)]) == 2
        assert "config error" in capsys.readouterr().err

    def test_sign_flip_fixture_exits_one(self, tmp_path, monkeypatch):
        import lpm.oracle as oracle

        real = oracle.intrinsic_rewards

        def flipped(grid, policy="exact_mle", theta_d=None):
            report = real(grid, policy, theta_d)
            report.r_exp = -report.r_exp
            return report

        monkeypatch.setattr(oracle, "intrinsic_rewards", flipped)
        assert main(["run", "theorem_verify", "--instances", "50", "--out", str(tmp_path)]) == 1
        dumped = json.loads((tmp_path / "counterexamples.json").read_text())
        assert dumped and oracle.ParameterGrid.from_dict(dumped[0]["grid"])

    def test_missing_dataset_exit_two(self, tmp_path, capsys):
        code = main(["run", "mnist_convergence", "--out", str(tmp_path), "--total-steps", "5",
                     "--set", "digits.synthetic=false"])
        assert code == 2 and "startup error" in capsys.readouterr().err

    def test_flags_override_config_file(self, tmp_path):
        path = tmp_path / "c.yaml"
        path.write_text("experiment: mnist_convergence\ntotal_steps: 999\nseeds: [7]\n"
                        "explorer:\n  queue_size: 4\n")
        out = tmp_path / "out"
        code = main(["run", "mnist_convergence", "--config", str(path), "--total-steps", "12",
                     "--explorer", "pe", "--out", str(out), "--set", "explorer.batch_size=4"])
        assert code == 0
        rows = read_csv(out / "metrics.csv")
        assert {r["seed"] for r in rows} == {"7"} and len(rows) == 12

    def test_maze_run_with_noise_mode_flag(self, tmp_path, capsys):
        code = main(["run", "maze_coverage", "--out", str(tmp_path), "--total-steps", "200",
                     "--seed-list", "0", "--explorer", "pe", "--noise-mode", "state_noise"])
        assert code == 0
        assert {r["noise_mode"] for r in read_csv(tmp_path / "metrics.csv")} == {"state_noise"}
        assert "coverage" in capsys.readouterr().out

    def test_wall_budget_exit_three(self, tmp_path):
        code = main(["run", "maze_coverage", "--out", str(tmp_path), "--total-steps", "10000000",
                     "--seed-list", "0", "--explorer", "pe", "--noise-mode", "none",
                     "--max-wall-seconds", "0.3", "--set", "include_random=false"])
        assert code == 3

    def test_bad_set_syntax(self, tmp_path):
        assert main(["run", "maze_coverage", "--set", "agent.beta"]) == 2

    def test_unknown_experiment_rejected_by_parser(self):
        with pytest.raises(SystemExit):
            main(["run", "atari"])


def test_run_config_defaults_are_valid():
    RunConfig(experiment="theorem_verify", seeds=(0,))
