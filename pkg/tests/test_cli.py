"""End-to-end runs of the experiment CLI in subprocesses."""

import csv
import json
import os
import shutil
import subprocess
import sys

import numpy as np
import pytest

import mkdvlab
from mkdvlab import ConfigError, cosine_field, solve_reference, trajectory_from_obj
from mkdvlab.cli import emit_report
from mkdvlab.reference import ETDConfig


def clean_env():
    env = dict(os.environ)
    env.pop("OUTPUT_DIR", None)
    return env


def run_cli(tmp_path, doc, *extra, env=None, executable=None):
    cfg = tmp_path / "config.json"
    cfg.write_text(json.dumps(doc))
    cmd = executable or [sys.executable, "-m", "mkdvlab.cli"]
    return subprocess.run(
        [*cmd, "--config", str(cfg), *extra],
        capture_output=True,
        text=True,
        env=env or clean_env(),
        cwd=tmp_path,
    )


def load(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


class TestHappyPaths:
    def test_decompose_check(self, tmp_path):
        out = tmp_path / "out"
        r = run_cli(tmp_path, {"mode": "decompose_check"}, "--output-dir", str(out))
        assert r.returncode == 0, r.stderr
        report = load(out / "report.json")
        assert report["mode"] == "decompose_check"
        assert report["version"] == mkdvlab.__version__
        assert report["results"]["decomposition_max_err"] < 1e-12
        assert set(report["artifacts"]) == {"resolved_config.json", "report.json"}
        assert "decomposition_max_err" in r.stdout

    def test_simulate_artifacts(self, tmp_path):
        out = tmp_path / "out"
        doc = {"mode": "simulate", "grid": {"K": 16, "M": 8, "T": 0.01}}
        r = run_cli(tmp_path, doc, "--output-dir", str(out))
        assert r.returncode == 0, r.stderr
        with open(out / "conserved.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t", "mass", "l2", "energy"]
        assert rows[1] == ["0.0", "0.0", "0.5", "0.21874999999999994"]
        assert len(rows) == 9
        # the stored trajectory reproduces an in-process rerun exactly
        u = trajectory_from_obj(load(out / "trajectory.json"))
        v = solve_reference(cosine_field(16), 0.01, ETDConfig(dt=1e-3), 8)
        assert np.max(np.abs(u.coeffs - v.coeffs)) == 0.0
        assert load(out / "report.json")["results"]["mass_drift"] == 0.0

    def test_gauge_solve_artifacts(self, tmp_path):
        out = tmp_path / "out"
        doc = {"mode": "gauge_solve", "grid": {"K": 8, "M": 16, "T": 0.01}}
        r = run_cli(tmp_path, doc, "--output-dir", str(out))
        assert r.returncode == 0, r.stderr
        names = set(os.listdir(out))
        assert {
            "picard_report.json",
            "z_trajectory.json",
            "u_trajectory.json",
            "phase.json",
            "resolved_config.json",
            "report.json",
        } <= names
        picard = load(out / "picard_report.json")
        assert picard["converged"] is True
        assert picard["version"] == mkdvlab.__version__
        u = trajectory_from_obj(load(out / "u_trajectory.json"))
        assert np.max(np.abs(u.frame(0).coeffs - cosine_field(8).coeffs)) == 0.0

    def test_compare_mode(self, tmp_path):
        out = tmp_path / "out"
        doc = {"mode": "compare", "grid": {"K": 8, "M": 16, "T": 0.01}}
        r = run_cli(tmp_path, doc, "--output-dir", str(out))
        assert r.returncode == 0, r.stderr
        with open(out / "comparison.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["frame", "t", "hs_distance"]
        assert len(rows) == 17
        results = load(out / "report.json")["results"]
        assert results["picard_converged"] is True
        assert results["max_hs_distance"] < 1e-6
        assert max(float(row[2]) for row in rows[1:]) == results["max_hs_distance"]

    def test_q_solve(self, tmp_path):
        out = tmp_path / "out"
        doc = {"mode": "q_solve", "grid": {"K": 8, "M": 16, "T": 0.01}}
        r = run_cli(tmp_path, doc, "--output-dir", str(out))
        assert r.returncode == 0, r.stderr
        results = load(out / "report.json")["results"]
        assert results["sweeps"] == 2
        assert results["residual"] == 0.0
        assert results["certified_T0"] == 0.01
        phase = load(out / "phase.json")
        assert [val for _, val in phase["frames"][0]] == [0.0] * 17

    def test_smoothing_csv(self, tmp_path):
        out = tmp_path / "out"
        doc = {"mode": "smoothing", "grid": {"K": 8, "M": 8, "T": 0.01}}
        r = run_cli(tmp_path, doc, "--output-dir", str(out))
        assert r.returncode == 0, r.stderr
        with open(out / "smoothing.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == [
            "t",
            "remainder_hs1",
            "gap_sum_weight1",
            "gap_sum_upgraded",
            "gap_sup_weight1",
        ]
        assert rows[1] == ["0.0", "0.0", "0.0", "0.0", "0.0"]
        results = load(out / "report.json")["results"]
        assert set(results["sups"]) == {
            "remainder_hs1",
            "gap_sum_weight1",
            "gap_sum_upgraded",
            "gap_sup_weight1",
        }

    def test_probe700_runs(self, tmp_path):
        out = tmp_path / "out"
        doc = {
            "mode": "probe700",
            "grid": {"K": 8, "M": 16, "T": 0.01},
            "ensemble": {"seed": 2, "count": 3, "decay_exponent": 1.0},
        }
        r = run_cli(tmp_path, doc, "--output-dir", str(out))
        assert r.returncode == 0, r.stderr
        rep = load(out / "probe_report.json")
        assert rep["kind"] == "probe700"
        assert rep["argmax_sample_file"] == "argmax_sample.json"
        sample = load(out / "argmax_sample.json")
        assert sample["ratio"] == rep["ratios_summary"]["max"]

    def test_console_script(self, tmp_path):
        exe = shutil.which("mkdvlab")
        assert exe is not None
        out = tmp_path / "out"
        r = run_cli(
            tmp_path, {"mode": "decompose_check"}, "--output-dir", str(out),
            executable=[exe],
        )
        assert r.returncode == 0, r.stderr
        assert (out / "report.json").exists()


class TestDeterminism:
    def test_probe16_reruns_byte_identical(self, tmp_path):
        doc = {
            "mode": "probe16",
            "grid": {"K": 8, "M": 16, "T": 0.01},
            "ensemble": {"seed": 11, "count": 4, "decay_exponent": 1.0},
        }
        blobs = []
        for name in ("a", "b"):
            out = tmp_path / name
            r = run_cli(tmp_path, doc, "--output-dir", str(out), "--quiet")
            assert r.returncode == 0, r.stderr
            blobs.append((out / "probe_report.json").read_bytes())
        assert blobs[0] == blobs[1]

    def test_seed_flag_overrides_ensemble(self, tmp_path):
        doc = {
            "mode": "probe16",
            "grid": {"K": 8, "M": 16, "T": 0.01},
            "ensemble": {"seed": 11, "count": 4, "decay_exponent": 1.0},
        }
        out = tmp_path / "out"
        r = run_cli(tmp_path, doc, "--output-dir", str(out), "--seed", "12")
        assert r.returncode == 0, r.stderr
        resolved = load(out / "resolved_config.json")
        assert resolved["ensemble"]["seed"] == 12
        rep = load(out / "probe_report.json")
        assert rep["spec"]["seed"] == 12


class TestFlags:
    def test_mode_flag_overrides_config(self, tmp_path):
        out = tmp_path / "out"
        r = run_cli(
            tmp_path, {"mode": "simulate"}, "--output-dir", str(out),
            "--mode", "decompose_check",
        )
        assert r.returncode == 0, r.stderr
        assert load(out / "report.json")["mode"] == "decompose_check"

    def test_quiet_silences_stdout(self, tmp_path):
        out = tmp_path / "out"
        r = run_cli(tmp_path, {"mode": "decompose_check"}, "--output-dir", str(out), "--quiet")
        assert r.returncode == 0
        assert r.stdout == ""

    def test_output_dir_precedence(self, tmp_path):
        cfg_dir = tmp_path / "from_config"
        env_dir = tmp_path / "from_env"
        flag_dir = tmp_path / "from_flag"
        doc = {"mode": "decompose_check", "output_dir": str(cfg_dir)}
        env = clean_env()
        env["OUTPUT_DIR"] = str(env_dir)

        r = run_cli(tmp_path, doc, "--output-dir", str(flag_dir), env=env)
        assert r.returncode == 0
        assert (flag_dir / "report.json").exists()
        assert not env_dir.exists() and not cfg_dir.exists()

        r = run_cli(tmp_path, doc, env=env)
        assert r.returncode == 0
        assert (env_dir / "report.json").exists()
        assert not cfg_dir.exists()

        r = run_cli(tmp_path, doc)
        assert r.returncode == 0
        assert (cfg_dir / "report.json").exists()

    def test_default_output_dir_is_runs(self, tmp_path):
        r = run_cli(tmp_path, {"mode": "decompose_check"})
        assert r.returncode == 0
        assert (tmp_path / "runs" / "report.json").exists()


class TestResolvedConfig:
    def test_defaults_made_explicit(self, tmp_path):
        out = tmp_path / "out"
        r = run_cli(tmp_path, {"mode": "decompose_check"}, "--output-dir", str(out))
        assert r.returncode == 0
        resolved = load(out / "resolved_config.json")
        assert resolved["version"] == mkdvlab.__version__
        assert resolved["grid"] == {"K": 16, "M": 64, "T": 0.01}
        assert resolved["params"]["s0"] == 0.3
        assert resolved["params"]["s1"] == pytest.approx(0.8)
        assert resolved["proxy"]["window"] == "hann"
        assert resolved["proxy"]["pad_factor"] == 4
        assert resolved["etd"]["dt"] == 1e-3
        assert resolved["etd"]["scheme"] == "etdrk4"
        assert resolved["picard"]["tol"] == 1e-10
        assert resolved["picard"]["max_iters"] == 25
        assert resolved["initial_data"] == {
            "kind": "cosine",
            "amplitude": 1.0,
            "harmonic": 1,
        }
        assert resolved["ensemble"] is None
        assert not any(key.startswith("_") for key in resolved)

    def test_initial_data_kinds(self, tmp_path):
        doc = {
            "mode": "decompose_check",
            "initial_data": {"kind": "modes-list", "modes": [[1, 0.0, -0.5], [-1, 0.0, 0.5]]},
        }
        out = tmp_path / "a"
        assert run_cli(tmp_path, doc, "--output-dir", str(out)).returncode == 0
        assert load(out / "report.json")["results"]["decomposition_max_err"] < 1e-12

        doc = {
            "mode": "decompose_check",
            "initial_data": {"kind": "seeded-random", "seed": 5, "decay_exponent": 2.0},
        }
        out = tmp_path / "b"
        assert run_cli(tmp_path, doc, "--output-dir", str(out)).returncode == 0
        resolved = load(out / "resolved_config.json")
        assert resolved["initial_data"]["seed"] == 5


class TestFailurePaths:
    def test_empty_config_rejected(self, tmp_path):
        r = run_cli(tmp_path, {})
        assert r.returncode == 2
        err = json.loads(r.stderr)
        assert err["error"] == "invalid-config"
        fields = {row["field"]: row["message"] for row in err["problems"]}
        assert "missing" in fields["mode"]

    def test_unknown_section_key(self, tmp_path):
        r = run_cli(tmp_path, {"mode": "simulate", "grid": {"K": 8, "bogus": 1}})
        assert r.returncode == 2
        err = json.loads(r.stderr)
        fields = [row["field"] for row in err["problems"]]
        assert "grid.bogus" in fields

    def test_unknown_mode(self, tmp_path):
        r = run_cli(tmp_path, {"mode": "explode"})
        assert r.returncode == 2
        err = json.loads(r.stderr)
        assert any(row["field"] == "mode" for row in err["problems"])

    def test_probe_needs_ensemble(self, tmp_path):
        r = run_cli(tmp_path, {"mode": "probe16"})
        assert r.returncode == 2
        err = json.loads(r.stderr)
        assert any(row["field"] == "ensemble" for row in err["problems"])

    def test_seeded_random_needs_seed(self, tmp_path):
        doc = {"mode": "decompose_check", "initial_data": {"kind": "seeded-random"}}
        r = run_cli(tmp_path, doc)
        assert r.returncode == 2
        err = json.loads(r.stderr)
        assert any(row["field"] == "initial_data.seed" for row in err["problems"])

    def test_missing_config_file(self, tmp_path):
        r = subprocess.run(
            [sys.executable, "-m", "mkdvlab.cli", "--config", str(tmp_path / "missing.json")],
            capture_output=True,
            text=True,
            env=clean_env(),
            cwd=tmp_path,
        )
        assert r.returncode == 2
        assert json.loads(r.stderr)["error"] == "config-unreadable"

    def test_malformed_json(self, tmp_path):
        cfg = tmp_path / "broken.json"
        cfg.write_text("{not json")
        r = subprocess.run(
            [sys.executable, "-m", "mkdvlab.cli", "--config", str(cfg)],
            capture_output=True,
            text=True,
            env=clean_env(),
            cwd=tmp_path,
        )
        assert r.returncode == 2
        assert json.loads(r.stderr)["error"] == "config-parse-error"

    def test_numerical_failure_exits_3(self, tmp_path):
        doc = {
            "mode": "gauge_solve",
            "grid": {"K": 8, "M": 16, "T": 0.01},
            "picard": {"T": 0.5, "M": 16, "phase_max_sweeps": 1},
        }
        r = run_cli(tmp_path, doc, "--output-dir", str(tmp_path / "out"))
        assert r.returncode == 3
        err = json.loads(r.stderr)
        assert err["error"] == "ConvergenceError"
        assert err["residual"] > 0.0


class TestEmitReport:
    def test_json_and_csv_agree(self, tmp_path):
        results = {"a": {"b": 1.5, "c": [1, 2]}, "d": None, "e": "text"}
        jpath = tmp_path / "r.json"
        cpath = tmp_path / "r.csv"
        emit_report(results, "json", str(jpath))
        emit_report(results, "csv", str(cpath))
        assert load(jpath) == results
        with open(cpath, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows == [
            ["key", "value"],
            ["a.b", "1.5"],
            ["a.c[0]", "1"],
            ["a.c[1]", "2"],
            ["d", ""],
            ["e", "text"],
        ]

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ConfigError):
            emit_report({}, "yaml", str(tmp_path / "r.yaml"))
