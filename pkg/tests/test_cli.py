"""CLI tests: exit codes, config validation, artifact shape, determinism."""

import json

import pytest
from click.testing import CliRunner

from amp_sheet.cli import main


@pytest.fixture
def runner():
    return CliRunner()


def write_config(tmp_path, name, payload):
    p = tmp_path / name
    p.write_text(json.dumps(payload))
    return str(p)


ZERO_SIM = {"mu": 1.0, "delta": 0.9, "grid_n": 32, "galerkin_N": 8,
            "dt": 0.005, "t_final": 0.2}


class TestConfigHandling:
    def test_unknown_key_rejected(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json", {**ZERO_SIM, "bogus": 1})
        out = runner.invoke(main, ["simulate", "--config", cfg,
                                   "--output", str(tmp_path / "o")])
        assert out.exit_code == 2
        assert "bogus" in out.output

    def test_malformed_json_rejected(self, runner, tmp_path):
        p = tmp_path / "c.json"
        p.write_text("{not json")
        out = runner.invoke(main, ["simulate", "--config", str(p),
                                   "--output", str(tmp_path / "o")])
        assert out.exit_code == 2

    def test_missing_required_key(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json", {"modes": [4]})
        out = runner.invoke(main, ["growth", "--config", cfg,
                                   "--output", str(tmp_path / "o")])
        assert out.exit_code == 2
        assert "mu" in out.output

    def test_invalid_solver_parameter(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json", {**ZERO_SIM, "dt": -1.0})
        out = runner.invoke(main, ["simulate", "--config", cfg,
                                   "--output", str(tmp_path / "o")])
        assert out.exit_code == 2

    def test_bad_mode_in_field_spec(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json",
                           {**ZERO_SIM, "phi0": {"cos": {"300": 0.1}}})
        out = runner.invoke(main, ["simulate", "--config", cfg,
                                   "--output", str(tmp_path / "o")])
        assert out.exit_code == 2

    def test_version_flag(self, runner):
        out = runner.invoke(main, ["--version"])
        assert out.exit_code == 0
        assert "amp-sheet" in out.output


class TestSimulate:
    def test_zero_data_run(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json", ZERO_SIM)
        dest = tmp_path / "o"
        out = runner.invoke(main, ["simulate", "--config", cfg,
                                   "--output", str(dest)])
        assert out.exit_code == 0
        summary = json.loads((dest / "summary.json").read_text())
        assert summary["final_h1"] == 0.0
        assert summary["flags"] == []
        assert summary["version"] == summary["config"].get("version", summary["version"])
        lines = (dest / "trajectory.csv").read_text().splitlines()
        assert lines[0].startswith("# version:")
        assert lines[1].startswith("# config:")
        assert lines[2] == "t,h1_phi,h1_phit,min_stability"

    def test_stability_flag_exits_three(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "mu": 1.0, "delta": 0.99, "grid_n": 32, "galerkin_N": 8,
            "dt": 0.002, "t_final": 1.0, "phi1": {"cos": {"1": 1.0}},
        })
        dest = tmp_path / "o"
        out = runner.invoke(main, ["simulate", "--config", cfg,
                                   "--output", str(dest), "--quiet"])
        assert out.exit_code == 3
        summary = json.loads((dest / "summary.json").read_text())
        kinds = [f["type"] for f in summary["flags"]]
        assert "stability_below_half_delta" in kinds

    def test_margin_violation_is_config_error(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json",
                           {**ZERO_SIM, "phi0": {"cos": {"1": 0.2}}})
        out = runner.invoke(main, ["simulate", "--config", cfg,
                                   "--output", str(tmp_path / "o")])
        assert out.exit_code == 2

    def test_deterministic_artifacts(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json",
                           {**ZERO_SIM, "phi0": {"cos": {"1": 0.01}}})
        a, b = tmp_path / "a", tmp_path / "b"
        for dest in (a, b):
            out = runner.invoke(main, ["simulate", "--config", cfg,
                                       "--output", str(dest), "--quiet"])
            assert out.exit_code == 0
        for name in ("trajectory.csv", "final_modes.csv", "summary.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_output_env_var(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json", ZERO_SIM)
        dest = tmp_path / "from_env"
        out = runner.invoke(main, ["simulate", "--config", cfg],
                            env={"AMP_SHEET_OUTPUT": str(dest)})
        assert out.exit_code == 0
        assert (dest / "summary.json").exists()


class TestLinearized:
    def test_forced_run(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "mu": 1.0, "delta": 0.9, "grid_n": 32, "galerkin_N": 8,
            "dt": 0.002, "t_final": 0.3,
            "base": {"cos": {"1": 0.02}},
            "forcing_profile": {"cos": {"1": 0.5}, "sin": {"3": 0.3}},
            "envelope_center": 0.15, "envelope_width": 0.1,
        })
        dest = tmp_path / "o"
        out = runner.invoke(main, ["linearized", "--config", cfg,
                                   "--output", str(dest), "--quiet"])
        assert out.exit_code == 0
        summary = json.loads((dest / "summary.json").read_text())
        assert summary["final_h1"] > 0.0


class TestGrowth:
    def test_elliptic_rates(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "mu": -1.0, "delta": 0.9, "grid_n": 32, "galerkin_N": 10,
            "dt": 0.002, "t_final": 0.5, "modes": [4, 8], "epsilon": 1e-6,
        })
        dest = tmp_path / "o"
        out = runner.invoke(main, ["growth", "--config", cfg,
                                   "--output", str(dest), "--quiet"])
        assert out.exit_code == 0
        summary = json.loads((dest / "summary.json").read_text())
        assert summary["rates"]["4"] == pytest.approx(4.0, rel=0.05)
        assert summary["rates"]["8"] == pytest.approx(8.0, rel=0.05)

    def test_mode_outside_band_rejected(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "mu": -1.0, "delta": 0.9, "grid_n": 32, "galerkin_N": 8,
            "dt": 0.002, "t_final": 0.2, "modes": [12],
        })
        out = runner.invoke(main, ["growth", "--config", cfg,
                                   "--output", str(tmp_path / "o")])
        assert out.exit_code == 2


class TestVerifyIdentities:
    def test_battery_passes(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json", {"samples": 10, "grid_n": 64})
        dest = tmp_path / "o"
        out = runner.invoke(main, ["verify-identities", "--config", cfg,
                                   "--output", str(dest)])
        assert out.exit_code == 0
        assert "PASS" in out.output
        report = json.loads((dest / "identities.json").read_text())
        assert report["report"]["passed"] is True
        assert report["version"]

    def test_seed_override_lands_in_config(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json",
                           {"samples": 5, "grid_n": 64, "seed": 5})
        dest = tmp_path / "o"
        out = runner.invoke(main, ["verify-identities", "--config", cfg,
                                   "--output", str(dest), "--seed", "7"])
        assert out.exit_code == 0
        report = json.loads((dest / "identities.json").read_text())
        assert report["config"]["seed"] == 7


class TestVerifyEstimates:
    def test_unknown_selector(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json", {"estimate": "nope"})
        out = runner.invoke(main, ["verify-estimates", "--config", cfg,
                                   "--output", str(tmp_path / "o")])
        assert out.exit_code == 2

    def test_selector_required(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json", {})
        out = runner.invoke(main, ["verify-estimates", "--config", cfg,
                                   "--output", str(tmp_path / "o")])
        assert out.exit_code == 2

    def test_energy_small_campaign(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "estimate": "energy", "pairs": 2, "gammas": [2.0, 4.0],
            "grid_n": 32, "dt": 0.004,
        })
        dest = tmp_path / "o"
        out = runner.invoke(main, ["verify-estimates", "--config", cfg,
                                   "--output", str(dest), "--quiet"])
        assert out.exit_code == 0
        report = json.loads((dest / "estimate_energy.json").read_text())
        assert report["passed"] is True
        assert len(report["pairs"]) == 2

    def test_forcing_estimate(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "estimate": "forcing", "delta": 0.75, "nu": 6,
            "phi0": {"cos": {"1": 0.1}},
        })
        dest = tmp_path / "o"
        out = runner.invoke(main, ["verify-estimates", "--config", cfg,
                                   "--output", str(dest), "--quiet"])
        assert out.exit_code == 0
        report = json.loads((dest / "estimate_forcing.json").read_text())
        assert 0.95 <= report["order"] <= 2.2


class TestCommutatorConstants:
    def test_single_lemma(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json", {
            "lemma": "A1_comm_1", "samples": 8, "n_lo": 64, "n_hi": 128,
        })
        dest = tmp_path / "o"
        out = runner.invoke(main, ["commutator-constants", "--config", cfg,
                                   "--output", str(dest), "--quiet"])
        assert out.exit_code == 0
        report = json.loads((dest / "constants.json").read_text())
        assert report["passed"] is True
        rows = (dest / "constants.csv").read_text().splitlines()
        assert rows[3].startswith("A1_comm_1,")

    def test_unknown_lemma(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json", {"lemma": "A9"})
        out = runner.invoke(main, ["commutator-constants", "--config", cfg,
                                   "--output", str(tmp_path / "o")])
        assert out.exit_code == 2


class TestNashMoser:
    NM = {"mu": 1.0, "delta": 0.9, "grid_n": 32, "galerkin_N": 10,
          "dt": 0.002, "t_final": 0.5, "phi0": {"cos": {"1": 0.01}}}

    def test_converged_run(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json", self.NM)
        dest = tmp_path / "o"
        out = runner.invoke(main, ["nash-moser", "--config", cfg,
                                   "--output", str(dest), "--quiet"])
        assert out.exit_code == 0
        report = json.loads((dest / "nash_moser.json").read_text())
        assert report["outcome"] == "converged"
        assert report["report"]["converged"] is True
        # CSV numbers carry full double precision
        line = (dest / "residuals.csv").read_text().splitlines()[3]
        first_residual = float(line.split(",")[1])
        assert first_residual == report["report"]["residual_norms"][0]

    def test_exhausted_iterations_flagged(self, runner, tmp_path):
        cfg = write_config(tmp_path, "c.json", {**self.NM, "max_iters": 1})
        dest = tmp_path / "o"
        out = runner.invoke(main, ["nash-moser", "--config", cfg,
                                   "--output", str(dest), "--quiet"])
        assert out.exit_code == 3
        report = json.loads((dest / "nash_moser.json").read_text())
        assert report["outcome"] == "exhausted_max_iters"
