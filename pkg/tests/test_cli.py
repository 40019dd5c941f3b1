"""Configuration parsing, CLI subcommands and artifact reproducibility."""

import json

import numpy as np
import pytest

import hartreelab as hl
from hartreelab.cli import main
from hartreelab.config import ConfigError, parse_config

MINIMAL = """
[grid]
N = 16
L = 12.0

[kernel]
family = "power_law"
alpha = 1.0
g = 1.0
"""

FAST_GS = MINIMAL + """
[groundstate]
lambda = 6.0
tau = 1.5
max_iter = 400
tol_residual = 1e-5
"""


class TestParseConfig:
    def test_minimal_defaults(self):
        cfg = parse_config(MINIMAL)
        assert cfg.grid.N == 16 and cfg.grid.L == 12.0
        assert cfg.kernel.family == "power_law" and cfg.kernel.alpha == 1.0
        assert cfg.groundstate.lambdas == [1.0]
        assert cfg.groundstate.tau == 0.1
        assert cfg.evolve.T == 1.0 and cfg.evolve.initial == "groundstate"
        assert cfg.stability.deltas == [0.01]

    def test_exponent_out_of_range(self):
        bad = MINIMAL.replace("alpha = 1.0", "alpha = 2.5")
        with pytest.raises(ConfigError, match="0 < alpha <= 2"):
            parse_config(bad)

    def test_malformed_number_reports_location(self):
        bad = MINIMAL.replace("L = 12.0", "L = 12..0")
        with pytest.raises(ConfigError, match=r"line"):
            parse_config(bad)

    def test_unknown_key_and_section(self):
        with pytest.raises(ConfigError, match="unknown key 'Nx'"):
            parse_config(MINIMAL.replace("N = 16", "Nx = 16"))
        with pytest.raises(ConfigError, match=r"unknown section"):
            parse_config(MINIMAL + "\n[mystery]\nx = 1\n")

    def test_type_mismatch(self):
        with pytest.raises(ConfigError, match="expected int"):
            parse_config(MINIMAL.replace("N = 16", 'N = "sixteen"'))

    def test_grid_range_checks(self):
        with pytest.raises(ConfigError, match="even"):
            parse_config(MINIMAL.replace("N = 16", "N = 15"))

    def test_missing_kernel(self):
        with pytest.raises(ConfigError, match=r"missing \[kernel\]"):
            parse_config("[grid]\nN = 16\nL = 12.0\n")

    def test_missing_snapshot_path(self):
        bad = MINIMAL + "\n[evolve]\ninitial = \"/no/such/file.hfld\"\n"
        with pytest.raises(ConfigError, match="does not exist"):
            parse_config(bad)


class TestCliRuns:
    def _run(self, tmp_path, sub, text, extra=()):
        cfg = tmp_path / "run.toml"
        cfg.write_text(text)
        out = tmp_path / f"out_{sub}"
        code = main([sub, "--config", str(cfg), "--out", str(out), "--seed", "3", *extra])
        return code, out

    def test_unknown_subcommand_usage_exit(self, tmp_path, capsys):
        cfg = tmp_path / "run.toml"
        cfg.write_text(MINIMAL)
        code = main(["frobnicate", "--config", str(cfg)])
        assert code == 2

    def test_config_error_emits_machine_readable_json(self, tmp_path, capsys):
        cfg = tmp_path / "bad.toml"
        cfg.write_text(MINIMAL.replace("alpha = 1.0", "alpha = 9.0"))
        code = main(["energy", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert code == 1
        err = capsys.readouterr().err
        rec = json.loads(err)
        assert rec["error"]["type"] == "ConfigError"

    def test_energy_subcommand(self, tmp_path):
        code, out = self._run(tmp_path, "energy", MINIMAL)
        assert code == 0
        rec = json.loads((out / "energy.json").read_text())
        assert rec["total"] == rec["kinetic"] + rec["interaction"]
        man = json.loads((out / "manifest.json").read_text())
        assert man["subcommand"] == "energy" and len(man["config_sha256"]) == 64

    def test_norms_subcommand(self, tmp_path):
        code, out = self._run(tmp_path, "norms", MINIMAL)
        assert code == 0
        recs = json.loads((out / "norms.json").read_text())
        assert any(r["method"] == "infimal-core-norm" and r["value"] == 0.0 for r in recs)
        assert any(r["value"] == "inf" for r in recs)  # untruncated coulomb

    def test_groundstate_writes_snapshot_and_result(self, tmp_path):
        code, out = self._run(tmp_path, "groundstate", FAST_GS)
        assert code == 0
        rec = json.loads((out / "result.json").read_text())
        assert rec["lambda"] == 6.0 and rec["I_lambda"] < 0
        u = hl.load_field(out / "u_star.hfld")
        assert abs(hl.mass(u) - 6.0) < 1e-10

    def test_sweep_csv_deterministic(self, tmp_path):
        text = MINIMAL + """
[groundstate]
lambdas = [5.0, 6.0]
tau = 1.5
max_iter = 300
tol_residual = 1e-4
"""
        _, out1 = self._run(tmp_path, "sweep-lambda", text)
        csv1 = (out1 / "sweep.csv").read_bytes()
        cfg = tmp_path / "run.toml"
        out2 = tmp_path / "again"
        code = main(["sweep-lambda", "--config", str(cfg), "--out", str(out2), "--seed", "3"])
        assert code == 0
        assert (out2 / "sweep.csv").read_bytes() == csv1
        header = csv1.decode().splitlines()
        assert header[0].startswith("# hartreelab csv schema v")
        assert header[1] == "lambda,I,mu,residual,converged"

    def test_evolve_trace(self, tmp_path):
        text = FAST_GS + """
[evolve]
T = 0.02
dt = 0.002
sample_every = 5
"""
        code, out = self._run(tmp_path, "evolve", text)
        assert code == 0
        lines = (out / "trace.csv").read_text().splitlines()
        assert lines[1] == "t,mass,energy,h1,orbit_dist"
        assert len(lines) > 3
        rec = json.loads((out / "evolve.json").read_text())
        assert rec["aborted"] is False

    def test_rearrange_check(self, tmp_path):
        code, out = self._run(tmp_path, "rearrange-check", MINIMAL)
        assert code == 0
        rec = json.loads((out / "rearrange.json").read_text())
        assert len(rec["reports"]) == 4

    def test_kconst(self, tmp_path):
        text = MINIMAL.replace("N = 16", "N = 24")
        code, out = self._run(tmp_path, "kconst", text)
        assert code == 0
        rec = json.loads((out / "kconst.json").read_text())
        assert rec["k_lower_bound"] > 0.2
        assert rec["lambda_star_upper"] == "inf"  # vanishing core norm
