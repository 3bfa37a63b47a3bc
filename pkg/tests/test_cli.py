import json

import pytest

from bhpert.cli import (
    EXIT_CAPACITY,
    EXIT_COMPUTE,
    EXIT_OK,
    EXIT_USAGE,
    main,
)


def run(args):
    return main(args)


class TestCoefficients:
    def test_known_value_emitted(self, tmp_path):
        out = tmp_path / "gamma.csv"
        rc = run([
            "coefficients", "--mu", "0.5", "--d", "2", "--k", "1",
            "--nu-max", "0", "--out", str(out),
        ])
        assert rc == EXIT_OK
        lines = out.read_text().splitlines()
        data = [ln for ln in lines if not ln.startswith("#")]
        assert data[0] == "k,nu,gamma,displacement_table"
        k, nu, gamma, _ = data[1].split(",", 3)
        assert (k, nu) == ("1", "0")
        assert float(gamma) == pytest.approx(-6.0)

    def test_idempotent_data_section(self, tmp_path):
        args = [
            "coefficients", "--mu", "0.5", "--d", "1", "--k", "1",
            "--nu-max", "1",
        ]
        out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(args + ["--out", str(out1)]) == EXIT_OK
        assert run(args + ["--out", str(out2)]) == EXIT_OK

        def data(p):
            return [ln for ln in p.read_text().splitlines()
                    if not ln.startswith("#")]

        assert data(out1) == data(out2)

    def test_capacity_refusal(self, tmp_path):
        rc = run([
            "coefficients", "--mu", "0.5", "--d", "2", "--k", "1",
            "--nu-max", "12", "--max-order", "10",
            "--out", str(tmp_path / "x.csv"),
        ])
        assert rc == EXIT_CAPACITY

    def test_invalid_mu_is_compute_error(self, tmp_path):
        rc = run([
            "coefficients", "--mu", "1.5", "--d", "2", "--k", "1",
            "--nu-max", "0", "--out", str(tmp_path / "x.csv"),
        ])
        assert rc == EXIT_COMPUTE


class TestUsageErrors:
    def test_missing_subcommand(self):
        with pytest.raises(SystemExit) as exc:
            run([])
        assert exc.value.code == EXIT_USAGE

    def test_missing_required_flag(self):
        with pytest.raises(SystemExit) as exc:
            run(["coefficients"])
        assert exc.value.code == EXIT_USAGE

    def test_zeta_requires_twists(self, tmp_path):
        rc = run([
            "exponents", "--mu", "0.5", "--d", "1", "--nu-m", "2",
            "--zeta", "--out", str(tmp_path / "x.json"),
        ])
        assert rc == EXIT_USAGE


class TestConfigFile:
    def test_file_values_applied_and_flags_win(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("mu = 0.5\nd = 1\nnu-max = 0\n")
        out = tmp_path / "gamma.csv"
        rc = run([
            "coefficients", "--config", str(cfg), "--mu", "0.2",
            "--out", str(out),
        ])
        assert rc == EXIT_OK
        header = out.read_text()
        assert '"mu": 0.2' in header  # explicit flag overrides the file
        assert '"d": 1' in header

    def test_malformed_config(self, tmp_path):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("mu 0.5\n")
        rc = run(["coefficients", "--config", str(cfg), "--mu", "0.5"])
        assert rc == EXIT_USAGE


class TestPotential:
    def test_origin_row_is_zero(self, tmp_path):
        out = tmp_path / "pot.csv"
        rc = run([
            "potential", "--mu", "0.5", "--d", "1", "--nu-m", "2",
            "--j", "0.05", "--psi-sq-grid", "0,0.05,0.1",
            "--out", str(out),
        ])
        assert rc == EXIT_OK
        data = [ln for ln in out.read_text().splitlines()
                if not ln.startswith("#")][1:]
        first = data[0].split(",")
        assert float(first[2]) == 0.0
        assert float(first[3]) == 0.0

    def test_odd_order_flagged_unstable(self, tmp_path):
        # nu_m = 3 at this coupling has a6 < 0 in d=1
        out = tmp_path / "pot.csv"
        rc = run([
            "potential", "--mu", "0.5", "--d", "1", "--nu-m", "3",
            "--j", "0.15", "--psi-sq-grid", "0,0.1",
            "--out", str(out),
        ])
        assert rc == EXIT_OK
        data = [ln for ln in out.read_text().splitlines()
                if not ln.startswith("#")][1:]
        assert all(row.endswith("unstable") for row in data)


class TestOracleCommand:
    def test_passes(self, tmp_path):
        out = tmp_path / "report.json"
        rc = run([
            "oracle", "--max-total-order", "3", "--out", str(out),
        ])
        assert rc == EXIT_OK
        report = json.loads(out.read_text())
        assert report["passed"] is True
        assert report["provenance"]["config"]["max_total_order"] == 3


class TestLobe:
    def test_small_grid(self, tmp_path):
        out = tmp_path / "lobe.csv"
        rc = run([
            "lobe", "--d", "1", "--mu-grid", "0.4,0.5", "--nu-m", "4",
            "--out", str(out),
        ])
        assert rc == EXIT_OK
        data = [ln for ln in out.read_text().splitlines()
                if not ln.startswith("#")]
        assert data[0].startswith("mu_over_U,")
        assert len(data) == 3
