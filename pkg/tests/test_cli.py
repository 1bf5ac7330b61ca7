import os
from fractions import Fraction

import numpy as np
import pytest

from interprisk.cli import (
    ConfigError,
    format_value,
    main,
    parse_config_text,
    render_config,
    resolve_settings,
)

FAST_SIMULATE = """
cases = 1
n = 40
n_validation = 25
n_test = 20
r = 0, 0.05
methods = LP, 1N, ZERO
replications = 2
bandwidth_count = 4
resolution = 21
"""

FAST_THEORY = """
deltas = 0, 1
k_values = 1, 10
n_values = 200, 400
nrd = 0.5
n_mc = 20000
n_designs = 5
resolution = 500
"""


class TestConfigParsing:
    def test_basic_lines(self):
        out = parse_config_text("a = 1\nb=two\n")
        assert out == {"a": "1", "b": "two"}

    def test_comments_and_blanks(self):
        out = parse_config_text("# header\n\na = 1  # trailing\n   \n")
        assert out == {"a": "1"}

    def test_later_key_wins(self):
        assert parse_config_text("a = 1\na = 2\n") == {"a": "2"}

    def test_error_reports_line_number(self):
        with pytest.raises(ConfigError, match="line 2"):
            parse_config_text("a = 1\nnonsense\n")

    def test_empty_key_rejected(self):
        with pytest.raises(ConfigError, match="empty key"):
            parse_config_text("= 3\n")

    def test_render_round_trip(self):
        settings = {"cases": "1, 2", "seed": "17"}
        assert parse_config_text(render_config(settings)) == settings


class Args:
    def __init__(self, **kw):
        self.config = kw.pop("config", None)
        self.seed = kw.pop("seed", None)
        self.workers = kw.pop("workers", None)
        self.out = kw.pop("out", None)
        assert not kw


class TestResolveSettings:
    def test_defaults(self):
        settings = resolve_settings("simulate", Args())
        assert settings["n"] == (80, 150, 300)
        assert settings["replications"] == 100
        assert settings["noise_is_variance"] is True

    def test_file_values_override_defaults(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("replications = 7\nr = 0, 0.1\n")
        settings = resolve_settings("simulate", Args(config=str(cfg)))
        assert settings["replications"] == 7
        assert settings["r"] == (0.0, 0.1)

    def test_flags_override_file(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("seed = 5\n")
        settings = resolve_settings("simulate", Args(config=str(cfg), seed=11))
        assert settings["seed"] == 11

    def test_unknown_key_named(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("bandwidht = 3\n")
        with pytest.raises(ConfigError, match="bandwidht.*simulate"):
            resolve_settings("simulate", Args(config=str(cfg)))

    def test_bad_value_named(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("replications = many\n")
        with pytest.raises(ConfigError, match="replications"):
            resolve_settings("simulate", Args(config=str(cfg)))

    def test_missing_file(self):
        with pytest.raises(ConfigError, match="cannot read"):
            resolve_settings("simulate", Args(config="/no/such/file.cfg"))

    def test_fraction_exponents(self, tmp_path):
        cfg = tmp_path / "p.cfg"
        cfg.write_text("exponents = 1/10, 1/3, 1/2\n")
        settings = resolve_settings("phase-diagram", Args(config=str(cfg)))
        assert settings["exponents"] == (
            Fraction(1, 10),
            Fraction(1, 3),
            Fraction(1, 2),
        )


class TestFormatValue:
    def test_floats_compact(self):
        assert format_value(0.05) == "0.05"
        assert format_value(1.0 / 3.0) == "0.333333333"

    def test_bools_lowercase(self):
        assert format_value(True) == "true"
        assert format_value(False) == "false"

    def test_ints_plain(self):
        assert format_value(np.int64(80)) == "80"

    def test_fraction_as_float(self):
        assert format_value(Fraction(1, 2)) == "0.5"


def run_cli(args):
    return main(list(args))


class TestSimulateCommand:
    def write_cfg(self, tmp_path, text=FAST_SIMULATE):
        cfg = tmp_path / "sim.cfg"
        cfg.write_text(text)
        return str(cfg)

    def test_writes_both_csvs(self, tmp_path):
        cfg = self.write_cfg(tmp_path)
        out = tmp_path / "run1"
        assert run_cli(["simulate", "--config", cfg, "--out", str(out)]) == 0
        records = (out / "records.csv").read_text().splitlines()
        summary = (out / "summary.csv").read_text().splitlines()
        assert records[0] == "case,n,r,method,rep,adv_loss,std_loss,train_mse,max_resid,bandwidth"
        assert summary[0] == "case,n,r,method,median,se"
        # 3 methods x 2 radii x 2 reps data rows; 3 x 2 summary rows
        assert len(records) == 1 + 12
        assert len(summary) == 1 + 6

    def test_byte_identical_reruns(self, tmp_path):
        cfg = self.write_cfg(tmp_path)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert run_cli(["simulate", "--config", cfg, "--out", str(out1)]) == 0
        assert run_cli(["simulate", "--config", cfg, "--out", str(out2)]) == 0
        for name in ("records.csv", "summary.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_workers_do_not_change_bytes(self, tmp_path):
        cfg = self.write_cfg(tmp_path)
        out1, out2 = tmp_path / "w1", tmp_path / "w4"
        assert run_cli(["simulate", "--config", cfg, "--out", str(out1), "--workers", "1"]) == 0
        assert run_cli(["simulate", "--config", cfg, "--out", str(out2), "--workers", "4"]) == 0
        for name in ("records.csv", "summary.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_seed_changes_results(self, tmp_path):
        cfg = self.write_cfg(tmp_path)
        out1, out2 = tmp_path / "s0", tmp_path / "s9"
        run_cli(["simulate", "--config", cfg, "--out", str(out1)])
        run_cli(["simulate", "--config", cfg, "--out", str(out2), "--seed", "9"])
        assert (out1 / "records.csv").read_bytes() != (out2 / "records.csv").read_bytes()

    def test_unknown_key_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("replicatoins = 3\n")
        assert run_cli(["simulate", "--config", str(cfg)]) == 2
        assert "replicatoins" in capsys.readouterr().err

    def test_invalid_method_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "bad.cfg"
        cfg.write_text("methods = LP, BOGUS\n")
        assert run_cli(["simulate", "--config", str(cfg), "--out", str(tmp_path)]) == 2

    def test_fit_failures_exit_3(self, tmp_path, monkeypatch, capsys):
        from interprisk.estimators import FitError

        def boom(*args, **kwargs):
            raise FitError("forced")

        monkeypatch.setattr("interprisk.experiments.select_bandwidth", boom)
        cfg = self.write_cfg(tmp_path)
        out = tmp_path / "broken"
        code = run_cli(["simulate", "--config", cfg, "--out", str(out)])
        assert code == 3
        assert "failure-marker" in capsys.readouterr().err
        assert (out / "records.csv").exists()


class TestPhaseDiagramCommand:
    def test_golden_output(self, tmp_path):
        cfg = tmp_path / "p.cfg"
        cfg.write_text("regime = low\nbeta = 1\nd = 1\nexponents = 1/10, 1/3, 1/2\n")
        out = tmp_path / "phase"
        assert run_cli(["phase-diagram", "--config", str(cfg), "--out", str(out)]) == 0
        lines = (out / "phase.csv").read_text().splitlines()
        assert lines == [
            "r_exponent,regime,dominant_term,boundary_flag",
            "0.1,low,attack,false",
            "0.333333333,low,attack,true",
            "0.5,low,estimation,false",
        ]

    def test_high_regime_nonconverging_label(self, tmp_path):
        cfg = tmp_path / "p.cfg"
        cfg.write_text("regime = high\nbeta = 1\nd = 1\nexponents = 1/2, 2\n")
        out = tmp_path / "phase"
        assert run_cli(["phase-diagram", "--config", str(cfg), "--out", str(out)]) == 0
        body = (out / "phase.csv").read_text()
        assert "interpolation-nonconverging" in body

    def test_seed_flag_rejected_by_parser(self):
        with pytest.raises(SystemExit):
            run_cli(["phase-diagram", "--seed", "3"])

    def test_moderate_regime_exits_2(self, tmp_path, capsys):
        cfg = tmp_path / "p.cfg"
        cfg.write_text("regime = moderate\n")
        assert run_cli(["phase-diagram", "--config", str(cfg), "--out", str(tmp_path)]) == 2


class TestTheoryCheckCommand:
    def test_all_checks_pass_clean(self, tmp_path):
        cfg = tmp_path / "t.cfg"
        cfg.write_text(FAST_THEORY)
        out = tmp_path / "theory"
        assert run_cli(["theory-check", "--config", str(cfg), "--out", str(out)]) == 0
        lines = (out / "theory.csv").read_text().splitlines()
        assert lines[0] == "check,param,closed_form,mc_estimate,mc_se,z,pass"
        rows = [line.split(",") for line in lines[1:]]
        assert {row[0] for row in rows} == {
            "soft-moment",
            "stein-bound",
            "max-moment",
            "cost-scaling",
        }
        assert all(row[-1] == "true" for row in rows)

    def test_corruption_hook_trips_checks(self, tmp_path):
        cfg = tmp_path / "t.cfg"
        cfg.write_text(FAST_THEORY + "corrupt = 0.5\n")
        out = tmp_path / "theory"
        assert run_cli(["theory-check", "--config", str(cfg), "--out", str(out)]) == 0
        lines = (out / "theory.csv").read_text().splitlines()
        rows = [line.split(",") for line in lines[1:]]
        failed = {row[0] for row in rows if row[-1] == "false"}
        assert "soft-moment" in failed
        assert "stein-bound" in failed
        # the corruption shifts closed forms only; scaling ratios are untouched
        assert all(row[-1] == "true" for row in rows if row[0] == "cost-scaling")

    def test_deterministic(self, tmp_path):
        cfg = tmp_path / "t.cfg"
        cfg.write_text(FAST_THEORY)
        out1, out2 = tmp_path / "t1", tmp_path / "t2"
        run_cli(["theory-check", "--config", str(cfg), "--out", str(out1)])
        run_cli(["theory-check", "--config", str(cfg), "--out", str(out2)])
        assert (out1 / "theory.csv").read_bytes() == (out2 / "theory.csv").read_bytes()


class TestCurseCommand:
    def test_writes_expected_rows(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text(
            "case = 2\nmethod = 1N\nn = 40, 80\nreplications = 2\n"
            "resolution = 21\nr = 0.1\n"
        )
        out = tmp_path / "curse"
        assert run_cli(["curse", "--config", str(cfg), "--out", str(out)]) == 0
        lines = (out / "curse.csv").read_text().splitlines()
        assert lines[0] == "n,r,method,median,se,log_log_n"
        assert len(lines) == 3
        assert lines[1].startswith("40,0.1,1N,")
        assert lines[2].startswith("80,0.1,1N,")

    def test_unknown_rule_exits_2(self, tmp_path):
        cfg = tmp_path / "c.cfg"
        cfg.write_text("r_rule = exotic\nn = 40\nreplications = 1\n")
        assert run_cli(["curse", "--config", str(cfg), "--out", str(tmp_path)]) == 2
