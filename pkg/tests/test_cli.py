"""CLI surface: report contents, CSV contract, config merging, exit codes,
and figure reproduction plumbing."""
import json
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

import hsc.cli as cli
from hsc import ConvergenceError, SystemParams, parse_distribution_spec
from hsc.cli import (
    CSV_HEADER,
    ResultRow,
    SweepSpec,
    main,
    rows_to_csv,
    run_analyze,
    run_reproduce,
    run_simulate,
    run_sweep,
)


def params(text="exp:mean=1.0", lam=1.1, u0=10.0):
    return SystemParams(lam=lam, packet=parse_distribution_spec(text), p=1.0, u0=u0)


class TestAnalyzeReport:
    def test_supercritical_fields(self):
        report = run_analyze(params())
        assert report["verdict"] == "SelfSustainablePossible"
        assert report["rho"] == pytest.approx(1.1)
        assert report["adjustment_coefficient"]["r_star"] == pytest.approx(0.1)
        assert report["adjustment_coefficient"]["method"] == "closed-form"
        assert report["psi_exact"] == pytest.approx(0.334436, abs=1e-6)
        assert report["psi_bound"] == pytest.approx(0.367879, abs=1e-6)
        assert report["psi_asymptotic"] == pytest.approx(report["psi_exact"], rel=1e-9)
        req = report["required_u0"]
        assert set(req) == {"0.1", "0.01", "0.001"}
        assert req["0.01"] == pytest.approx(46.0517, abs=1e-3)

    def test_subcritical_fields(self):
        report = run_analyze(params(lam=0.9, u0=0.0))
        assert report["verdict"] == "UnsustainableCertain"
        assert report["psi_exact"] == 1.0
        assert report["stationary_outage"] == pytest.approx(0.1)
        assert "adjustment_coefficient" not in report
        q = report["outage_duration_quantiles"]
        assert q["0.5"] == pytest.approx(math.log(2.0) / 0.9)

    def test_critical_boundary(self):
        report = run_analyze(params(lam=1.0, u0=5.0))
        assert report["verdict"] == "UnsustainableCertain"
        assert report["psi_exact"] == 1.0
        assert "stationary_outage" not in report


class TestSimulateReport:
    def test_fields_and_analytic_reference(self):
        report = run_simulate(params(u0=2.0), trials=200, horizon=100.0, seed=4)
        assert report["trials"] == 200
        assert 0.0 <= report["psi_mc"] <= 1.0
        assert report["ci95"][0] <= report["psi_mc"] <= report["ci95"][1]
        assert report["psi_exact"] == pytest.approx(
            run_analyze(params(u0=2.0))["psi_exact"]
        )

    def test_subcritical_reference_is_one(self):
        report = run_simulate(params(lam=0.8, u0=1.0), 50, 50.0, 1)
        assert report["psi_exact"] == 1.0


class TestSweep:
    def test_analytic_only_frozen_column(self):
        spec = SweepSpec(
            u0_grid=[0.0, 5.0, 10.0],
            rho_list=[1.1],
            dist_list=["exp:mean=1.0"],
            trials=0,
        )
        rows = run_sweep(spec)
        got = [r.psi_exact for r in rows]
        expect = [0.9090909090909091, 0.5513915088296667, 0.3344358556104021]
        assert got == pytest.approx(expect, rel=1e-12)
        assert all(r.psi_mc is None and r.ci_lo is None and r.ci_hi is None for r in rows)
        assert all(r.trials == 0 for r in rows)

    def test_subcritical_rows_have_certain_outage(self):
        spec = SweepSpec(
            u0_grid=[0.0, 4.0],
            rho_list=[0.9, 1.0],
            dist_list=["det:mean=1.0"],
            trials=0,
        )
        for row in run_sweep(spec):
            assert row.psi_exact == 1.0
            assert row.r_star is None
            assert row.psi_bound is None

    def test_bound_dominates_exact_everywhere(self):
        spec = SweepSpec(
            u0_grid=[float(u) for u in range(0, 22, 2)],
            rho_list=[1.1, 1.3],
            dist_list=["exp:mean=1.0", "det:mean=1.0", "unif:mean=1.0"],
            trials=0,
        )
        for row in run_sweep(spec):
            assert row.psi_exact <= row.psi_bound

    def test_single_point_agrees_with_analyze(self):
        spec = SweepSpec(
            u0_grid=[10.0], rho_list=[1.1], dist_list=["exp:mean=1.0"], trials=0
        )
        row = run_sweep(spec)[0]
        report = run_analyze(params())
        assert row.psi_exact == report["psi_exact"]
        assert row.r_star == report["adjustment_coefficient"]["r_star"]
        assert row.psi_bound == report["psi_bound"]

    def test_lambda_derived_per_point(self):
        # rho = 1.2 with mean 2 and p = 0.5 implies lam = 0.3; check via the
        # emitted r_star, which the exponential closed form ties to lam
        spec = SweepSpec(
            u0_grid=[0.0], rho_list=[1.2], dist_list=["exp:mean=2.0"], p=0.5, trials=0
        )
        row = run_sweep(spec)[0]
        assert row.r_star == pytest.approx((1.2 - 1.0) / 2.0)
        assert row.psi_exact == pytest.approx(1.0 / 1.2)

    def test_failed_point_is_named(self):
        spec = SweepSpec(
            u0_grid=[1.0], rho_list=[2.5], dist_list=["exp:mean=1.0"], trials=0
        )
        object.__setattr__(spec, "rho_list", [float("nan")])
        with pytest.raises(Exception) as err:
            run_sweep(spec)
        assert "rho=nan" in str(err.value)

    def test_grid_validation(self):
        with pytest.raises(ValueError):
            SweepSpec(u0_grid=[], rho_list=[1.1], dist_list=["exp:mean=1.0"])
        with pytest.raises(ValueError):
            SweepSpec(u0_grid=[1.0], rho_list=[-0.5], dist_list=["exp:mean=1.0"])
        with pytest.raises(ValueError):
            SweepSpec(u0_grid=[1.0], rho_list=[1.1], dist_list=["exp:mean=1.0"], trials=-1)


class TestCsv:
    def test_header_is_the_contract(self):
        assert (
            CSV_HEADER
            == "dist,rho,u0,r_star,psi_exact,psi_bound,psi_mc,ci_lo,ci_hi,trials,horizon,seed"
        )

    def test_round_trip_exact(self):
        row = ResultRow(
            dist="exp:mean=1.0",
            rho=1.1,
            u0=0.1 + 0.2,
            r_star=0.10000000000000009,
            psi_exact=1.0 / 3.0,
            psi_bound=math.exp(-1.0),
            psi_mc=None,
            ci_lo=None,
            ci_hi=None,
            trials=0,
            horizon=1000.0,
            seed=42,
        )
        text = rows_to_csv([row])
        lines = text.splitlines()
        assert lines[0] == CSV_HEADER
        fields = lines[1].split(",")
        assert fields[0] == "exp:mean=1.0"
        assert float(fields[1]) == 1.1
        assert float(fields[2]) == 0.1 + 0.2
        assert float(fields[3]) == 0.10000000000000009
        assert float(fields[4]) == 1.0 / 3.0
        assert fields[6] == "" and fields[7] == "" and fields[8] == ""
        assert fields[9] == "0" and fields[11] == "42"
        assert text.endswith("\n") and "\r" not in text

    @given(
        x=st.floats(
            allow_nan=False, allow_infinity=False, min_value=1e-300, max_value=1e300
        )
    )
    def test_float_serialization_round_trips(self, x):
        row = ResultRow("det:mean=1.0", x, 0.0, None, 1.0, None, None, None, None, 0, 1.0, 0)
        line = rows_to_csv([row]).splitlines()[1]
        assert float(line.split(",")[1]) == x


class TestMainEntry:
    def test_analyze_to_file(self, tmp_path, capsys):
        out = tmp_path / "report.json"
        code = main(
            ["analyze", "--lam", "1.1", "--packet", "exp:mean=1.0", "--u0", "10",
             "--out", str(out)]
        )
        assert code == 0
        report = json.loads(out.read_text())
        assert report["psi_exact"] == pytest.approx(0.334436, abs=1e-6)

    def test_sweep_stdout(self, capsys):
        code = main(
            ["sweep", "--dist", "det:mean=1.0", "--rho", "1.2", "--u0-grid", "0,2",
             "--trials", "0"]
        )
        assert code == 0
        outp = capsys.readouterr().out
        lines = outp.strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len(lines) == 3

    def test_simulate_stdout(self, capsys):
        code = main(
            ["simulate", "--lam", "1.1", "--packet", "exp:mean=1.0", "--u0", "3",
             "--trials", "50", "--horizon", "50", "--seed", "9"]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["seed"] == 9 and report["trials"] == 50

    def test_config_merge_and_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps({"lam": 1.1, "packet": "exp:mean=1.0", "u0": 5.0})
        )
        code = main(["analyze", "--config", str(cfg)])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["params"]["u0"] == 5.0
        code = main(["analyze", "--config", str(cfg), "--u0", "10"])
        assert code == 0
        assert json.loads(capsys.readouterr().out)["params"]["u0"] == 10.0

    def test_config_for_sweep_grid(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(
            json.dumps(
                {"dist": "det:mean=1.0", "rho": "1.1", "u0_grid": [0.0, 1.0, 2.0],
                 "trials": 0}
            )
        )
        assert main(["sweep", "--config", str(cfg)]) == 0
        assert len(capsys.readouterr().out.strip().split("\n")) == 4

    def test_missing_required_is_exit_2(self, capsys):
        assert main(["analyze", "--packet", "exp:mean=1.0"]) == 2
        assert "--lam" in capsys.readouterr().err

    def test_parse_error_is_exit_2(self, capsys):
        assert main(["analyze", "--lam", "1.1", "--packet", "cauchy:mean=1"]) == 2

    def test_validation_error_is_exit_2(self, capsys):
        assert main(["analyze", "--lam", "-3", "--packet", "exp:mean=1.0"]) == 2

    def test_bad_grid_is_exit_2(self, capsys):
        assert main(["sweep", "--u0-grid", "0:3:10", "--trials", "0"]) == 2
        assert main(["sweep", "--u0-grid", "0:2:x", "--trials", "0"]) == 2

    def test_numeric_error_is_exit_3(self, capsys, monkeypatch):
        def boom(*a, **k):
            raise ConvergenceError("stalled")

        monkeypatch.setattr(cli, "solve_adjustment_coefficient", boom)
        assert main(["analyze", "--lam", "1.1", "--packet", "det:mean=1.0"]) == 3
        assert "stalled" in capsys.readouterr().err

    def test_io_error_is_exit_4(self, tmp_path, capsys):
        missing = tmp_path / "absent" / "x.csv"
        code = main(
            ["sweep", "--rho", "1.1", "--u0-grid", "0,1", "--trials", "0",
             "--out", str(missing)]
        )
        assert code == 4

    def test_usage_error_is_exit_2(self, capsys):
        assert main(["frobnicate"]) == 2
        assert main([]) == 2

    def test_version_flag_is_exit_0(self, capsys):
        assert main(["--version"]) == 0

    def test_u0_grid_forms(self):
        assert cli._parse_u0_grid("0:2:6") == [0.0, 2.0, 4.0, 6.0]
        assert cli._parse_u0_grid("1,3.5") == [1.0, 3.5]
        assert cli._parse_u0_grid([0, 7]) == [0.0, 7.0]
        grid = cli._parse_u0_grid("0:0.1:0.5")
        assert len(grid) == 6 and grid[-1] == pytest.approx(0.5)


class TestReproduce:
    def test_files_and_manifest_keys(self, tmp_path):
        paths = run_reproduce(5, tmp_path, trials=0, horizon=10.0, seed=1)
        text = paths["csv"].read_text(encoding="utf-8")
        lines = text.strip().split("\n")
        assert lines[0] == CSV_HEADER
        assert len(lines) == 1 + 3 * 21  # three laws x u0 grid 0..40 step 2
        manifest = json.loads(paths["manifest"].read_text())
        assert set(manifest) == {"figure", "params", "grids", "seed", "tool_version"}
        assert manifest["figure"] == 5
        assert manifest["grids"]["u0"][:3] == [0.0, 2.0, 4.0]
        assert manifest["grids"]["rho"] == [1.1]

    def test_figures_2_to_4_have_three_series(self, tmp_path):
        paths = run_reproduce(3, tmp_path, trials=0, horizon=10.0, seed=1)
        lines = paths["csv"].read_text().strip().split("\n")
        assert len(lines) == 1 + 3 * 21
        assert all(line.startswith("det:mean=1.0") for line in lines[1:])

    def test_unknown_figure_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            run_reproduce(7, tmp_path, trials=0, horizon=10.0, seed=1)

    def test_rerun_is_byte_identical(self, tmp_path):
        a = run_reproduce(2, tmp_path / "a", trials=40, horizon=50.0, seed=6)
        b = run_reproduce(2, tmp_path / "b", trials=40, horizon=50.0, seed=6)
        assert a["csv"].read_bytes() == b["csv"].read_bytes()
        assert a["manifest"].read_bytes() == b["manifest"].read_bytes()

    def test_cli_reproduce_exit_codes(self, tmp_path, capsys):
        assert main(["reproduce", "--figure", "9", "--out", str(tmp_path)]) == 2
        assert (
            main(
                ["reproduce", "--figure", "4", "--trials", "0", "--horizon", "5",
                 "--out", str(tmp_path)]
            )
            == 0
        )
        printed = capsys.readouterr().out.strip().split("\n")
        assert printed[0].endswith("figure4.csv")
        assert printed[1].endswith("figure4.manifest.json")
