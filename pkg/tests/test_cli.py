import csv
import datetime as dt
import json
import math
import subprocess
import sys

import numpy as np
import pytest

from nsscurve import testkit
from nsscurve.cli import main, parse_grid, strip_timing
from nsscurve.curves import CurveParams

FAST = {"pso": {"max_iterations": 20}, "sa": {"max_iterations": 300, "blank_iterations": 50},
        "ga": {"max_iterations": 10}, "aco": {"max_iterations": 50}, "bfgs": {"barrier_stages": 3}}


@pytest.fixture(scope="module")
def data_dir(tmp_path_factory, sv_instance):
    d = tmp_path_factory.mktemp("data")
    sv_instance.write_csv(d)
    (d / "config.json").write_text(json.dumps(FAST))
    return d


def fit_args(data_dir, out, model="ns", optimizer="pso", starts=3, seed=7, extra=()):
    return ["fit", "--model", model, "--optimizer", optimizer, "--starts", str(starts), "--seed", str(seed),
            "--valuation-date", "2015-03-17", "--operations", str(data_dir / "closed_operations.csv"),
            "--offers", str(data_dir / "offers.csv"), "--config", str(data_dir / "config.json"),
            "--out", str(out), *extra]


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def write_params(path, params):
    path.write_text(json.dumps(params.to_dict()))
    return path


class TestFit:
    def test_deterministic(self, data_dir, tmp_path):
        for name in ("a", "b"):
            assert main(fit_args(data_dir, tmp_path / name)) == 0
        a = json.loads((tmp_path / "a" / "report_pso.json").read_text())
        b = json.loads((tmp_path / "b" / "report_pso.json").read_text())
        assert json.dumps(strip_timing(a)) == json.dumps(strip_timing(b))
        for name in ("best_params.json", "curve_samples.csv", "exclusions.jsonl"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_artifacts(self, data_dir, tmp_path):
        assert main(fit_args(data_dir, tmp_path)) == 0
        report = json.loads((tmp_path / "report_pso.json").read_text())
        assert report["model"] == "ns" and report["n_starts"] == 3 and len(report["runs"]) == 3
        params = CurveParams.from_dict(json.loads((tmp_path / "best_params.json").read_text()))
        assert params.kind.value == "ns"
        samples = read_rows(tmp_path / "curve_samples.csv")
        assert list(samples[0]) == ["tenor_years", "spot_rate", "forward_rate"]
        assert len(samples) == 400
        assert float(samples[0]["tenor_years"]) == 0.05 and float(samples[-1]["tenor_years"]) == 20.0

    def test_five_optimizer_comparison(self, data_dir, tmp_path):
        assert main(fit_args(data_dir, tmp_path, model="svensson", optimizer="pso,sa,ga,aco,bfgs")) == 0
        rows = read_rows(tmp_path / "comparison.csv")
        assert sorted(r["optimizer"] for r in rows) == ["aco", "bfgs", "ga", "pso", "sa"]
        values = [float(r["objective_value"]) for r in rows]
        assert values == sorted(values)
        for r in rows:
            stat = "min" if r["optimizer"] == "bfgs" else "mean"
            assert r["comparison"] == stat
            assert float(r["objective_value"]) == float(r[f"{stat}_value"])
            assert r["status"] == "ok"

    def test_missing_file(self, data_dir, tmp_path, capsys):
        args = fit_args(data_dir, tmp_path)
        missing = tmp_path / "nope.csv"
        args[args.index("--offers") + 1] = str(missing)
        assert main(args) == 2
        assert str(missing) in capsys.readouterr().err

    def test_unknown_optimizer(self, data_dir, tmp_path, capsys):
        assert main(fit_args(data_dir, tmp_path, optimizer="pso,tabu")) == 2
        assert "tabu" in capsys.readouterr().err

    def test_bad_config(self, data_dir, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"pso": {"swarm": 3}}))
        args = fit_args(data_dir, tmp_path / "out")
        args[args.index("--config") + 1] = str(cfg)
        assert main(args) == 2
        cfg.write_text(json.dumps({"genetic": {}}))
        assert main(args) == 2

    def test_too_few_bonds(self, data_dir, tmp_path, capsys):
        # a tiny cap excludes bonds one by one until too few remain
        assert main(fit_args(data_dir, tmp_path, extra=("--weight-cap", "0.01"))) == 2
        assert "exclusions" in capsys.readouterr().err

    def test_jobs_do_not_change_results(self, data_dir, tmp_path):
        assert main(fit_args(data_dir, tmp_path / "serial")) == 0
        assert main(fit_args(data_dir, tmp_path / "parallel", extra=("--jobs", "2"))) == 0
        a = json.loads((tmp_path / "serial" / "report_pso.json").read_text())
        b = json.loads((tmp_path / "parallel" / "report_pso.json").read_text())
        assert strip_timing(a) == strip_timing(b)


class TestPrice:
    def test_zero_coupon_oracle(self, tmp_path, capsys):
        params = write_params(tmp_path / "p.json", CurveParams.nelson_siegel(0.05, 0.0, 0.0, 1.0))
        bonds = tmp_path / "bonds.csv"
        bonds.write_text("instrument_id,issue_date,maturity_date,coupon_rate,periodicity,face\n"
                         "Z1,2014-03-17,2016-03-16,0,0,100\n"
                         "Z2,2014-03-17,2020-03-15,0,0,1000\n")
        assert main(["price", "--params", str(params), "--bonds", str(bonds),
                     "--valuation-date", "2015-03-17"]) == 0
        rows = list(csv.DictReader(capsys.readouterr().out.splitlines()))
        assert rows[0]["instrument_id"] == "Z1"
        assert float(rows[0]["dirty_price"]) == pytest.approx(100 * math.exp(-0.05), abs=1e-9)
        t = (dt.date(2020, 3, 15) - dt.date(2015, 3, 17)).days / 365
        assert float(rows[1]["dirty_price"]) == pytest.approx(1000 * math.exp(-0.05 * t), abs=1e-9)

    def test_empty_file(self, tmp_path):
        params = write_params(tmp_path / "p.json", testkit.TRUE_NS)
        bonds = tmp_path / "bonds.csv"
        bonds.write_text("instrument_id,issue_date,maturity_date,coupon_rate,periodicity\n")
        out = tmp_path / "prices.csv"
        assert main(["price", "--params", str(params), "--bonds", str(bonds),
                     "--valuation-date", "2015-03-17", "--out", str(out)]) == 0
        assert out.read_text() == "instrument_id,dirty_price\n"

    def test_matured_skipped(self, tmp_path, capsys, caplog):
        params = write_params(tmp_path / "p.json", testkit.TRUE_NS)
        bonds = tmp_path / "bonds.csv"
        bonds.write_text("instrument_id,issue_date,maturity_date,coupon_rate,periodicity\n"
                         "OLD,2010-01-01,2015-01-01,0.05,1\n"
                         "NEW,2014-01-01,2019-01-01,0.05,1\n")
        assert main(["price", "--params", str(params), "--bonds", str(bonds),
                     "--valuation-date", "2015-03-17"]) == 0
        captured = capsys.readouterr()
        assert [r["instrument_id"] for r in csv.DictReader(captured.out.splitlines())] == ["NEW"]
        assert "skipping OLD" in caplog.text

    def test_bad_bonds_file(self, tmp_path, capsys):
        params = write_params(tmp_path / "p.json", testkit.TRUE_NS)
        bonds = tmp_path / "bonds.csv"
        bonds.write_text("instrument_id,maturity_date\nX,2020-01-01\n")
        assert main(["price", "--params", str(params), "--bonds", str(bonds),
                     "--valuation-date", "2015-03-17"]) == 2
        assert "issue_date" in capsys.readouterr().err


class TestCurve:
    def run(self, capsys, params, *extra):
        assert main(["curve", "--params", str(params), *extra]) == 0
        return [{k: float(v) for k, v in r.items()} for r in csv.DictReader(capsys.readouterr().out.splitlines())]

    def test_constant_curve(self, tmp_path, capsys):
        p = write_params(tmp_path / "p.json", CurveParams.nelson_siegel(0.06, 0.0, 0.0, 2.0))
        rows = self.run(capsys, p)
        assert len(rows) == 400
        assert all(r["spot_rate"] == 0.06 and r["forward_rate"] == 0.06 for r in rows)

    def test_grid(self, tmp_path, capsys):
        p = write_params(tmp_path / "p.json", testkit.TRUE_NS)
        rows = self.run(capsys, p, "--grid", "1:3:1")
        assert [r["tenor_years"] for r in rows] == [1.0, 2.0, 3.0]

    def test_svensson_reduces_to_ns(self, tmp_path, capsys):
        ns = write_params(tmp_path / "ns.json", CurveParams.nelson_siegel(0.07, -0.03, 0.02, 0.6))
        sv = write_params(tmp_path / "sv.json", CurveParams.svensson(0.07, -0.03, 0.02, 0.6, 0.0, 0.2))
        a, b = self.run(capsys, ns), self.run(capsys, sv)
        assert len(a) == len(b)
        for ra, rb in zip(a, b):
            assert ra["spot_rate"] == pytest.approx(rb["spot_rate"], abs=1e-15)
            assert ra["forward_rate"] == pytest.approx(rb["forward_rate"], abs=1e-15)

    @pytest.mark.parametrize("grid", ["1:3", "a:b:c", "3:1:1", "0:1:0", "-1:2:1"])
    def test_invalid_grid(self, tmp_path, grid):
        p = write_params(tmp_path / "p.json", testkit.TRUE_NS)
        with pytest.raises(SystemExit) as info:
            main(["curve", "--params", str(p), "--grid", grid])
        assert info.value.code == 2

    def test_parse_grid_inclusive(self):
        np.testing.assert_allclose(parse_grid("0.05:20:0.05")[[0, -1]], [0.05, 20.0])
        assert parse_grid("0.1:0.3:0.1").tolist() == [0.1, 0.2, 0.3]


def test_console_entry_point(tmp_path):
    p = write_params(tmp_path / "p.json", testkit.TRUE_NS)
    proc = subprocess.run([sys.executable, "-m", "nsscurve.cli", "curve", "--params", str(p), "--grid", "1:2:1"],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.splitlines()[0] == "tenor_years,spot_rate,forward_rate"
    assert len(proc.stdout.splitlines()) == 3
