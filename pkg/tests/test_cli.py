import csv
import io
import math

import pytest

from bandsplit.cli import (CSV_HEADER, ExperimentSpec, SpecError, main,
                           parse_spec, read_config_file, run)


def no_overrides(**kw):
    base = {}
    base.update(kw)
    return base


def write_config(tmp_path, text):
    path = tmp_path / "exp.cfg"
    path.write_text(text, encoding="utf-8")
    return str(path)


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def test_minimal_file_fills_defaults(tmp_path):
    cfg = write_config(tmp_path, "mode = analyze\n")
    spec = parse_spec(cfg, {})
    assert spec.mode == "analyze"
    assert spec.grid_step == 1e-3
    assert spec.slots == 1_000_000
    assert spec.reps == 10
    assert spec.seed == 42
    assert spec.warmup == 100_000
    assert spec.rate == [1.0]
    assert spec.lambda_p == [0.5]
    assert spec.protocol == "proposed"
    # reference powers
    assert spec.power_s / spec.noise == pytest.approx(100.0)


def test_flag_overrides_file_seed(tmp_path):
    cfg = write_config(tmp_path, "mode = analyze\nseed = 42\n")
    spec = parse_spec(cfg, {"seed": 7})
    assert spec.seed == 7


def test_file_lists_and_comments(tmp_path):
    cfg = write_config(tmp_path, """
# sweep setup
mode = sweep
rate = 0.5, 1.0, 1.5
lambda_p = 0.5,0.8
""")
    spec = parse_spec(cfg, {})
    assert spec.rate == [0.5, 1.0, 1.5]
    assert spec.lambda_p == [0.5, 0.8]
    assert spec.protocol == "both"  # sweep default


def test_gamma_and_sigma_conveniences(tmp_path):
    cfg = write_config(tmp_path, "mode = analyze\ngamma_s = 200\nsigma = 1.5\n")
    spec = parse_spec(cfg, {})
    assert spec.power_s == pytest.approx(200 * spec.noise)
    assert spec.sigma_s_pd == 1.5 and spec.sigma_p_pd == 1.5


def test_unknown_key_named(tmp_path):
    cfg = write_config(tmp_path, "mode = analyze\nbogus = 3\n")
    with pytest.raises(SpecError, match="bogus"):
        parse_spec(cfg, {})


def test_unparsable_number_named(tmp_path):
    cfg = write_config(tmp_path, "mode = analyze\nlambda_s = fast\n")
    with pytest.raises(SpecError, match="lambda_s"):
        parse_spec(cfg, {})


def test_missing_delay_cap_named(tmp_path):
    cfg = write_config(tmp_path, "mode = optimize-delay\n")
    with pytest.raises(SpecError, match="delay_cap"):
        parse_spec(cfg, {})


def test_empty_rate_list_rejected(tmp_path):
    cfg = write_config(tmp_path, "mode = analyze\nrate =\n")
    with pytest.raises(SpecError, match="rate"):
        parse_spec(cfg, {})


def test_missing_mode_rejected():
    with pytest.raises(SpecError, match="mode"):
        parse_spec(None, {})


def test_sweep_rows_and_determinism(tmp_path):
    out1 = tmp_path / "a.csv"
    out2 = tmp_path / "b.csv"
    for out in (out1, out2):
        code = main(["sweep", "--rate", "0.5,1.0,2.0", "--lambda-p", "0.5,0.8",
                     "--out", str(out)])
        assert code == 0
    assert out1.read_bytes() == out2.read_bytes()
    rows = read_rows(out1)
    assert len(rows) == 3 * 2 * 2  # rates x lambda_p x protocols
    assert list(rows[0].keys()) == CSV_HEADER
    by_key = {(r["rate_R"], r["lambda_p"], r["protocol"]): r for r in rows}
    ok = by_key[("1", "0.5", "proposed")]
    assert ok["status"] == "ok"
    assert float(ok["mu_s_analytic"]) >= float(by_key[("1", "0.5", "pcr")]["mu_s_analytic"])
    assert ok["mu_s_sim"] == ""  # no simulation in sweep mode
    bad = by_key[("2", "0.8", "proposed")]
    assert bad["status"] == "infeasible"
    assert bad["mu_s_analytic"] == ""
    assert by_key[("2", "0.8", "pcr")]["status"] == "infeasible"


def test_analyze_row_contents(tmp_path):
    out = tmp_path / "analyze.csv"
    code = main(["analyze", "--rate", "1.0", "--lambda-p", "0.5",
                 "--lambda-s", "0.2", "--delta", "0.6", "--omega", "0.7",
                 "--out", str(out)])
    assert code == 0
    row, = read_rows(out)
    assert float(row["mu_s_analytic"]) == pytest.approx(0.47804096830088506, abs=1e-9)
    assert float(row["D_s_analytic"]) == pytest.approx(2.9095732421149095, rel=1e-9)
    assert float(row["D_p_analytic"]) == pytest.approx(1.2232280709686332, rel=1e-9)


def test_simulate_mode_fills_sim_columns(tmp_path):
    out = tmp_path / "sim.csv"
    code = main(["simulate", "--rate", "1.0", "--lambda-p", "0.5",
                 "--lambda-s", "0.2", "--delta", "0.6", "--omega", "0.7",
                 "--slots", "20000", "--reps", "3", "--warmup", "2000",
                 "--protocol", "both", "--out", str(out)])
    assert code == 0
    rows = read_rows(out)
    assert [r["protocol"] for r in rows] == ["proposed", "pcr"]
    prop = rows[0]
    assert float(prop["mu_s_sim"]) == pytest.approx(0.2, abs=0.02)
    assert float(prop["D_s_sim"]) == pytest.approx(2.91, rel=0.2)
    assert prop["ci_D_s"] != ""
    pcr = rows[1]
    assert pcr["D_s_analytic"] == ""  # no printed delay formula for PCR
    assert pcr["D_s_sim"] != ""


def test_optimize_delay_mode(tmp_path):
    out = tmp_path / "delay.csv"
    code = main(["optimize-delay", "--rate", "1.0,2.5", "--lambda-p", "0.5",
                 "--lambda-s", "0.4", "--delay-cap", "2.0",
                 "--slots", "20000", "--reps", "2", "--warmup", "2000",
                 "--grid-step", "0.01", "--out", str(out)])
    assert code == 0
    rows = read_rows(out)
    by_key = {(r["rate_R"], r["protocol"]): r for r in rows}
    prop = by_key[("1", "proposed")]
    assert prop["status"] == "ok"
    assert float(prop["D_s_analytic"]) == pytest.approx(6.916, rel=5e-3)
    assert float(prop["D_p_analytic"]) <= 2.0 + 1e-9
    pcr = by_key[("1", "pcr")]
    assert pcr["status"] == "ok" and pcr["D_s_sim"] != ""
    # at rate 2.5 neither protocol can carry lambda_s = 0.4
    assert by_key[("2.5", "proposed")]["status"] == "infeasible"
    assert by_key[("2.5", "pcr")]["status"] == "infeasible"


def test_config_file_drives_main(tmp_path):
    cfg = write_config(tmp_path, """
mode = analyze
rate = 1.0
lambda_p = 0.5
lambda_s = 0.2
delta = 0.6
omega = 0.7
""")
    out = tmp_path / "from_config.csv"
    assert main(["--config", cfg, "--out", str(out)]) == 0
    row, = read_rows(out)
    assert float(row["D_s_analytic"]) == pytest.approx(2.9095732421149095, rel=1e-9)
    # positional mode overrides the file's
    out2 = tmp_path / "override.csv"
    assert main(["sweep", "--config", cfg, "--rate", "1.0", "--lambda-p", "0.5",
                 "--out", str(out2)]) == 0
    rows = read_rows(out2)
    assert {r["protocol"] for r in rows} == {"proposed", "pcr"}
    assert rows[0]["delta_star"] != "0.6"  # optimized, not the file policy


def test_worker_pool_matches_sequential(tmp_path):
    args = ["sweep", "--rate", "0.5,1.0,1.5,2.0", "--lambda-p", "0.5"]
    seq = tmp_path / "seq.csv"
    par = tmp_path / "par.csv"
    assert main(args + ["--out", str(seq)]) == 0
    assert main(args + ["--workers", "3", "--out", str(par)]) == 0
    assert seq.read_bytes() == par.read_bytes()


def test_exit_codes():
    assert main([]) == 1                                   # missing mode
    assert main(["analyze", "--rate", "-1"]) == 1          # bad value
    assert main(["optimize-delay"]) == 1                   # missing cap
    assert main(["analyze", "--bogus-flag"]) == 1          # unknown flag
    code = main(["analyze", "--out", "/nonexistent-dir/x.csv"])
    assert code == 2                                       # runtime failure
