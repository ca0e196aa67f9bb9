import csv
import math
import os

import numpy as np
import pytest
import yaml

from regnewt import ConfigurationError
from regnewt.cli import main, run_checks
from regnewt.config import load_config, parse_config
from regnewt.experiments import (fit_rate, fmt, prepare, read_csv, render_rate_svg,
                                 run_cells, validate_discrepancy_csv, write_iterations_csv,
                                 write_summary_csv)

CONFIG_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "configs")

SMALL_RATE = {
    "problem": {"kind": "diagonal", "n": 16},
    "filter": {"kind": "landweber"},
    "schedule": {"kind": "arith_int", "n0": 1, "q": 1},
    "source": {"kind": "holder", "exponent": 1.0,
               "omega": {"profile": "power", "scale": 1.0}},
    "delta_list": [1e-2, 3e-3, 1e-3, 3e-4],
    "seeds": [0, 1],
}


def write_config(tmp_path, data, name="config.yaml"):
    path = tmp_path / name
    path.write_text(yaml.safe_dump(data))
    return str(path)


def test_run_trivial_config_stops_immediately(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["run", os.path.join(CONFIG_DIR, "trivial.yaml"), "--out", str(out)])
    assert code == 0
    summary = read_csv(str(out / "summary.csv"))
    assert len(summary) == 4
    assert all(row["k_delta"] == "0" for row in summary)
    assert "k_delta=0" in capsys.readouterr().out


def test_run_writes_valid_csv(tmp_path):
    out = tmp_path / "out"
    assert main(["run", write_config(tmp_path, SMALL_RATE), "--out", str(out)]) == 0
    assert validate_discrepancy_csv(str(out)) == []
    rows = read_csv(str(out / "iterations.csv"))
    assert list(rows[0]) == ["delta", "seed", "k", "alpha_k", "residual_norm", "error_norm",
                             "stability_ratio"]


def test_malformed_config_exits_2_without_output(tmp_path):
    bad = dict(SMALL_RATE, tau=0.5)
    out = tmp_path / "out"
    assert main(["run", write_config(tmp_path, bad), "--out", str(out)]) == 2
    assert not out.exists()


def test_unreadable_config_exits_2(tmp_path):
    assert main(["run", str(tmp_path / "missing.yaml")]) == 2
    (tmp_path / "broken.yaml").write_text("filter: [unclosed")
    assert main(["verify", str(tmp_path / "broken.yaml")]) == 2


def test_run_failure_exits_1(tmp_path):
    data = dict(SMALL_RATE, kmax=2, delta_list=[1e-5])
    out = tmp_path / "out"
    assert main(["run", write_config(tmp_path, data), "--out", str(out)]) == 1
    assert read_csv(str(out / "summary.csv"))[0]["status"] == "ReachedKmax"


def test_seed_override(tmp_path):
    out = tmp_path / "out"
    main(["run", write_config(tmp_path, SMALL_RATE), "--out", str(out), "--seed-override", "9"])
    assert {row["seed"] for row in read_csv(str(out / "summary.csv"))} == {"9"}


def test_rate_study_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["rate-study", write_config(tmp_path, SMALL_RATE), "--out", str(out)]) == 0
    for name in ("iterations.csv", "summary.csv", "rate.csv", "fit.csv", "rate.svg"):
        assert (out / name).exists()
    fit = read_csv(str(out / "fit.csv"))[0]
    assert float(fit["theoretical_exponent"]) == pytest.approx(2 / 3)
    assert "fitted slope" in capsys.readouterr().out


def test_rate_study_needs_four_levels(tmp_path):
    data = dict(SMALL_RATE, delta_list=[1e-2, 1e-3, 1e-4])
    assert main(["rate-study", write_config(tmp_path, data)]) == 2


def test_rate_study_needs_source(tmp_path):
    data = {k: v for k, v in SMALL_RATE.items() if k != "source"}
    assert main(["rate-study", write_config(tmp_path, data)]) == 2


def test_rate_study_aborts_on_failed_cell(tmp_path, capsys):
    data = dict(SMALL_RATE, kmax=3)
    assert main(["rate-study", write_config(tmp_path, data), "--out",
                 str(tmp_path / "out")]) == 1
    assert "rate study aborted: cell delta=" in capsys.readouterr().err


@pytest.mark.parametrize("nu, expected", [(1.0, 2 / 3), (0.5, 0.5)])
def test_theoretical_exponent(nu, expected):
    data = dict(SMALL_RATE, source=dict(SMALL_RATE["source"], exponent=nu))
    config = parse_config(data)
    cells = run_cells(config)
    fit = fit_rate(config, cells, prepare(config).omega_norm)
    assert fit.theoretical_exponent == pytest.approx(expected)


def test_svg_is_deterministic():
    config = parse_config(SMALL_RATE)
    setup = prepare(config)
    svgs = [render_rate_svg(fit_rate(config, run_cells(config), setup.omega_norm))
            for _ in range(2)]
    assert svgs[0] == svgs[1]
    assert svgs[0].startswith("<?xml") and "<polyline" in svgs[0]


def test_parallel_cells_match_serial():
    config = parse_config(SMALL_RATE)
    serial, parallel = run_cells(config, 1), run_cells(config, 2)
    assert serial.keys() == parallel.keys()
    for key in serial:
        assert serial[key].records == parallel[key].records


def test_csv_round_trip(tmp_path):
    config = parse_config(SMALL_RATE)
    cells = run_cells(config)
    path = str(tmp_path / "iterations.csv")
    write_iterations_csv(path, cells)
    rows = read_csv(path)
    records = [(cell.delta, cell.seed, rec) for key in sorted(cells, key=lambda k: (-k[0], k[1]))
               for cell in [cells[key]] for rec in cell.records]
    assert len(rows) == len(records)
    for row, (delta, seed, rec) in zip(rows, records):
        assert float(row["delta"]) == delta and int(row["seed"]) == seed
        assert int(row["k"]) == rec.k
        assert float(row["alpha_k"]) == rec.alpha_k
        assert float(row["residual_norm"]) == rec.residual_norm
        assert float(row["error_norm"]) == rec.error_norm
        assert float(row["stability_ratio"]) == rec.stability_ratio


@pytest.mark.parametrize("value", [0.1, 1 / 3, math.pi * 1e-300, 2.0 ** -1074, 1e308])
def test_fmt_round_trips(value):
    assert float(fmt(value)) == value


def test_validator_detects_tampering(tmp_path):
    config = parse_config(SMALL_RATE)
    cells = run_cells(config)
    write_iterations_csv(str(tmp_path / "iterations.csv"), cells)
    write_summary_csv(str(tmp_path / "summary.csv"), cells)
    assert validate_discrepancy_csv(str(tmp_path)) == []
    rows = read_csv(str(tmp_path / "iterations.csv"))
    stopped = [r for r in rows if int(r["k"]) > 0][-1]
    stopped["residual_norm"] = "1.0"
    with open(tmp_path / "iterations.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
        writer.writeheader()
        writer.writerows(rows)
    assert any("exceeds" in v for v in validate_discrepancy_csv(str(tmp_path)))


def test_verify_landweber_passes(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["verify", os.path.join(CONFIG_DIR, "verify_landweber.yaml"), "--out", str(out)])
    assert code == 0
    rows = read_csv(str(out / "verify.csv"))
    assert rows and all(r["passed"] == "True" for r in rows)


def test_verify_literal_lardy_fails_with_witness(capsys):
    code = main(["verify", os.path.join(CONFIG_DIR, "verify_lardy_literal.yaml")])
    assert code == 1
    err = capsys.readouterr().err
    assert "residual positivity" in err and "alpha=" in err and "lambda=" in err


def test_verify_empty_check_list(tmp_path, capsys):
    data = {"filter": {"kind": "landweber"}, "checks": []}
    assert main(["verify", write_config(tmp_path, data)]) == 0
    assert capsys.readouterr().out.startswith("0 checks")


def test_run_checks_selects_nonlinear_checks_for_problems():
    config = parse_config({"filter": {"kind": "iterated_tikhonov", "m": 1},
                           "problem": {"kind": "diagonal", "sigma": [0.5, 0.25]},
                           "checks": ["nonlinearity", "strengthened_commutators"],
                           "check_options": {"samples": 6}}, require_run=False)
    reports = run_checks(config)
    assert len(reports) == 6
    assert all(r.passed for r in reports)


def test_parse_config_defaults():
    config = parse_config(SMALL_RATE)
    assert config.tau == 1.5 and config.kmax == 10_000
    assert config.delta_list == (1e-2, 3e-3, 1e-3, 3e-4)
    assert config.stability and not config.rescale


def test_parse_config_reads_exponent_strings(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text("filter: {kind: landweber}\nschedule: {kind: arith_int}\n"
                    "problem: {kind: diagonal, n: 4}\ndelta_list: [1e-2, 1e-3]\n")
    assert load_config(str(path)).delta_list == (1e-2, 1e-3)


@pytest.mark.parametrize("patch", [
    {"tau": 1.0},
    {"delta_list": [1e-3, 1e-2]},
    {"delta_list": []},
    {"seeds": []},
    {"kmax": 0},
    {"unknown": 1},
    {"filter": {"kind": "tikhonov"}},
    {"filter": {"kind": "landweber", "extra": 1}},
    {"schedule": {"kind": "geometric"}},
    {"problem": {"kind": "diagonal", "sigma": [0.9]}},
    {"source": {"kind": "holder", "exponent": 1.0, "omega": [1.0, 2.0]}},
    {"checks": ["bogus"]},
])
def test_parse_config_rejects(patch):
    with pytest.raises(ConfigurationError):
        parse_config(dict(SMALL_RATE, **patch))


def test_incompatible_pairing_is_configuration_error():
    with pytest.raises(ConfigurationError, match="bounded increments"):
        parse_config(dict(SMALL_RATE, schedule={"kind": "geometric"}))


def test_shipped_configs_parse():
    for name in sorted(os.listdir(CONFIG_DIR)):
        load_config(os.path.join(CONFIG_DIR, name), require_run=not name.startswith("verify"))


def test_elliptic_config_rescales():
    config = load_config(os.path.join(CONFIG_DIR, "elliptic_irgn.yaml"))
    setup = prepare(config)
    assert 0 < setup.scale <= 1
    assert config.family.name == "iterated_tikhonov(m=1)"
    assert np.isfinite(setup.x0.entries).all()
