import csv
import json

import pytest

from xfl.cli import main
from xfl.config import bundled_text, load_config, parse_config
from xfl.errors import ConfigError
from xfl.fitting import AdmittanceRecord
from xfl.ladder import SweepResult
from xfl.touchstone import read_touchstone


def doc():
    return json.loads(bundled_text())


def test_bundled_config_loads(reference_cfg):
    assert set(reference_cfg.stacks) == {"series", "shunt"}
    assert [p for p, _ in reference_cfg.ladder.layout] == ["series", "shunt", "series"]
    assert reference_cfg.ladder.z0 == 50.0
    spurs = reference_cfg.ladder.resonators["series"].spurs
    assert spurs[0].fs < 49.6 < spurs[1].fs


def test_schema_version_checked():
    d = doc()
    d["schema_version"] = 99
    with pytest.raises(ConfigError, match="schema_version"):
        parse_config(d)


def test_cross_references_checked():
    d = doc()
    d["filter"]["elements"][1]["resonator"] = "nope"
    with pytest.raises(ConfigError, match="unknown resonator"):
        parse_config(d)
    d = doc()
    d["resonators"]["series"]["stack"] = "nope"
    with pytest.raises(ConfigError, match="unknown stack"):
        parse_config(d)


def test_missing_key_and_bad_type():
    d = doc()
    del d["sweep"]
    with pytest.raises(ConfigError, match="sweep"):
        parse_config(d)
    d = doc()
    d["resonators"]["shunt"]["q"] = "high"
    with pytest.raises(ConfigError, match="q"):
        parse_config(d)


def test_fixed_velocity(tmp_path):
    d = doc()
    d["material"] = {"v_thickness_m_s": 3500.0}
    p = tmp_path / "c.json"
    p.write_text(json.dumps(d))
    cfg = load_config(p)
    assert cfg.material.v_thickness == 3500.0 and cfg.calibration is None


def test_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        load_config("does/not/exist.json")


def run(argv, capsys=None):
    code = main(argv)
    return code


def test_no_arguments_is_usage_error(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err


def test_unknown_flag_is_usage_error(capsys):
    assert main(["filter", "--bogus"]) == 2
    assert main(["nope"]) == 2


def test_domain_error_exit_code(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["filter", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert "error" in capsys.readouterr().err


def test_filter_command(tmp_path):
    assert main(["filter", "--config", "paper.json", "--out", str(tmp_path)]) == 0
    m = json.loads((tmp_path / "metrics.json").read_text())
    assert m["f_center_ghz"] == pytest.approx(49.3, abs=0.6)
    assert isinstance(read_touchstone(tmp_path / "filter.s2p"), SweepResult)
    with open(tmp_path / "filter.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["frequency_ghz", "s11_db", "s21_db", "s22_db"] and len(rows) == 4002


def test_stack_command(tmp_path):
    assert main(["stack", "--out", str(tmp_path)]) == 0
    with open(tmp_path / "dispersion.csv") as fh:
        rows = list(csv.DictReader(fh))
    got = {(float(r["thickness_nm"]), int(r["order"])): float(r["frequency_ghz"]) for r in rows}
    # one calibrated velocity for both rows: each lands about 0.22 GHz from its anchor
    assert got[(440.0, 12)] == pytest.approx(47.7, abs=0.3)
    assert got[(427.0, 12)] == pytest.approx(49.6, abs=0.3)
    st = json.loads((tmp_path / "stack.json").read_text())
    assert 16.0 <= st["stacks"]["shunt"]["trim_depth_nm"] <= 17.0


def test_resonator_command(tmp_path):
    assert main(["resonator", "--name", "series", "--out", str(tmp_path)]) == 0
    rec = read_touchstone(tmp_path / "series.s1p")
    assert isinstance(rec, AdmittanceRecord)
    out = json.loads((tmp_path / "resonator.json").read_text())
    assert out["series"]["mbvd"]["branches"][0]["rm_ohm"] == pytest.approx(21.5, abs=0.01)
    assert main(["resonator", "--name", "nope", "--out", str(tmp_path)]) == 1


def test_fit_command_on_csv(tmp_path):
    assert main(["resonator", "--name", "shunt", "--out", str(tmp_path)]) == 0
    # the resonator sweep spans 40-60 GHz, wide enough for the fit
    assert main(["fit", "--data", str(tmp_path / "shunt_admittance.csv"), "--out", str(tmp_path)]) == 0
    fit = json.loads((tmp_path / "fit.json").read_text())
    assert fit["fs_ghz"] == pytest.approx(47.7, rel=1e-4)
    assert fit["k2_pct"] == pytest.approx(7.5, rel=1e-3)


def test_report_command(tmp_path, capsys):
    assert main(["report", "--out", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "P3F 50 GHz (measured)" in out and "simulated" in out
    rep = json.loads((tmp_path / "report.json").read_text())
    assert [r["f_c_ghz"] for r in rep["comparison"]] == sorted(r["f_c_ghz"] for r in rep["comparison"])


def test_tolerance_command(tmp_path):
    assert main(["tolerance", "--trials", "20", "--seed", "4", "--out", str(tmp_path)]) == 0
    tol = json.loads((tmp_path / "tolerance.json").read_text())
    assert tol["single_layer_a3"]["scenario"]["seed"] == 4
    assert (tmp_path / "tolerance_p3f_s12_filter_trials.csv").exists()
