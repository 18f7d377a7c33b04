import numpy as np
import pytest
from hypothesis import given, strategies as st

from xfl.errors import TouchstoneError, UnsupportedFormatError
from xfl.fitting import AdmittanceRecord
from xfl.ladder import SweepGrid, SweepResult, simulate
from xfl.mbvd import ResonatorSpec, admittance, synthesize_mbvd
from xfl.touchstone import (admittance_to_s11, parse_touchstone, read_touchstone,
                            s11_to_admittance, serialize_touchstone, write_touchstone)


def sig12(x):
    return float(f"{x:.12g}")


def test_matched_load():
    rec = parse_touchstone("# GHZ S RI R 50\n50.0 0.0 0.0\n")
    assert rec.frequencies[0] == 50.0
    assert rec.y[0] == pytest.approx(1 / 50)


def test_units_and_ma():
    rec = parse_touchstone("! comment\n# MHZ S MA R 25\n1000 0.5 90 ! trailing\n2000 0.5 -90\n")
    assert rec.frequencies == pytest.approx([1.0, 2.0])
    assert rec.z0 == 25
    assert admittance_to_s11(rec.y, 25)[0] == pytest.approx(0.5j)
    rec = parse_touchstone("# HZ S RI R 50\n1e9 0 0\n")
    assert rec.frequencies[0] == pytest.approx(1.0)


def test_default_option_line():
    # no option line: GHZ, MA, 50 ohm
    rec = parse_touchstone("1 0.5 0\n2 0.5 180\n")
    assert rec.y[0] == pytest.approx(1 / 150)
    assert rec.y[1] == pytest.approx(1.5 / 25)


def test_descending_frequencies_reports_line():
    with pytest.raises(TouchstoneError, match="line 4"):
        parse_touchstone("# GHZ S RI R 50\n1 0 0\n2 0 0\n1.5 0 0\n")


def test_db_rejected():
    with pytest.raises(UnsupportedFormatError, match="DB"):
        parse_touchstone("# GHZ S DB R 50\n1 0 0\n")


def test_other_parameter_types_rejected():
    with pytest.raises(UnsupportedFormatError):
        parse_touchstone("# GHZ Y RI R 50\n1 0 0\n")


def test_bad_rows():
    with pytest.raises(TouchstoneError, match="line 2"):
        parse_touchstone("# GHZ S RI R 50\n1 0 x\n")
    with pytest.raises(TouchstoneError):
        parse_touchstone("# GHZ S RI R 50\n1 0 0 0 0\n")
    with pytest.raises(TouchstoneError):
        parse_touchstone("# GHZ S RI R 50\n")


def test_two_port_continuation_lines():
    text = "# GHZ S RI R 50\n1 0.1 0 0.9 0\n  0.9 0 0.1 0\n2 0.2 0 0.8 0 0.8 0 0.2 0\n"
    s = parse_touchstone(text)
    assert isinstance(s, SweepResult)
    assert s.s21[0] == 0.9 and s.s22[1] == 0.2


def test_filter_round_trip(reference_cfg, tmp_path):
    s = simulate(reference_cfg.ladder.build(), SweepGrid(40, 60, 801))
    path = tmp_path / "f.s2p"
    write_touchstone(path, s)
    back = read_touchstone(path)
    for k in ("s11", "s21", "s12", "s22"):
        want = np.array([complex(sig12(v.real), sig12(v.imag)) for v in getattr(s, k)])
        assert np.array_equal(getattr(back, k), want)
    assert np.array_equal(back.frequencies, [sig12(x) for x in s.frequencies])
    assert serialize_touchstone(back) == path.read_text()


def test_one_port_round_trip(tmp_path):
    p = synthesize_mbvd(ResonatorSpec(49.6, 0.048, 80.0, 37.0))
    f = np.linspace(45, 55, 201)
    rec = AdmittanceRecord(f, admittance(p, f))
    write_touchstone(tmp_path / "r.s1p", rec, fmt="MA")
    back = read_touchstone(tmp_path / "r.s1p")
    assert back.y == pytest.approx(rec.y, rel=1e-10)


@given(st.lists(st.tuples(st.floats(-1, 1), st.floats(-1, 1)), min_size=1, max_size=30))
def test_serialize_parse_identity(vals):
    f = np.arange(1, len(vals) + 1, dtype=float)
    s11 = np.array([complex(a, b) for a, b in vals])
    s = SweepResult(f, s11, s11 * 0.5, s11 * 0.5, -s11)
    back = parse_touchstone(serialize_touchstone(s))
    assert np.array_equal(back.s11, np.array([complex(sig12(v.real), sig12(v.imag)) for v in s11]))
    again = serialize_touchstone(back)
    assert parse_touchstone(again).s22 == pytest.approx(back.s22, abs=0)


@given(st.floats(1e-4, 1.0), st.floats(-1.0, 1.0))
def test_admittance_conversion_inverse(g, b):
    y = complex(g, b) / 50
    assert s11_to_admittance(admittance_to_s11(y)) == pytest.approx(y, rel=1e-12)
