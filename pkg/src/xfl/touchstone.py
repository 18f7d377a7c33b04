"""Touchstone v1 (.s1p / .s2p) reader and writer.

Supported: parameter type S, formats RI and MA, units HZ/KHZ/MHZ/GHZ, '!'
comments (full-line or trailing). DB format is rejected on purpose: dB/angle
pairs lose the sign information needed for lossless round trips at 12 digits.
"""
from __future__ import annotations

import numpy as np

from .errors import TouchstoneError, UnsupportedFormatError
from .fitting import AdmittanceRecord
from .ladder import SweepResult

UNITS = {"HZ": 1e-9, "KHZ": 1e-6, "MHZ": 1e-3, "GHZ": 1.0}
DIGITS = 12


def s11_to_admittance(s11, z0: float = 50.0):
    s11 = np.asarray(s11, dtype=complex)
    return (1.0 - s11) / (z0 * (1.0 + s11))


def admittance_to_s11(y, z0: float = 50.0):
    y = np.asarray(y, dtype=complex)
    return (1.0 - z0 * y) / (1.0 + z0 * y)


def _parse_option_line(tokens: list[str], line_no: int) -> tuple[float, str, float]:
    unit, fmt, z0 = "GHZ", "MA", 50.0
    i = 0
    while i < len(tokens):
        t = tokens[i].upper()
        if t in UNITS:
            unit = t
        elif t in ("RI", "MA"):
            fmt = t
        elif t == "DB":
            raise UnsupportedFormatError("DB format is not supported; use RI or MA", line_no)
        elif t == "S":
            pass
        elif t in ("Y", "Z", "H", "G"):
            raise UnsupportedFormatError(f"parameter type {t} is not supported; only S", line_no)
        elif t == "R":
            if i + 1 >= len(tokens):
                raise TouchstoneError("reference impedance missing after R", line_no)
            try:
                z0 = float(tokens[i + 1])
            except ValueError:
                raise TouchstoneError(f"bad reference impedance {tokens[i + 1]!r}", line_no)
            i += 1
        else:
            raise TouchstoneError(f"unrecognised option {tokens[i]!r}", line_no)
        i += 1
    return UNITS[unit], fmt, z0


def parse_touchstone(text: str, nports: int | None = None):
    """Parse Touchstone text.

    One-port data returns an ``AdmittanceRecord`` (S11 converted to Y against the
    file's reference impedance); two-port data returns a ``SweepResult``.
    ``nports`` is inferred from the first data row when not given.
    """
    scale, fmt, z0 = 1.0, "MA", 50.0
    seen_option = False
    rows: list[tuple[int, list[float]]] = []
    pending: list[float] = []
    pending_line = 0
    width = None if nports is None else 1 + 2 * nports**2

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            if seen_option:
                raise TouchstoneError("duplicate option line", line_no)
            scale, fmt, z0 = _parse_option_line(line[1:].split(), line_no)
            seen_option = True
            continue
        if line.startswith("["):
            raise UnsupportedFormatError("Touchstone v2 keywords are not supported", line_no)
        try:
            values = [float(tok) for tok in line.split()]
        except ValueError as exc:
            raise TouchstoneError(f"non-numeric data: {exc}", line_no) from None
        if not pending:
            pending_line = line_no
        pending.extend(values)
        if width is None:
            # first data line: 3 values = one-port, 4..9 = (possibly wrapped) two-port row
            if len(pending) == 3:
                width = 3
            elif 3 < len(pending) <= 9:
                width = 9
            else:
                raise TouchstoneError(f"cannot infer port count from {len(pending)} values",
                                      line_no)
        if len(pending) == width:
            rows.append((pending_line, pending))
            pending = []
        elif len(pending) > width:
            raise TouchstoneError(f"expected {width} values per row, got {len(pending)}", line_no)
    if pending:
        raise TouchstoneError("truncated final data row", pending_line)
    if not rows:
        raise TouchstoneError("no data rows")

    data = np.array([r for _, r in rows], dtype=float)
    freqs = data[:, 0] * scale
    for k in range(1, len(rows)):
        if not data[k, 0] > data[k - 1, 0]:
            raise TouchstoneError("frequencies must be strictly ascending", rows[k][0])

    pairs = data[:, 1:]
    if fmt == "RI":
        values = pairs[:, 0::2] + 1j * pairs[:, 1::2]
    else:
        values = pairs[:, 0::2] * np.exp(1j * np.deg2rad(pairs[:, 1::2]))

    if width == 3:
        return AdmittanceRecord(freqs, s11_to_admittance(values[:, 0], z0), validate=False,
                                z0=z0)
    # v1 two-port column order: S11 S21 S12 S22
    return SweepResult(freqs, values[:, 0], values[:, 1], values[:, 2], values[:, 3], z0)


def read_touchstone(path, nports: int | None = None):
    with open(path, encoding="ascii") as fh:
        return parse_touchstone(fh.read(), nports)


def _fmt(x: float) -> str:
    return f"{x:.{DIGITS}g}"


def _pairs(values, fmt: str) -> list[str]:
    out = []
    for v in values:
        if fmt == "RI":
            out += [_fmt(v.real), _fmt(v.imag)]
        else:
            out += [_fmt(abs(v)), _fmt(float(np.degrees(np.angle(v))))]
    return out


def serialize_touchstone(data, fmt: str = "RI", comments: tuple[str, ...] = ()) -> str:
    """Touchstone text for a ``SweepResult`` (.s2p) or ``AdmittanceRecord`` (.s1p).

    Numbers carry 12 significant digits; output is byte-stable for equal input.
    """
    fmt = fmt.upper()
    if fmt not in ("RI", "MA"):
        raise UnsupportedFormatError(f"cannot write format {fmt}")
    lines = [f"! {c}" for c in comments]
    if isinstance(data, SweepResult):
        z0 = data.z0
        cols = [data.s11, data.s21, data.s12, data.s22]
    elif isinstance(data, AdmittanceRecord):
        z0 = data.z0
        cols = [admittance_to_s11(data.y, z0)]
    else:
        raise TypeError(f"cannot serialise {type(data).__name__}")
    f = np.asarray(data.frequencies, dtype=float)
    if np.any(np.diff(f) <= 0):
        raise TouchstoneError("frequencies must be strictly ascending")
    lines.append(f"# GHZ S {fmt} R {_fmt(z0)}")
    for k in range(len(f)):
        lines.append(" ".join([_fmt(f[k])] + _pairs([c[k] for c in cols], fmt)))
    return "\n".join(lines) + "\n"


def write_touchstone(path, data, fmt: str = "RI", comments: tuple[str, ...] = ()) -> None:
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(serialize_touchstone(data, fmt, comments))
