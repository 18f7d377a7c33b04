"""Filter figures of merit extracted from a transmission sweep."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.signal import find_peaks

from .errors import BandNotResolvedError, MetricsError, NoPassbandError
from .ladder import SweepResult

MIN_INBAND_POINTS = 50
SPUR_PROMINENCE_DB = 6.0


@dataclass(frozen=True)
class FilterMetrics:
    f_center: float
    il_db: float
    fbw_3db: float  # percent
    oob_rejection_db: float | None
    oob_rejection_excl_spurs_db: float | None
    band_edges: tuple[float, float]
    spur_windows: tuple[tuple[float, float], ...] = ()
    ripple_db: float = 0.0
    s11_inband_max_db: float | None = None

    def to_dict(self) -> dict:
        """JSON report body; key order is part of the file format."""
        return {
            "f_center_ghz": self.f_center,
            "il_db": self.il_db,
            "fbw_3db_pct": self.fbw_3db,
            "oob_db": self.oob_rejection_db,
            "oob_excl_spurs_db": self.oob_rejection_excl_spurs_db,
            "band_edges_ghz": list(self.band_edges),
            "spur_windows_ghz": [list(w) for w in self.spur_windows],
            "ripple_db": self.ripple_db,
            "s11_inband_max_db": self.s11_inband_max_db,
        }


def _crossing(f, db, i, j, level):
    # linear interpolation of the level crossing between grid points i and j
    t = (level - db[i]) / (db[j] - db[i])
    return float(f[i] + t * (f[j] - f[i]))


def passband_ripple(db: np.ndarray) -> float:
    """Deepest dip (dB) between two in-band maxima; 0 for a single-humped passband."""
    d = np.asarray(db, dtype=float)
    if d.size < 3:
        return 0.0
    level = np.minimum(np.maximum.accumulate(d), np.maximum.accumulate(d[::-1])[::-1])
    return float(np.max(level - d))


def band_edges(f: np.ndarray, db: np.ndarray) -> tuple[int, float, float]:
    """Peak index and the interpolated -3 dB edges around it."""
    n = len(f)
    i = int(np.argmax(db))
    if i == 0 or i == n - 1:
        raise NoPassbandError("transmission peaks at the sweep boundary")
    level = db[i] - 3.0
    below = np.flatnonzero(db[:i] < level)
    above = np.flatnonzero(db[i + 1:] < level)
    if below.size == 0 or above.size == 0:
        raise BandNotResolvedError("a -3 dB crossing is missing on at least one side of the peak")
    lo = int(below[-1])
    hi = i + 1 + int(above[0])
    return i, _crossing(f, db, lo, lo + 1, level), _crossing(f, db, hi - 1, hi, level)


def oob_mask(f: np.ndarray, f_lo: float, f_hi: float) -> np.ndarray:
    bw = f_hi - f_lo
    return (f < f_lo - bw) | (f > f_hi + bw)


def propose_spur_windows(sweep: SweepResult, f_lo: float, f_hi: float,
                         prominence_db: float = SPUR_PROMINENCE_DB) -> list[tuple[float, float]]:
    """Out-of-band transmission tones rising ``prominence_db`` above the median OoB level.

    Each window spans the contiguous run around a tone that stays above
    median + prominence/2.
    """
    f = sweep.frequencies
    db = sweep.db("s21")
    mask = oob_mask(f, f_lo, f_hi)
    if not mask.any():
        return []
    floor = float(np.median(db[mask]))
    threshold = floor + prominence_db
    # peaks of the full response, so the passband skirt at the mask edge is not a tone
    peaks, _ = find_peaks(db)
    peaks = peaks[mask[peaks]]
    windows = []
    half = floor + 0.5 * prominence_db
    for p in peaks:
        if db[p] <= threshold:
            continue
        a = p
        while a > 0 and mask[a - 1] and db[a - 1] > half:
            a -= 1
        b = p
        while b < len(f) - 1 and mask[b + 1] and db[b + 1] > half:
            b += 1
        w = (float(f[a]), float(f[b]))
        if not windows or w != windows[-1]:
            windows.append(w)
    return windows


def extract_metrics(sweep: SweepResult,
                    spur_windows: Sequence[tuple[float, float]] | None = None,
                    min_inband_points: int = MIN_INBAND_POINTS) -> FilterMetrics:
    """IL, 3-dB band, center and OoB rejection of ``sweep``.

    ``spur_windows=None`` auto-proposes windows from OoB tones; pass ``[]`` to
    exclude nothing.
    """
    f = np.asarray(sweep.frequencies, dtype=float)
    db = sweep.db("s21")
    peak, f_lo, f_hi = band_edges(f, db)
    inband = (f >= f_lo) & (f <= f_hi)
    if int(inband.sum()) < min_inband_points:
        raise BandNotResolvedError(f"only {int(inband.sum())} grid points inside the passband; "
                                   f"need {min_inband_points}")
    il = -float(db[peak])
    f_c = 0.5 * (f_lo + f_hi)
    fbw = 100.0 * (f_hi - f_lo) / f_c

    mask = oob_mask(f, f_lo, f_hi)
    if spur_windows is None:
        spur_windows = propose_spur_windows(sweep, f_lo, f_hi)
    spur_windows = tuple((float(a), float(b)) for a, b in spur_windows)
    keep = mask.copy()
    for a, b in spur_windows:
        keep &= ~((f >= a) & (f <= b))
    oob = -float(db[mask].max()) if mask.any() else None
    oob_ex = -float(db[keep].max()) if keep.any() else None

    ripple = passband_ripple(db[inband])
    s11 = sweep.db("s11")[inband]
    return FilterMetrics(f_c, il, fbw, oob, oob_ex, (f_lo, f_hi), spur_windows, ripple,
                         float(s11.max()))


# published acoustic filters above 10 GHz: (label, f_c GHz, IL dB, FBW %, rejection dB)
SOA_TABLE: tuple[tuple[str, float, float, float, float], ...] = (
    ("published A", 9.96, 0.76, 5.7, 3.8),
    ("published B", 17.4, 3.3, 3.4, 16.6),
    ("published C", 19.0, 8.0, 2.4, 13.0),
    ("published D", 23.5, 2.4, 18.2, 13.0),
    ("published E", 23.8, 1.5, 19.4, 12.1),
    ("published F", 38.7, 5.6, 17.6, 15.8),
    ("P3F 50 GHz (measured)", 50.1, 3.3, 2.9, 15.2),
)


@dataclass(frozen=True)
class SoaRow:
    reference: str
    f_c: float
    il_db: float
    fbw_pct: float
    rejection_db: float | None
    simulated: bool = False

    def to_dict(self) -> dict:
        return {"reference": self.reference, "f_c_ghz": self.f_c, "il_db": self.il_db,
                "fbw_pct": self.fbw_pct, "rejection_db": self.rejection_db,
                "simulated": self.simulated}


def compare_to_soa(metrics: FilterMetrics | None = None, label: str = "candidate",
                   table: Sequence[tuple] = SOA_TABLE) -> list[SoaRow]:
    """Reference rows plus ``metrics`` (if given), sorted by f_c then IL."""
    rows = [SoaRow(*r) for r in table]
    if metrics is not None:
        rej = metrics.oob_rejection_excl_spurs_db
        rows.append(SoaRow(label, metrics.f_center, metrics.il_db, metrics.fbw_3db, rej, True))
    return sorted(rows, key=lambda r: (r.f_c, r.il_db))


def format_soa_table(rows: Sequence[SoaRow]) -> str:
    lines = [f"{'reference':<24}{'f_c (GHz)':>10}{'IL (dB)':>9}{'FBW (%)':>9}{'Rej (dB)':>10}"]
    for r in rows:
        rej = "-" if r.rejection_db is None else f"{r.rejection_db:.1f}"
        lines.append(f"{r.reference:<24}{r.f_c:>10.2f}{r.il_db:>9.2f}{r.fbw_pct:>9.2f}{rej:>10}")
    return "\n".join(lines)


__all__ = ["FilterMetrics", "extract_metrics", "propose_spur_windows", "band_edges",
           "passband_ripple", "compare_to_soa", "format_soa_table", "SOA_TABLE", "SoaRow", "MetricsError"]
