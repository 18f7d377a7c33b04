"""Ladder filters: ABCD cascade of series/shunt mBVD resonators and S-parameter conversion.

All matrix arrays have shape (n_freq, 2, 2). Frequencies are in GHz.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import NetworkError
from .mbvd import GHZ, NH, TWO_PI, MbvdParams, ResonatorSpec, admittance, synthesize_mbvd

SERIES = "series"
SHUNT = "shunt"


@dataclass(frozen=True)
class LadderElement:
    placement: str
    resonator: MbvdParams
    parasitic_nh: float = 0.0
    name: str = ""

    def __post_init__(self):
        if self.placement not in (SERIES, SHUNT):
            raise ValueError(f"placement must be 'series' or 'shunt', got {self.placement!r}")
        if self.parasitic_nh < 0:
            raise ValueError("parasitic inductance must be >= 0")


@dataclass(frozen=True)
class FilterDesign:
    elements: tuple[LadderElement, ...]
    z0: float = 50.0

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))
        if not self.elements:
            raise ValueError("a filter needs at least one element")
        if not self.z0 > 0:
            raise ValueError("z0 must be > 0")


@dataclass(frozen=True)
class SweepGrid:
    f_start: float
    f_stop: float
    n_points: int
    spacing: str = "linear"

    def __post_init__(self):
        if not self.f_stop > self.f_start > 0:
            raise ValueError("need f_stop > f_start > 0")
        if self.n_points < 2:
            raise ValueError("need at least 2 points")
        if self.spacing not in ("linear", "logarithmic"):
            raise ValueError("spacing must be 'linear' or 'logarithmic'")

    def frequencies(self) -> np.ndarray:
        if self.spacing == "linear":
            return np.linspace(self.f_start, self.f_stop, self.n_points)
        return np.geomspace(self.f_start, self.f_stop, self.n_points)


@dataclass(frozen=True, eq=False)
class SweepResult:
    frequencies: np.ndarray
    s11: np.ndarray
    s21: np.ndarray
    s12: np.ndarray
    s22: np.ndarray
    z0: float = 50.0

    def __post_init__(self):
        n = len(self.frequencies)
        if any(len(getattr(self, k)) != n for k in ("s11", "s21", "s12", "s22")):
            raise ValueError("all S-parameter arrays must match the frequency grid length")

    def db(self, which: str = "s21") -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 20.0 * np.log10(np.abs(getattr(self, which)))


def _eye(n):
    m = np.zeros((n, 2, 2), dtype=complex)
    m[:, 0, 0] = 1.0
    m[:, 1, 1] = 1.0
    return m


def series_matrix(z) -> np.ndarray:
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    m = _eye(z.size)
    m[:, 0, 1] = z
    return m


def shunt_matrix(y) -> np.ndarray:
    y = np.atleast_1d(np.asarray(y, dtype=complex))
    m = _eye(y.size)
    m[:, 1, 0] = y
    return m


def element_abcd(element: LadderElement, f) -> np.ndarray:
    """ABCD matrices of one ladder element over frequencies ``f``.

    A series arm whose admittance is exactly zero (ideal open) gets B = inf, a
    shunt arm at an exact lossless pole gets C = inf; ``cascade`` resolves both.
    """
    f = np.atleast_1d(np.asarray(f, dtype=float))
    y = admittance(element.resonator, f)
    jwl = 1j * TWO_PI * f * GHZ * element.parasitic_nh * NH
    with np.errstate(divide="ignore", invalid="ignore"):
        z_res = np.where(y == 0, complex(np.inf, 0.0), 1.0 / y)
    if element.placement == SERIES:
        z = z_res + jwl if element.parasitic_nh else z_res
        return series_matrix(z)
    # a shunt arm's parasitic inductance sits between the resonator and ground
    with np.errstate(divide="ignore", invalid="ignore"):
        y_arm = 1.0 / (z_res + jwl) if element.parasitic_nh else y
    y_arm = np.where(np.isfinite(y_arm), y_arm, complex(np.inf, 0.0))
    return shunt_matrix(y_arm)


def _limit_scaled(m: np.ndarray) -> np.ndarray:
    """Replace ideal open series arms (B=inf) and ideal shorted shunt arms (C=inf)
    by their scaled limits [[0, 1], [0, 0]] and [[0, 0], [1, 0]]."""
    out = m.copy()
    out[np.isinf(m[:, 0, 1])] = np.array([[0, 1], [0, 0]], dtype=complex)
    out[np.isinf(m[:, 1, 0])] = np.array([[0, 0], [1, 0]], dtype=complex)
    return out


def _outer_limit(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    # dominant column of each left matrix times dominant row of each right matrix
    ci = np.argmax(np.abs(left).sum(axis=1), axis=1)
    ri = np.argmax(np.abs(right).sum(axis=2), axis=1)
    k = np.arange(len(left))
    col = left[k, :, ci]
    row = right[k, ri, :]
    return col[:, :, None] * row[:, None, :]


def cascade(matrices: Iterable[np.ndarray]) -> np.ndarray:
    """Left-to-right product of element matrices, input port first.

    Frequencies at which an arm is an ideal open (series) or short (shunt) come
    back as a singular (determinant 0) matrix proportional to the true cascade;
    ``s_params`` maps those to zero transmission. When two such arms coincide,
    the network between them is invisible from both ports, so the product keeps
    the input-side column and the output-side row.
    """
    total = None
    hit = None  # frequencies already collapsed to a rank-1 limit
    for m in matrices:
        m = np.asarray(m, dtype=complex)
        sing = np.isinf(m).any(axis=(1, 2))
        if sing.any():
            m = _limit_scaled(m)
        if total is None:
            total, hit = m.copy(), sing.copy()
            continue
        both = sing & hit
        prod = np.matmul(total, m)
        if both.any():
            prod[both] = _outer_limit(total[both], m[both])
        total = prod
        hit |= sing
    if total is None:
        raise NetworkError("cascade needs at least one element")
    return total


def s_params(abcd: np.ndarray, z0: float = 50.0, reciprocal: bool = True):
    """Convert ABCD to (s11, s21, s12, s22) with equal reference impedance on both ports.

    With ``reciprocal`` (the default, true for every passive ladder) S12 is
    returned as the very same values as S21.
    """
    if not z0 > 0:
        raise ValueError("z0 must be > 0")
    a, b, c, d = abcd[:, 0, 0], abcd[:, 0, 1], abcd[:, 1, 0], abcd[:, 1, 1]
    den = a + b / z0 + c * z0 + d
    if np.any(den == 0):
        raise NetworkError(f"singular ABCD at index {int(np.flatnonzero(den == 0)[0])}")
    det = a * d - b * c
    open_arm = det == 0
    s11 = (a + b / z0 - c * z0 - d) / den
    s22 = (-a + b / z0 - c * z0 + d) / den
    s21 = np.where(open_arm, 0.0, 2.0 / den)
    s12 = s21 if reciprocal else np.where(open_arm, 0.0, 2.0 * det / den)
    return s11, s21, s12, s22


def simulate(design: FilterDesign, grid: SweepGrid | Sequence[float]) -> SweepResult:
    f = grid.frequencies() if isinstance(grid, SweepGrid) else np.asarray(grid, dtype=float)
    mats = []
    for k, el in enumerate(design.elements):
        m = element_abcd(el, f)
        bad = np.isnan(m).any(axis=(1, 2))
        if bad.any():
            i = int(np.flatnonzero(bad)[0])
            raise NetworkError(f"element {k} ({el.name or el.placement}) is non-finite at "
                               f"frequency index {i} ({f[i]:g} GHz)")
        mats.append(m)
    abcd = cascade(mats)
    s11, s21, s12, s22 = s_params(abcd, design.z0)
    return SweepResult(f, s11, s21, s12, s22, design.z0)


@dataclass(frozen=True)
class LadderSpec:
    """Spec-level ladder: named resonator specs plus an ordered placement list.

    ``build`` synthesizes the mBVD circuits and returns a ``FilterDesign``.
    """
    resonators: Mapping[str, ResonatorSpec]
    layout: tuple[tuple[str, str], ...]  # (placement, resonator name)
    z0: float = 50.0
    parasitics_nh: Mapping[int, float] = field(default_factory=dict)
    convention: str = "capacitance-ratio"

    def __post_init__(self):
        object.__setattr__(self, "layout", tuple(tuple(x) for x in self.layout))
        for placement, name in self.layout:
            if name not in self.resonators:
                raise KeyError(f"ladder references unknown resonator {name!r}")
            if placement not in (SERIES, SHUNT):
                raise ValueError(f"bad placement {placement!r}")

    def names(self, placement: str) -> list[str]:
        seen = []
        for p, n in self.layout:
            if p == placement and n not in seen:
                seen.append(n)
        return seen

    def with_resonators(self, resonators: Mapping[str, ResonatorSpec]) -> "LadderSpec":
        return LadderSpec(dict(resonators), self.layout, self.z0, dict(self.parasitics_nh),
                          self.convention)

    def build(self) -> FilterDesign:
        params = {n: synthesize_mbvd(s, self.convention) for n, s in self.resonators.items()}
        elements = [LadderElement(p, params[n], self.parasitics_nh.get(i, 0.0), n)
                    for i, (p, n) in enumerate(self.layout)]
        return FilterDesign(tuple(elements), self.z0)


def default_layout(order: int = 3, first: str = SERIES) -> tuple[tuple[str, str], ...]:
    """Alternating layout referencing resonators named 'series' and 'shunt'."""
    other = SHUNT if first == SERIES else SERIES
    return tuple((first, first) if i % 2 == 0 else (other, other) for i in range(order))


def shift_series_offset(spec: LadderSpec, delta_f: float) -> LadderSpec:
    """Move every series resonator (and its spurs, proportionally) so that the mean
    series fs sits ``delta_f`` GHz above the mean shunt fs."""
    ser, sh = spec.names(SERIES), spec.names(SHUNT)
    if not ser or not sh:
        raise ValueError("offset needs both series and shunt resonators")
    current = (np.mean([spec.resonators[n].fs for n in ser])
               - np.mean([spec.resonators[n].fs for n in sh]))
    shift = delta_f - float(current)
    out = dict(spec.resonators)
    for n in ser:
        out[n] = shift_resonator(out[n], shift)
    return spec.with_resonators(out)


def shift_resonator(res: ResonatorSpec, shift: float) -> ResonatorSpec:
    fs = res.fs + shift
    scale = fs / res.fs
    spurs = tuple(type(s)(s.fs * scale, s.k2, s.q) for s in res.spurs)
    return res.replace(fs=fs, spurs=spurs)


def is_lossless(design: FilterDesign) -> bool:
    return all(el.resonator.rs == 0 and el.resonator.r0 == 0
               and all(b.rm == 0 for b in el.resonator.branches)
               for el in design.elements)


def determinant(abcd: np.ndarray) -> np.ndarray:
    return abcd[:, 0, 0] * abcd[:, 1, 1] - abcd[:, 0, 1] * abcd[:, 1, 0]


__all__ = [
    "SERIES", "SHUNT", "LadderElement", "FilterDesign", "SweepGrid", "SweepResult",
    "element_abcd", "cascade", "s_params", "simulate", "LadderSpec", "default_layout",
    "shift_series_offset", "shift_resonator", "series_matrix", "shunt_matrix", "determinant",
    "is_lossless",
]
