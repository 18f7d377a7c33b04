"""Modified Butterworth-Van Dyke (mBVD) resonator model.

Static branch C0 (with dielectric loss R0) in parallel with one motional
Rm-Lm-Cm branch per acoustic mode, all behind an electrode resistance Rs.
The first motional branch is the main mode; any further branches are spurs.

Units: GHz, fF, nH, ohm, siemens.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .errors import DegenerateResonanceError

FF = 1e-15
NH = 1e-9
GHZ = 1e9
TWO_PI = 2.0 * math.pi

CONVENTIONS = ("capacitance-ratio", "pi2over8")
COMPLEX_INF = complex(np.inf, 0.0)


@dataclass(frozen=True)
class SpurSpec:
    fs: float
    k2: float
    q: float | None = None  # None: inherit the main-mode Q

    def __post_init__(self):
        _check_mode(self.fs, self.k2, 1.0 if self.q is None else self.q)


@dataclass(frozen=True)
class ResonatorSpec:
    fs: float
    k2: float
    q: float
    c0: float
    spurs: tuple[SpurSpec, ...] = ()
    rs: float = 0.0
    r0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "spurs", tuple(self.spurs))
        _check_mode(self.fs, self.k2, self.q)
        if not self.c0 > 0:
            raise ValueError(f"c0 must be > 0 fF, got {self.c0!r}")
        if self.rs < 0 or self.r0 < 0:
            raise ValueError("rs and r0 must be >= 0")
        for spur in self.spurs:
            if spur.k2 > self.k2:
                warnings.warn(f"spur at {spur.fs:g} GHz couples more strongly "
                              f"(k2={spur.k2:g}) than the main mode", stacklevel=3)

    def replace(self, **changes) -> "ResonatorSpec":
        return replace(self, **changes)


def _check_mode(fs, k2, q):
    if not fs > 0:
        raise ValueError(f"fs must be > 0 GHz, got {fs!r}")
    if not 0 < k2 < 1:
        raise ValueError(f"k2 must lie in (0, 1), got {k2!r}")
    if not q > 0:
        raise ValueError(f"q must be > 0, got {q!r}")


@dataclass(frozen=True)
class Branch:
    rm: float  # ohm
    lm: float  # nH
    cm: float  # fF

    def __post_init__(self):
        if not (self.lm > 0 and self.cm > 0):
            raise ValueError("motional inductance and capacitance must be > 0")
        if self.rm < 0:
            raise ValueError("motional resistance must be >= 0")

    @property
    def fs(self) -> float:
        return 1.0 / (TWO_PI * math.sqrt(self.lm * NH * self.cm * FF)) / GHZ

    @property
    def q(self) -> float:
        if self.rm == 0:
            return math.inf
        return TWO_PI * self.fs * GHZ * self.lm * NH / self.rm


@dataclass(frozen=True)
class MbvdParams:
    c0: float  # fF
    branches: tuple[Branch, ...]
    rs: float = 0.0
    r0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "branches", tuple(self.branches))
        if not self.c0 > 0:
            raise ValueError("c0 must be > 0")
        if self.rs < 0 or self.r0 < 0:
            raise ValueError("rs and r0 must be >= 0")

    @property
    def main(self) -> Branch:
        return self.branches[0]


def k2_to_capacitance_ratio(k2: float, convention: str = "capacitance-ratio") -> float:
    """Map a coupling value in ``convention`` to Cm/(Cm+C0)."""
    if convention == "capacitance-ratio":
        return k2
    if convention == "pi2over8":
        return k2 * 8.0 / math.pi**2
    raise ValueError(f"unknown k2 convention {convention!r}; expected one of {CONVENTIONS}")


def _branch(fs, k2, q, c0, convention):
    ratio = k2_to_capacitance_ratio(k2, convention)
    cm = c0 * ratio / (1.0 - ratio)
    ws = TWO_PI * fs * GHZ
    lm = 1.0 / (ws**2 * cm * FF) / NH
    rm = 0.0 if math.isinf(q) else 1.0 / (ws * cm * FF * q)
    return Branch(rm, lm, cm)


def synthesize_mbvd(spec: ResonatorSpec, convention: str = "capacitance-ratio") -> MbvdParams:
    branches = [_branch(spec.fs, spec.k2, spec.q, spec.c0, convention)]
    for spur in spec.spurs:
        q = spec.q if spur.q is None else spur.q
        branches.append(_branch(spur.fs, spur.k2, q, spec.c0, convention))
    return MbvdParams(spec.c0, tuple(branches), spec.rs, spec.r0)


def admittance(params: MbvdParams, f) -> np.ndarray:
    """Complex input admittance (S) at frequencies ``f`` (GHz).

    Exact poles of lossless branches evaluate to complex infinity.
    """
    w = TWO_PI * np.asarray(f, dtype=float) * GHZ
    jw = 1j * w
    with np.errstate(divide="ignore", invalid="ignore"):
        y_static = 1.0 / (params.r0 + 1.0 / (jw * params.c0 * FF))
        y = np.asarray(y_static, dtype=complex)
        for b in params.branches:
            z = b.rm + jw * b.lm * NH + 1.0 / (jw * b.cm * FF)
            y = y + np.where(z == 0, COMPLEX_INF, 1.0 / z)
        if params.rs:
            y = 1.0 / (params.rs + np.where(y == 0, COMPLEX_INF, 1.0 / y))
    return y


def _refine(fun, f_lo, f_hi, xtol):
    res = minimize_scalar(fun, bounds=(f_lo, f_hi), method="bounded",
                          options={"xatol": xtol, "maxiter": 500})
    return float(res.x)


def scan_window(params: MbvdParams) -> tuple[float, float]:
    """Default frequency window (GHz) around the main branch's fs-fp pair."""
    b = params.main
    fs = b.fs
    fp = fs * math.sqrt(1.0 + b.cm / params.c0)
    spread = fp - fs + fs / min(b.q, 1e6)
    return max(fs - 3.0 * spread, 0.05 * fs), fp + 3.0 * spread


def resonance_frequencies(params: MbvdParams, window: tuple[float, float] | None = None,
                          n_grid: int = 20001, rtol: float = 1e-10) -> tuple[float, float]:
    """Locate (fs, fp) as the main |Y| maximum and the first |Y| minimum above it.

    A dense grid brackets each extremum, then a bounded scalar search refines it.
    """
    lo, hi = window if window is not None else scan_window(params)
    grid = np.linspace(lo, hi, n_grid)
    mag = np.abs(admittance(params, grid))
    mag = np.where(np.isfinite(mag), mag, np.inf)
    i = int(np.argmax(mag))
    if i == 0 or i == n_grid - 1:
        raise DegenerateResonanceError("admittance peak sits on the scan window edge")
    step = grid[1] - grid[0]

    def inv_mag(x):
        return float(1.0 / np.abs(admittance(params, x)))

    def mag_at(x):
        return float(np.abs(admittance(params, x)))

    fs = _refine(inv_mag, grid[i - 1], grid[i + 1], rtol * grid[i])
    above = mag[i + 1:]
    interior = np.flatnonzero((above[1:-1] <= above[:-2]) & (above[1:-1] <= above[2:])) + 1
    if interior.size == 0:
        raise DegenerateResonanceError("no admittance minimum above fs inside the scan window")
    j = i + 1 + int(interior[0])
    fp = _refine(mag_at, grid[j] - step, grid[j] + step, rtol * grid[j])
    return fs, fp


def k2_from_fs_fp(fs: float, fp: float, convention: str = "capacitance-ratio") -> float:
    """Coupling from the resonance pair.

    ``"capacitance-ratio"``: 1 - (fs/fp)**2, equal to Cm/(Cm+C0) for a single branch.
    ``"pi2over8"``: the same quantity scaled by pi**2/8.
    """
    if fp < fs:
        raise ValueError(f"fp ({fp:g}) must not be below fs ({fs:g})")
    base = (fp - fs) * (fp + fs) / fp**2
    if convention == "capacitance-ratio":
        return base
    if convention == "pi2over8":
        return base * math.pi**2 / 8.0
    raise ValueError(f"unknown k2 convention {convention!r}; expected one of {CONVENTIONS}")


def motional_q(params: MbvdParams, branch: int = 0) -> float:
    """Quality factor read off the half-power width of a branch's admittance peak.

    The static branch is removed first; for a series RLC branch the half-power
    points satisfy f2 - f1 = fs/Q exactly.
    """
    b = params.branches[branch]
    if b.rm == 0:
        return math.inf
    f0 = b.fs

    def excess(f):
        w = TWO_PI * f * GHZ
        z = b.rm + 1j * w * b.lm * NH + 1.0 / (1j * w * b.cm * FF)
        return abs(1.0 / z) ** 2 - 0.5 / b.rm**2

    width_guess = f0 * b.rm / (TWO_PI * f0 * GHZ * b.lm * NH)
    lo = max(f0 - width_guess, 1e-3 * f0)
    while excess(lo) > 0:
        lo = 0.5 * lo
    hi = f0 + width_guess
    while excess(hi) > 0:
        hi = 2.0 * hi
    f1 = brentq(excess, lo, f0, xtol=1e-14 * f0, rtol=1e-15)
    f2 = brentq(excess, f0, hi, xtol=1e-14 * f0, rtol=1e-15)
    return math.sqrt(f1 * f2) / (f2 - f1)
