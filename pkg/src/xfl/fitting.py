"""mBVD parameter extraction from one-port admittance data."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize
from scipy.signal import find_peaks

from .errors import FitError, NoResonanceError
from .mbvd import (GHZ, TWO_PI, MbvdParams, ResonatorSpec, SpurSpec, _branch, admittance,
                   k2_from_fs_fp, synthesize_mbvd)
from .parallel import worker_count

MIN_POINTS = 100
LN10 = math.log(10.0)


@dataclass(frozen=True, eq=False)
class AdmittanceRecord:
    frequencies: np.ndarray  # GHz
    y: np.ndarray  # S
    validate: bool = True
    z0: float = 50.0

    def __post_init__(self):
        f = np.asarray(self.frequencies, dtype=float)
        y = np.asarray(self.y, dtype=complex)
        object.__setattr__(self, "frequencies", f)
        object.__setattr__(self, "y", y)
        if len(f) != len(y):
            raise ValueError("frequencies and admittance differ in length")
        if np.any(np.diff(f) <= 0):
            raise ValueError("frequencies must be strictly ascending")
        if self.validate and len(f) < MIN_POINTS:
            raise ValueError(f"need at least {MIN_POINTS} points, got {len(f)}")

    @classmethod
    def from_params(cls, params: MbvdParams, f) -> "AdmittanceRecord":
        f = np.asarray(f, dtype=float)
        return cls(f, admittance(params, f))


@dataclass
class FitResult:
    params: MbvdParams
    spec: ResonatorSpec
    residual: float
    converged: bool
    flags: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)  # best-so-far residual per evaluation
    restart_residuals: list = field(default_factory=list)

    def to_dict(self) -> dict:
        s = self.spec
        return {
            "fs_ghz": s.fs, "k2_pct": 100.0 * s.k2, "q": s.q, "c0_ff": s.c0,
            "spurs": [{"fs_ghz": sp.fs, "k2_pct": 100.0 * sp.k2, "q": sp.q} for sp in s.spurs],
            "mbvd": {
                "c0_ff": self.params.c0, "rs_ohm": self.params.rs, "r0_ohm": self.params.r0,
                "branches": [{"rm_ohm": b.rm, "lm_nh": b.lm, "cm_ff": b.cm}
                             for b in self.params.branches],
            },
            "residual": self.residual,
            "converged": self.converged,
            "flags": dict(self.flags),
            "restart_residuals": list(self.restart_residuals),
        }


def synthetic_record(params: MbvdParams, f, snr_db: float = 40.0,
                     rng: np.random.Generator | None = None) -> AdmittanceRecord:
    """Model admittance with multiplicative complex Gaussian noise at ``snr_db``."""
    f = np.asarray(f, dtype=float)
    y = admittance(params, f)
    if rng is not None and math.isfinite(snr_db):
        sigma = 10.0 ** (-snr_db / 20.0)
        noise = rng.normal(size=f.size) + 1j * rng.normal(size=f.size)
        y = y * (1.0 + sigma * noise / math.sqrt(2.0))
    return AdmittanceRecord(f, y)


def _local_maxima(mag):
    peaks, _ = find_peaks(mag)
    return peaks


def _half_width(f, mag, i):
    # 3-dB (half-power) width of the |Y| peak at index i
    level = mag[i] / math.sqrt(2.0)
    lo = i
    while lo > 0 and mag[lo] > level:
        lo -= 1
    hi = i
    while hi < len(f) - 1 and mag[hi] > level:
        hi += 1
    return f[hi] - f[lo]


def initial_guess(data: AdmittanceRecord, n_spurs: int = 0) -> ResonatorSpec:
    """Heuristic start point: peak/valley positions, low-frequency C0, peak-width Q."""
    f, y = data.frequencies, data.y
    mag = np.abs(y)
    peaks = _local_maxima(mag)
    if peaks.size == 0:
        raise NoResonanceError("no interior admittance peak")
    i = int(peaks[np.argmax(mag[peaks])])
    fs = float(f[i])

    # deepest valley above the peak; robust to noise dips
    j = i + int(np.argmin(mag[i:]))
    if j == i:
        j = min(i + 1, len(f) - 1)
    fp = float(f[j])

    n_low = max(3, len(f) // 10)
    w = TWO_PI * f[:n_low] * GHZ
    c0_total = float(np.median(y[:n_low].imag / w)) / 1e-15
    k2 = min(max(k2_from_fs_fp(fs, fp), 1e-4), 0.9)
    # low-frequency susceptance includes the motional capacitance: C = C0 + Cm
    c0 = max(c0_total * (1.0 - k2), 1e-3)
    # width of the motional peak: strip the static susceptance so that a broad,
    # low-Q peak is not widened further by C0
    ym = np.abs(y - 1j * TWO_PI * f * GHZ * c0 * 1e-15)
    im = int(np.argmax(ym))
    q = fs / max(_half_width(f, ym, im), (f[1] - f[0]))
    q = float(min(max(q, 2.0), 1e5))

    spurs = []
    if n_spurs:
        others = [int(p) for p in peaks if int(p) != i]
        others.sort(key=lambda p: -mag[p])
        for p in others[:n_spurs]:
            spurs.append(SpurSpec(float(f[p]), min(k2 * 0.1, 0.05), q))
        while len(spurs) < n_spurs:
            spurs.append(SpurSpec(fs * (1.1 + 0.05 * len(spurs)), min(k2 * 0.05, 0.05), q))
    return ResonatorSpec(fs, k2, q, c0, tuple(spurs))


def _pack(spec: ResonatorSpec) -> np.ndarray:
    x = [spec.fs, spec.k2, spec.q, spec.c0]
    for sp in spec.spurs:
        x += [sp.fs, sp.k2, spec.q if sp.q is None else sp.q]
    return np.log(np.asarray(x, dtype=float))


def _unpack(x: np.ndarray, n_spurs: int) -> ResonatorSpec:
    v = np.exp(x)
    spurs = tuple(SpurSpec(float(v[4 + 3 * k]), float(min(v[5 + 3 * k], 0.99)),
                           float(v[6 + 3 * k])) for k in range(n_spurs))
    return ResonatorSpec(float(v[0]), float(min(v[1], 0.99)), float(v[2]), float(v[3]), spurs)


def log_residuals(model_y: np.ndarray, data_y: np.ndarray) -> np.ndarray:
    """Complex log10 ratio: real part = log-magnitude error, imaginary = phase error / ln 10."""
    ratio = model_y / data_y
    return np.log10(np.abs(ratio)) + 1j * np.angle(ratio) / LN10


def _params(x: np.ndarray, n_spurs: int) -> MbvdParams:
    # circuit straight from the search vector; skips ResonatorSpec lint warnings
    v = np.exp(x)
    fs, k2, q, c0 = float(v[0]), float(min(v[1], 0.99)), float(v[2]), float(v[3])
    branches = [_branch(fs, k2, q, c0, "capacitance-ratio")]
    for k in range(n_spurs):
        branches.append(_branch(float(v[4 + 3 * k]), float(min(v[5 + 3 * k], 0.99)),
                                float(v[6 + 3 * k]), c0, "capacitance-ratio"))
    return MbvdParams(c0, tuple(branches))


def _objective(x, f, data_y, n_spurs, mask):
    try:
        params = _params(x, n_spurs)
    except (ValueError, OverflowError, ZeroDivisionError):
        return 1e6
    with np.errstate(all="ignore"):
        r = log_residuals(admittance(params, f[mask]), data_y[mask])
    val = float(np.mean(r.real**2 + r.imag**2))
    return val if math.isfinite(val) else 1e6


def _run_start(x0, f, y, n_spurs, mask, max_iter):
    costs = []
    best = [math.inf, x0]

    def fun(x):
        c = _objective(x, f, y, n_spurs, mask)
        costs.append(c)
        if c < best[0]:
            best[0], best[1] = c, np.array(x)
        return c

    # re-seed the simplex until it stops moving; guards against premature collapse
    x = x0
    for _ in range(3):
        res = minimize(fun, x, method="Nelder-Mead",
                       options={"maxiter": max_iter, "xatol": 1e-10, "fatol": 1e-16,
                                "adaptive": True})
        if np.allclose(res.x, x, rtol=0, atol=1e-12):
            break
        x = res.x
    return best[1], best[0], costs


def fit_mbvd(data: AdmittanceRecord, init: ResonatorSpec | None = None, n_spurs: int | None = None,
             n_restarts: int = 8, seed: int = 0, residual_ceiling: float = 0.05,
             mask: np.ndarray | None = None, jitter: float = 0.05, max_iter: int = 4000,
             strict: bool = False) -> FitResult:
    """Fit mBVD parameters to ``data`` by log-domain Nelder-Mead with jittered restarts.

    The objective is the mean squared complex log10 ratio between model and
    data admittance. Restart 0 starts at ``init``; restarts 1.. start from
    log-normal jitter of it. The lowest residual wins (ties go to the lower index).
    ``mask`` (boolean, same length as data) excludes regions such as EM artifacts.
    """
    if init is None:
        init = initial_guess(data, n_spurs or 0)
    if n_spurs is None:
        n_spurs = len(init.spurs)
    if len(init.spurs) != n_spurs:
        raise ValueError("init spur count does not match n_spurs")
    f, y = data.frequencies, data.y
    m = np.ones(len(f), dtype=bool) if mask is None else np.asarray(mask, dtype=bool)

    rng = np.random.default_rng(seed)
    x_init = _pack(init)
    starts = [x_init] + [x_init + rng.normal(0.0, jitter, x_init.size)
                         for _ in range(n_restarts - 1)]
    with ThreadPoolExecutor(max_workers=worker_count(len(starts))) as pool:
        outcomes = list(pool.map(lambda x0: _run_start(x0, f, y, n_spurs, m, max_iter), starts))

    best_idx = min(range(len(outcomes)), key=lambda k: (outcomes[k][1], k))
    x_best, mse, _ = outcomes[best_idx]
    trace = []
    running = math.inf
    for _, _, costs in outcomes:
        for c in costs:
            running = min(running, c)
            trace.append(math.sqrt(running))
    spec = _unpack(x_best, n_spurs)
    params = synthesize_mbvd(spec)
    residual = math.sqrt(mse)
    converged = residual <= residual_ceiling

    flags = {"main": "ok" if converged else "poor"}
    for k in range(n_spurs):
        flags[f"spur{k}"] = "ok" if converged else "poor"
    r = np.abs(log_residuals(admittance(params, f[m]), y[m]))
    if r.size and r.max() > 1e-3 and r.max() > 8.0 * np.median(r):
        flags["unmodeled_feature"] = float(f[m][int(np.argmax(r))])
    result = FitResult(params, spec, residual, converged, flags, trace,
                       [math.sqrt(o[1]) for o in outcomes])
    if strict and not converged:
        raise FitError(f"fit residual {residual:.3g} exceeds ceiling {residual_ceiling:g}")
    return result
