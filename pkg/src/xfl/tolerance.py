"""Monte Carlo propagation of film-thickness errors into resonance shifts and filter metrics."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import MetricsError
from .ladder import SERIES, SHUNT, LadderSpec, SweepGrid, shift_resonator, simulate
from .metrics import FilterMetrics, extract_metrics
from .parallel import worker_count
from .stack import (LayerStack, ModeSpec, frequency_at_thickness, frequency_sensitivity,
                    mode_frequency, thickness_for_frequency)


@dataclass(frozen=True)
class ToleranceScenario:
    stack: LayerStack
    mode: ModeSpec
    sigma_h: float  # nm, standard deviation of the thickness error
    distribution: str = "normal"
    n_trials: int = 1000
    seed: int = 0
    correlated: bool = True  # one error per die vs one per resonator
    method: str = "linear"  # "linear" (sensitivity) or "exact" (dispersion relation)

    def __post_init__(self):
        if self.sigma_h < 0:
            raise ValueError("sigma_h must be >= 0")
        if self.n_trials < 1:
            raise ValueError("n_trials must be >= 1")
        if self.distribution not in ("normal", "uniform"):
            raise ValueError("distribution must be 'normal' or 'uniform'")
        if self.method not in ("linear", "exact"):
            raise ValueError("method must be 'linear' or 'exact'")


@dataclass(frozen=True)
class MetricThresholds:
    il_max_db: float = 3.0
    fbw_rel_tol: float = 0.2  # fraction of the nominal FBW

    def passes(self, m: FilterMetrics | None, nominal: FilterMetrics | None) -> bool:
        if m is None:
            return False
        if m.il_db > self.il_max_db:
            return False
        if nominal is not None and abs(m.fbw_3db - nominal.fbw_3db) > self.fbw_rel_tol * nominal.fbw_3db:
            return False
        return True


@dataclass
class TrialResult:
    trial: int
    dh_nm: float
    fs: dict[str, float]
    metrics: FilterMetrics | None
    passed: bool | None


@dataclass
class ShiftSummary:
    mean: float
    std: float
    p5: float
    p95: float

    @classmethod
    def of(cls, x: np.ndarray) -> "ShiftSummary":
        x = np.asarray(x, dtype=float)
        std = float(np.std(x, ddof=1)) if x.size > 1 else 0.0
        p5, p95 = np.percentile(x, [5, 95])
        return cls(float(np.mean(x)), std, float(p5), float(p95))


@dataclass
class ToleranceReport:
    scenario: ToleranceScenario
    sensitivity_ghz_per_nm: float
    predicted_std_ghz: float
    shift: ShiftSummary
    trials: list[TrialResult]
    pass_rate: float | None = None
    nominal: FilterMetrics | None = None
    metric_summary: dict = field(default_factory=dict)
    design: LadderSpec | None = None

    def to_dict(self) -> dict:
        sc = self.scenario
        return {
            "scenario": {
                "total_thickness_nm": sc.stack.total_thickness, "n_layers": sc.stack.n_layers,
                "order": sc.mode.order, "lateral_wavelength_um": sc.mode.lateral_wavelength,
                "sigma_h_nm": sc.sigma_h, "distribution": sc.distribution,
                "n_trials": sc.n_trials, "seed": sc.seed, "correlated": sc.correlated,
                "method": sc.method,
            },
            "nominal_frequency_ghz": mode_frequency(sc.stack, sc.mode),
            "sensitivity_ghz_per_nm": self.sensitivity_ghz_per_nm,
            "predicted_shift_std_ghz": self.predicted_std_ghz,
            "shift_ghz": vars(self.shift),
            "pass_rate": self.pass_rate,
            "nominal_metrics": None if self.nominal is None else self.nominal.to_dict(),
            "metrics_summary": self.metric_summary,
        }


def _draw(rng: np.random.Generator, sc: ToleranceScenario, size: int) -> np.ndarray:
    if sc.distribution == "normal":
        return rng.normal(0.0, sc.sigma_h, size)
    half = sc.sigma_h * math.sqrt(3.0)  # uniform with the same standard deviation
    return rng.uniform(-half, half, size)


def _shift(stack: LayerStack, mode: ModeSpec, dh: float, method: str) -> float:
    if method == "linear":
        return frequency_sensitivity(stack, mode) * dh
    h = stack.total_thickness
    return (frequency_at_thickness(h + dh, mode, stack.material)
            - frequency_at_thickness(h, mode, stack.material))


def run_tolerance(scenario: ToleranceScenario, design: LadderSpec | None = None,
                  stacks: Mapping[str, LayerStack] | None = None,
                  thresholds: MetricThresholds | None = None,
                  grid: SweepGrid | None = None) -> ToleranceReport:
    """Perturb thickness ``n_trials`` times and collect resonance shifts.

    Trial i draws from ``default_rng(seed + i)``: first the die-level error,
    then (uncorrelated mode) one error per resonator in name order. With a
    ``design``, every resonator's fs moves by the shift of its own stack
    (``stacks[name]``, defaulting to the scenario stack), the filter is
    re-simulated, and the trial passes or fails against ``thresholds``. A
    trial without a measurable passband counts as a failure.
    """
    sc = scenario
    thresholds = thresholds or MetricThresholds()
    grid = grid or SweepGrid(40.0, 60.0, 4001)
    stacks = dict(stacks or {})
    names = sorted(design.resonators) if design is not None else []

    nominal = None
    if design is not None:
        try:
            nominal = extract_metrics(simulate(design.build(), grid), spur_windows=())
        except MetricsError:
            nominal = None

    def trial(i: int) -> tuple[float, TrialResult]:
        rng = np.random.default_rng(sc.seed + i)
        dh = float(_draw(rng, sc, 1)[0])
        shift = _shift(sc.stack, sc.mode, dh, sc.method)
        if design is None:
            return shift, TrialResult(i, dh, {}, None, None)
        own = dict.fromkeys(names, dh)
        if not sc.correlated:
            draws = _draw(rng, sc, len(names))
            own = {n: float(d) for n, d in zip(names, draws)}
        res = {}
        for n in names:
            st = stacks.get(n, sc.stack)
            res[n] = shift_resonator(design.resonators[n], _shift(st, sc.mode, own[n], sc.method))
        try:
            m = extract_metrics(simulate(design.with_resonators(res).build(), grid),
                                spur_windows=())
        except MetricsError:
            m = None
        fs = {n: res[n].fs for n in names}
        return shift, TrialResult(i, dh, fs, m, thresholds.passes(m, nominal))

    with ThreadPoolExecutor(max_workers=worker_count(sc.n_trials)) as pool:
        outcomes = list(pool.map(trial, range(sc.n_trials)))

    shifts = np.array([s for s, _ in outcomes])
    trials = [t for _, t in outcomes]
    sens = frequency_sensitivity(sc.stack, sc.mode)
    report = ToleranceReport(sc, sens, abs(sens) * sc.sigma_h, ShiftSummary.of(shifts), trials,
                             nominal=nominal, design=design)
    if design is not None:
        report.pass_rate = sum(bool(t.passed) for t in trials) / len(trials)
        ok = [t.metrics for t in trials if t.metrics is not None]
        if ok:
            report.metric_summary = {
                "il_db": vars(ShiftSummary.of([m.il_db for m in ok])),
                "fbw_3db_pct": vars(ShiftSummary.of([m.fbw_3db for m in ok])),
                "f_center_ghz": vars(ShiftSummary.of([m.f_center for m in ok])),
                "n_measurable": len(ok),
            }
    return report


def required_thickness_margin(stack: LayerStack, mode: ModeSpec, delta_f_budget: float) -> float:
    """Thickness change (nm) that moves the overtone by ``delta_f_budget`` GHz."""
    if delta_f_budget < 0:
        raise ValueError("delta_f_budget must be >= 0")
    if delta_f_budget == 0:
        return 0.0
    f0 = mode_frequency(stack, mode)
    return stack.total_thickness - thickness_for_frequency(f0 + delta_f_budget, mode,
                                                            stack.material)


def trial_rows(report: ToleranceReport) -> list[tuple]:
    """Rows for the per-trial CSV: trial, dh_nm, fs_series_ghz, fs_shunt_ghz, il_db, fbw_pct, pass."""
    ser = sh = None
    if report.design is not None:
        ser = (report.design.names(SERIES) or [None])[0]
        sh = (report.design.names(SHUNT) or [None])[0]
    rows = []
    for t in report.trials:
        fs_ser = fs_sh = il = fbw = None
        if t.fs:
            fs_ser = t.fs.get(ser)
            fs_sh = t.fs.get(sh)
        if t.metrics is not None:
            il, fbw = t.metrics.il_db, t.metrics.fbw_3db
        rows.append((t.trial, t.dh_nm, fs_ser, fs_sh, il, fbw, t.passed))
    return rows
