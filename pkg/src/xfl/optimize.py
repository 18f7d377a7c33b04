"""Insertion-loss driven tuning of a fixed ladder template.

Decision variables are the static capacitance of each resonator and the
series-to-shunt resonance offset. Q and k2 stay at their template values.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
from scipy.optimize import minimize

from .errors import MetricsError
from .ladder import SERIES, SHUNT, LadderSpec, SweepGrid, SweepResult, shift_series_offset, simulate
from .metrics import FilterMetrics, extract_metrics
from .parallel import worker_count

PENALTY = 1e6


@dataclass(frozen=True)
class DesignVariables:
    c0: Mapping[str, float]  # fF, keyed by resonator name
    delta_f: float  # GHz, mean series fs minus mean shunt fs

    def __post_init__(self):
        object.__setattr__(self, "c0", dict(sorted(self.c0.items())))
        if not self.delta_f > 0:
            raise ValueError("delta_f must be > 0")
        if any(not v > 0 for v in self.c0.values()):
            raise ValueError("c0 values must be > 0")

    def to_dict(self) -> dict:
        return {"c0_ff": dict(self.c0), "delta_f_ghz": self.delta_f}


@dataclass(frozen=True)
class Bounds:
    c0: Mapping[str, tuple[float, float]]
    delta_f: tuple[float, float]

    def __post_init__(self):
        object.__setattr__(self, "c0", dict(sorted(self.c0.items())))
        for lo, hi in list(self.c0.values()) + [self.delta_f]:
            if not 0 < lo <= hi:
                raise ValueError(f"bad bound ({lo}, {hi})")

    @classmethod
    def around(cls, template: LadderSpec, rel: float = 0.5) -> "Bounds":
        v = variables_of(template)
        c0 = {n: (x * (1 - rel), x * (1 + rel)) for n, x in v.c0.items()}
        return cls(c0, (v.delta_f * (1 - rel), v.delta_f * (1 + rel)))

    def names(self) -> list[str]:
        return list(self.c0)

    def lower(self) -> np.ndarray:
        return np.array([lo for lo, _ in self.c0.values()] + [self.delta_f[0]])

    def upper(self) -> np.ndarray:
        return np.array([hi for _, hi in self.c0.values()] + [self.delta_f[1]])

    def to_vars(self, x: np.ndarray) -> DesignVariables:
        names = self.names()
        return DesignVariables({n: float(x[i]) for i, n in enumerate(names)}, float(x[-1]))

    def to_vector(self, v: DesignVariables) -> np.ndarray:
        return np.array([v.c0[n] for n in self.names()] + [v.delta_f])

    def contains(self, v: DesignVariables) -> bool:
        x = self.to_vector(v)
        return bool(np.all(x >= self.lower()) and np.all(x <= self.upper()))


@dataclass(frozen=True)
class Objective:
    target_fbw: float = 3.3  # percent
    il_weight: float = 1.0
    fbw_weight: float = 2.0  # per percentage point of FBW error
    ripple_weight: float = 0.5

    def __post_init__(self):
        w = (self.il_weight, self.fbw_weight, self.ripple_weight)
        if min(w) < 0 or max(w) <= 0:
            raise ValueError("weights must be >= 0 with at least one > 0")

    def cost(self, m: FilterMetrics) -> float:
        return (self.il_weight * m.il_db
                + self.fbw_weight * abs(m.fbw_3db - self.target_fbw)
                + self.ripple_weight * m.ripple_db)


def variables_of(template: LadderSpec) -> DesignVariables:
    ser, sh = template.names(SERIES), template.names(SHUNT)
    df = (np.mean([template.resonators[n].fs for n in ser])
          - np.mean([template.resonators[n].fs for n in sh]))
    c0 = {n: template.resonators[n].c0 for n in ser + sh}
    return DesignVariables(c0, float(df))


def apply_variables(template: LadderSpec, v: DesignVariables) -> LadderSpec:
    res = dict(template.resonators)
    for n, c in v.c0.items():
        res[n] = res[n].replace(c0=c)
    return shift_series_offset(template.with_resonators(res), v.delta_f)


def evaluate_design(v: DesignVariables, template: LadderSpec, grid: SweepGrid,
                    obj: Objective) -> float:
    """Scalar cost of one design point; unmeasurable responses cost ``PENALTY``."""
    try:
        sweep = simulate(apply_variables(template, v).build(), grid)
        m = extract_metrics(sweep, spur_windows=())
    except (MetricsError, ValueError):
        return PENALTY
    c = obj.cost(m)
    return c if math.isfinite(c) else PENALTY


@dataclass
class StartResult:
    index: int
    start: DesignVariables
    best: DesignVariables
    cost: float
    costs: list[float]


@dataclass
class OptimizationResult:
    best: DesignVariables
    cost: float
    initial_cost: float
    trace: list[float]  # best-so-far cost over all evaluations, starts in index order
    starts: list[StartResult]
    sweep: SweepResult | None
    metrics: FilterMetrics | None
    design: LadderSpec
    improved: bool = field(default=False)

    def to_dict(self) -> dict:
        return {
            "best": self.best.to_dict(),
            "cost": self.cost,
            "initial_cost": self.initial_cost,
            "improved": self.improved,
            "n_evaluations": len(self.trace),
            "metrics": None if self.metrics is None else self.metrics.to_dict(),
            "starts": [{"index": s.index, "start": s.start.to_dict(), "best": s.best.to_dict(),
                        "cost": s.cost, "n_evaluations": len(s.costs)} for s in self.starts],
            "trace": self.trace,
        }


def _nelder_mead(fun, u0: np.ndarray, max_iter: int):
    d = u0.size
    simplex = [u0]
    for k in range(d):
        u = u0.copy()
        u[k] = u[k] + 0.15 if u[k] + 0.15 <= 1.0 else u[k] - 0.15
        simplex.append(u)
    res = minimize(fun, u0, method="Nelder-Mead", bounds=[(0.0, 1.0)] * d,
                   options={"initial_simplex": np.array(simplex), "maxiter": max_iter,
                            "xatol": 1e-6, "fatol": 1e-9})
    return res


def optimize(template: LadderSpec, bounds: Bounds | None = None, obj: Objective | None = None,
             seed: int = 0, n_starts: int = 16, grid: SweepGrid | None = None,
             max_iter: int = 300, include_template: bool = True) -> OptimizationResult:
    """Multi-start bounded Nelder-Mead over (C0 per resonator, delta_f).

    Start 0 is the template point (clipped into ``bounds``) when
    ``include_template``; the rest are uniform draws from the box using
    ``seed``. Starts run concurrently; the winner is the lowest cost, ties to
    the lowest start index.
    """
    bounds = bounds or Bounds.around(template)
    obj = obj or Objective()
    grid = grid or SweepGrid(40.0, 60.0, 2001)
    lo, hi = bounds.lower(), bounds.upper()
    span = hi - lo
    free = span > 0

    def to_x(u):
        x = lo.copy()
        x[free] = lo[free] + np.clip(u, 0.0, 1.0) * span[free]
        return x

    def cost_x(x):
        return evaluate_design(bounds.to_vars(x), template, grid, obj)

    x_template = np.clip(bounds.to_vector(variables_of(template)), lo, hi)
    rng = np.random.default_rng(seed)
    starts = []
    for k in range(n_starts):
        if k == 0 and include_template:
            starts.append(x_template)
        else:
            starts.append(lo + rng.random(lo.size) * span)

    def run(k):
        x0 = starts[k]
        costs: list[float] = []
        best = [math.inf, x0]

        def fun(u):
            x = to_x(u)
            c = cost_x(x)
            costs.append(c)
            if c < best[0]:
                best[0], best[1] = c, x
            return c

        if free.any():
            u0 = (x0[free] - lo[free]) / span[free]
            _nelder_mead(fun, u0, max_iter)
        else:
            fun(np.zeros(0))
        return StartResult(k, bounds.to_vars(x0), bounds.to_vars(best[1]), best[0], costs)

    with ThreadPoolExecutor(max_workers=worker_count(n_starts)) as pool:
        results = list(pool.map(run, range(n_starts)))

    winner = min(results, key=lambda r: (r.cost, r.index))
    trace, running = [], math.inf
    for r in results:
        for c in r.costs:
            running = min(running, c)
            trace.append(running)
    initial_cost = cost_x(x_template)
    design = apply_variables(template, winner.best)
    sweep = simulate(design.build(), grid)
    try:
        metrics = extract_metrics(sweep, spur_windows=())
    except MetricsError:
        metrics = None
    return OptimizationResult(winner.best, winner.cost, initial_cost, trace, results, sweep,
                              metrics, design, improved=winner.cost < initial_cost)
