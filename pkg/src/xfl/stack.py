"""Thickness-overtone dispersion of layered (P3F) piezoelectric stacks.

Resonance frequency of an overtone of order N in a film of total thickness h,
excited with lateral wavelength lam:

    f = sqrt((v_lat / lam)**2 + (N * v_h / (2 h))**2)

Units at the API boundary: thickness in nm, wavelength in um, frequency in GHz,
velocities in m/s.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import brentq, least_squares

from .errors import InfeasibleError, StackError, UnderdeterminedError

NM = 1e-9
UM = 1e-6
GHZ = 1e9

V_MIN_PLAUSIBLE = 1000.0
V_MAX_PLAUSIBLE = 10000.0


@dataclass(frozen=True)
class AcousticConstants:
    v_thickness: float
    v_lateral: float = 4000.0

    def __post_init__(self):
        for name in ("v_thickness", "v_lateral"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be positive and finite, got {v!r}")
            if not V_MIN_PLAUSIBLE <= v <= V_MAX_PLAUSIBLE:
                warnings.warn(f"{name}={v:g} m/s is outside the plausible range "
                              f"[{V_MIN_PLAUSIBLE:g}, {V_MAX_PLAUSIBLE:g}] m/s", stacklevel=3)


@dataclass(frozen=True)
class Layer:
    thickness: float  # nm
    orientation: int = 1

    def __post_init__(self):
        if not self.thickness > 0:
            raise ValueError(f"layer thickness must be > 0 nm, got {self.thickness!r}")
        if self.orientation not in (1, -1):
            raise ValueError("orientation must be +1 or -1")


@dataclass(frozen=True)
class LayerStack:
    layers: tuple[Layer, ...]
    material: AcousticConstants

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if not self.layers:
            raise ValueError("a stack needs at least one layer")

    @classmethod
    def uniform(cls, n_layers: int, layer_thickness: float, material: AcousticConstants,
                alternating: bool = True) -> "LayerStack":
        layers = [Layer(layer_thickness, (-1) ** i if alternating else 1) for i in range(n_layers)]
        return cls(tuple(layers), material)

    @property
    def total_thickness(self) -> float:
        return float(sum(layer.thickness for layer in self.layers))

    @property
    def n_layers(self) -> int:
        return len(self.layers)

    @property
    def is_p3f(self) -> bool:
        signs = [layer.orientation for layer in self.layers]
        return all(a == -b for a, b in zip(signs, signs[1:]))

    @property
    def is_uniform(self) -> bool:
        t = [layer.thickness for layer in self.layers]
        return max(t) - min(t) <= 1e-9 * max(t)

    def with_total_thickness(self, h: float) -> "LayerStack":
        """Rescale all layers so the stack totals ``h`` nm."""
        s = h / self.total_thickness
        return LayerStack(tuple(Layer(l.thickness * s, l.orientation) for l in self.layers),
                          self.material)

    def trimmed(self, depth: float) -> "LayerStack":
        """Remove ``depth`` nm from the top layer."""
        top = self.layers[-1]
        if depth >= top.thickness:
            raise StackError(f"trim depth {depth:g} nm consumes the whole top layer")
        return LayerStack(self.layers[:-1] + (Layer(top.thickness - depth, top.orientation),),
                          self.material)


@dataclass(frozen=True)
class ModeSpec:
    order: int
    lateral_wavelength: float = 8.0  # um

    def __post_init__(self):
        if int(self.order) != self.order or self.order < 1:
            raise ValueError(f"mode order must be a positive integer, got {self.order!r}")
        if not self.lateral_wavelength > 0:
            raise ValueError("lateral wavelength must be > 0")


def _frequency(h_nm, order, lam_um, v_h, v_lat):
    lateral = v_lat / (lam_um * UM)
    thickness = order * v_h / (2.0 * np.asarray(h_nm, dtype=float) * NM)
    return np.sqrt(lateral**2 + thickness**2) / GHZ


def lateral_cutoff(mode: ModeSpec, constants: AcousticConstants) -> float:
    """Frequency (GHz) approached as the film becomes infinitely thick."""
    return constants.v_lateral / (mode.lateral_wavelength * UM) / GHZ


def mode_frequency(stack: LayerStack, mode: ModeSpec) -> float:
    m = stack.material
    return float(_frequency(stack.total_thickness, mode.order, mode.lateral_wavelength,
                            m.v_thickness, m.v_lateral))


def frequency_at_thickness(h: float, mode: ModeSpec, constants: AcousticConstants) -> float:
    return float(_frequency(h, mode.order, mode.lateral_wavelength,
                            constants.v_thickness, constants.v_lateral))


def thickness_for_frequency(f: float, mode: ModeSpec, constants: AcousticConstants) -> float:
    """Total thickness (nm) at which ``mode`` resonates at ``f`` GHz."""
    f_lat = lateral_cutoff(mode, constants)
    if not f > f_lat:
        raise InfeasibleError(f"{f:g} GHz is at or below the lateral cutoff {f_lat:g} GHz")
    f_hz, fl_hz = f * GHZ, f_lat * GHZ
    # difference-of-squares form keeps precision when f is close to the cutoff
    root = math.sqrt((f_hz - fl_hz) * (f_hz + fl_hz))
    return mode.order * constants.v_thickness / (2.0 * root) / NM


@dataclass(frozen=True)
class CalibrationPoint:
    thickness: float  # nm
    order: int
    lateral_wavelength: float  # um
    frequency: float  # GHz


@dataclass(frozen=True)
class Calibration:
    constants: AcousticConstants
    residuals: tuple[float, ...]  # f_model - f_data, GHz


def calibrate_velocity(points: Sequence[CalibrationPoint | tuple],
                       v_lateral: float | None = 4000.0) -> Calibration:
    """Least-squares fit of v_h (and v_lateral when ``v_lateral`` is None).

    Minimises sum((f_model - f_i)**2) over the supplied points.
    """
    pts = [p if isinstance(p, CalibrationPoint) else CalibrationPoint(*p) for p in points]
    n_unknowns = 1 if v_lateral is not None else 2
    h = np.array([p.thickness for p in pts], dtype=float)
    n = np.array([p.order for p in pts], dtype=float)
    lam = np.array([p.lateral_wavelength for p in pts], dtype=float)
    f = np.array([p.frequency for p in pts], dtype=float)
    distinct = {(p.thickness / p.order, p.lateral_wavelength) for p in pts}
    if len(pts) < n_unknowns or len(distinct) < n_unknowns:
        raise UnderdeterminedError(
            f"{n_unknowns} unknown(s) but only {len(distinct)} independent point(s)")

    # closed-form start: thickness term only, then optional lateral term
    v_lat0 = v_lateral if v_lateral is not None else 4000.0
    lat0 = (v_lat0 / (lam * UM)) / GHZ
    fth = np.sqrt(np.clip(f**2 - lat0**2, 1e-30, None))
    vh0 = float(np.mean(2 * h * NM * fth * GHZ / n))

    def model(theta):
        v_h = theta[0]
        v_l = v_lateral if v_lateral is not None else theta[1]
        return _frequency(h, n, lam, v_h, v_l)

    x0 = [vh0] if v_lateral is not None else [vh0, v_lat0]
    sol = least_squares(lambda th: model(th) - f, x0, x_scale=x0, xtol=1e-15, ftol=1e-15,
                        gtol=1e-15, bounds=(0, np.inf))
    v_h = float(sol.x[0])
    v_l = float(v_lateral) if v_lateral is not None else float(sol.x[1])
    res = tuple(float(r) for r in model(sol.x) - f)
    return Calibration(AcousticConstants(v_h, v_l), res)


def frequency_sensitivity(stack: LayerStack, mode: ModeSpec) -> float:
    """df/dh of the overtone in GHz per nm of total thickness (negative)."""
    m = stack.material
    h = stack.total_thickness * NM
    a = mode.order * m.v_thickness / 2.0
    f = mode_frequency(stack, mode) * GHZ
    dfdh = -a**2 / (h**3 * f)  # Hz per m
    return dfdh * NM / GHZ


def trim_depth_for_offset(stack: LayerStack, mode: ModeSpec, delta_f: float,
                          electrode_offset: float = 0.0) -> float:
    """Thinning depth (nm) that raises the overtone by ``delta_f`` GHz.

    The shift is evaluated on an effective thickness ``h + electrode_offset`` to
    absorb electrode loading; the returned depth is still a film thickness.
    """
    if delta_f < 0:
        raise InfeasibleError("delta_f must be >= 0")
    if delta_f == 0:
        return 0.0
    h_eff = stack.total_thickness + electrode_offset
    if h_eff <= 0:
        raise InfeasibleError("effective thickness is not positive")
    f0 = frequency_at_thickness(h_eff, mode, stack.material)
    depth = h_eff - thickness_for_frequency(f0 + delta_f, mode, stack.material)
    if depth >= stack.total_thickness:
        raise InfeasibleError(
            f"a {delta_f:g} GHz shift needs {depth:.3f} nm, more than the "
            f"{stack.total_thickness:g} nm film")
    return depth


def calibrate_electrode_offset(stack: LayerStack, mode: ModeSpec, delta_f: float,
                               observed_depth: float) -> float:
    """Electrode offset (nm) making ``trim_depth_for_offset`` return ``observed_depth``."""
    h = stack.total_thickness
    if not 0 < observed_depth < h:
        raise InfeasibleError("observed trim depth must lie inside the film")

    def gap(offset):
        # depth grows with effective thickness; saturate at the film thickness
        try:
            depth = trim_depth_for_offset(stack, mode, delta_f, offset)
        except InfeasibleError:
            depth = h
        return depth - observed_depth

    lo, hi = -h * (1 - 1e-9), 10.0 * h
    if gap(lo) > 0 or gap(hi) < 0:
        raise InfeasibleError("observed trim depth cannot be matched by any electrode offset")
    return brentq(gap, lo, hi, xtol=1e-12)


def coupled_overtone_orders(stack: LayerStack, max_order: int) -> list[tuple[int, str]]:
    """Classify overtone orders 1..max_order by how strongly a P3F stack couples them.

    With M alternating layers, orders N = M*n (n odd) are ``"strong"``. When layer
    thicknesses differ, the neighbours N +/- 1 of each strong order lose their
    cancellation and are reported as ``"partial"``. Everything else is ``"suppressed"``.
    """
    if not stack.is_p3f:
        raise StackError("coupling classification needs alternating layer orientations")
    m = stack.n_layers
    strong = {m * n for n in range(1, max_order // m + 1, 2)}
    partial: set[int] = set()
    if not stack.is_uniform:
        partial = {k for s in strong for k in (s - 1, s + 1)
                   if 1 <= k <= max_order and k not in strong}
        if partial:
            warnings.warn(f"non-uniform layer thicknesses: orders {sorted(partial)} "
                          "are partially unsuppressed", stacklevel=2)
    out = []
    for order in range(1, max_order + 1):
        if order in strong:
            out.append((order, "strong"))
        elif order in partial:
            out.append((order, "partial"))
        else:
            out.append((order, "suppressed"))
    return out


def dispersion_table(thicknesses: Sequence[float], orders: Sequence[int], lateral_wavelength: float,
                     constants: AcousticConstants) -> list[tuple[float, int, float]]:
    """Rows of (thickness_nm, order, frequency_ghz) for plotting dispersion curves."""
    rows = []
    for order in orders:
        for h in thicknesses:
            rows.append((float(h), int(order),
                         frequency_at_thickness(h, ModeSpec(order, lateral_wavelength), constants)))
    return rows
