"""JSON design configuration: stacks, resonators, ladder, sweep and run settings.

A config is one JSON document with ``schema_version`` 1. ``load_config``
validates it and resolves cross references (resonator -> stack, ladder
element -> resonator) into the toolkit's dataclasses.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Any

from .errors import ConfigError
from .ladder import SERIES, SHUNT, LadderSpec, SweepGrid
from .mbvd import CONVENTIONS, ResonatorSpec, SpurSpec
from .metrics import MIN_INBAND_POINTS
from .optimize import Bounds, Objective
from .stack import (AcousticConstants, Calibration, CalibrationPoint, Layer, LayerStack, ModeSpec,
                    calibrate_velocity, frequency_at_thickness)
from .tolerance import MetricThresholds, ToleranceScenario

SCHEMA_VERSION = 1
BUNDLED = "paper.json"


@dataclass
class OptimizerSettings:
    n_starts: int = 16
    bounds_rel: float = 0.5
    max_iter: int = 300
    objective: Objective = field(default_factory=Objective)
    grid: SweepGrid = field(default_factory=lambda: SweepGrid(40.0, 60.0, 2001))


@dataclass
class ToleranceCase:
    name: str
    scenario: ToleranceScenario
    with_filter: bool = False


@dataclass
class FitSettings:
    resonator: str | None = None  # synthetic-data source when no data file is given
    snr_db: float = 40.0
    n_points: int = 1001
    span: tuple[float, float] = (0.9, 1.1)  # relative to fs
    n_restarts: int = 8
    n_spurs: int = 0
    residual_ceiling: float = 0.05


@dataclass
class DesignConfig:
    material: AcousticConstants
    calibration: Calibration | None
    mode: ModeSpec
    convention: str
    stacks: dict[str, LayerStack]
    resonator_stacks: dict[str, str]  # resonator name -> stack name
    ladder: LadderSpec
    sweep: SweepGrid
    spur_windows: list[tuple[float, float]] | None
    min_inband_points: int
    trim_delta_f: float
    electrode_offset: float
    single_layer_order: int
    table_thicknesses: list[float]
    table_orders: list[int]
    optimizer: OptimizerSettings
    tolerance: list[ToleranceCase]
    thresholds: MetricThresholds
    fit: FitSettings
    seed: int = 0
    source: str = ""

    def stacks_by_resonator(self) -> dict[str, LayerStack]:
        return {r: self.stacks[s] for r, s in self.resonator_stacks.items()}

    def optimizer_bounds(self) -> Bounds:
        return Bounds.around(self.ladder, self.optimizer.bounds_rel)


def _get(d: dict, key: str, where: str, default: Any = ..., kind=None):
    if key not in d:
        if default is ...:
            raise ConfigError(f"{where}: missing required key {key!r}")
        return default
    v = d[key]
    if kind is not None and v is not None and not isinstance(v, kind):
        raise ConfigError(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}, "
                          f"got {type(v).__name__}")
    return v


_NUM = (int, float)


def _grid(d: dict, where: str) -> SweepGrid:
    try:
        return SweepGrid(float(_get(d, "f_start_ghz", where, kind=_NUM)),
                         float(_get(d, "f_stop_ghz", where, kind=_NUM)),
                         int(_get(d, "n_points", where, kind=int)),
                         _get(d, "spacing", where, "linear", str))
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _material(d: dict) -> tuple[AcousticConstants, Calibration | None]:
    v_lat = float(_get(d, "v_lateral_m_s", "material", 4000.0, _NUM))
    if "v_thickness_m_s" in d:
        return AcousticConstants(float(d["v_thickness_m_s"]), v_lat), None
    pts = _get(d, "calibrate_from", "material", kind=list)
    try:
        points = [CalibrationPoint(float(p["thickness_nm"]), int(p["order"]),
                                   float(p["lateral_wavelength_um"]), float(p["frequency_ghz"]))
                  for p in pts]
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"material.calibrate_from: bad point ({exc})") from None
    cal = calibrate_velocity(points, v_lateral=v_lat)
    return cal.constants, cal


def _stack(d: dict, where: str, material: AcousticConstants) -> LayerStack:
    layers = _get(d, "layers_nm", where, kind=list)
    if not layers:
        raise ConfigError(f"{where}.layers_nm: empty")
    orient = _get(d, "orientations", where, None, list)
    if orient is None:
        orient = [1 if k % 2 == 0 else -1 for k in range(len(layers))]
    if len(orient) != len(layers):
        raise ConfigError(f"{where}: orientations and layers_nm differ in length")
    try:
        return LayerStack(tuple(Layer(float(t), int(o)) for t, o in zip(layers, orient)), material)
    except ValueError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _spur(d: dict, where: str, main_fs: float, main_q: float, stack: LayerStack | None,
          mode: ModeSpec) -> SpurSpec:
    k2 = float(_get(d, "k2_pct", where, kind=_NUM)) / 100.0
    q = _get(d, "q", where, None, _NUM)
    if "fs_ghz" in d:
        fs = float(d["fs_ghz"])
    elif "order" in d:
        if stack is None:
            raise ConfigError(f"{where}: spur given by order needs the resonator's stack")
        # scale the main fs by the overtone ratio on the same film
        h = stack.total_thickness
        ratio = (frequency_at_thickness(h, ModeSpec(int(d["order"]), mode.lateral_wavelength),
                                        stack.material)
                 / frequency_at_thickness(h, mode, stack.material))
        fs = main_fs * ratio
    else:
        raise ConfigError(f"{where}: spur needs fs_ghz or order")
    return SpurSpec(fs, k2, None if q is None else float(q))


def parse_config(doc: dict, source: str = "") -> DesignConfig:
    """Validate a decoded JSON document and build a ``DesignConfig``."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION}")

    try:
        material, cal = _material(_get(doc, "material", "config", kind=dict))
    except ValueError as exc:
        raise ConfigError(f"material: {exc}") from None
    md = _get(doc, "mode", "config", {}, dict)
    mode = ModeSpec(int(md.get("order", 12)), float(md.get("lateral_wavelength_um", 8.0)))
    convention = _get(doc, "k2_convention", "config", "capacitance-ratio", str)
    if convention not in CONVENTIONS:
        raise ConfigError(f"k2_convention must be one of {CONVENTIONS}")

    stacks = {name: _stack(sd, f"stacks.{name}", material)
              for name, sd in _get(doc, "stacks", "config", {}, dict).items()}

    resonators: dict[str, ResonatorSpec] = {}
    res_stacks: dict[str, str] = {}
    for name, rd in _get(doc, "resonators", "config", kind=dict).items():
        where = f"resonators.{name}"
        sname = _get(rd, "stack", where, None, str)
        if sname is not None and sname not in stacks:
            raise ConfigError(f"{where}.stack: unknown stack {sname!r}")
        fs = float(_get(rd, "fs_ghz", where, kind=_NUM))
        q = float(_get(rd, "q", where, kind=_NUM))
        st = stacks.get(sname) if sname else None
        try:
            spurs = tuple(_spur(sd, f"{where}.spurs[{k}]", fs, q, st, mode)
                          for k, sd in enumerate(_get(rd, "spurs", where, [], list)))
            resonators[name] = ResonatorSpec(
                fs, float(_get(rd, "k2_pct", where, kind=_NUM)) / 100.0, q,
                float(_get(rd, "c0_ff", where, kind=_NUM)), spurs,
                float(_get(rd, "rs_ohm", where, 0.0, _NUM)),
                float(_get(rd, "r0_ohm", where, 0.0, _NUM)))
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
        if sname:
            res_stacks[name] = sname

    fd = _get(doc, "filter", "config", kind=dict)
    layout, parasitics = [], {}
    for k, ed in enumerate(_get(fd, "elements", "filter", kind=list)):
        where = f"filter.elements[{k}]"
        placement = _get(ed, "placement", where, kind=str)
        rname = _get(ed, "resonator", where, kind=str)
        if placement not in (SERIES, SHUNT):
            raise ConfigError(f"{where}.placement must be {SERIES!r} or {SHUNT!r}")
        if rname not in resonators:
            raise ConfigError(f"{where}.resonator: unknown resonator {rname!r}")
        layout.append((placement, rname))
        lp = float(_get(ed, "parasitic_nh", where, 0.0, _NUM))
        if lp:
            parasitics[k] = lp
    if not layout:
        raise ConfigError("filter.elements: empty")
    used = {n for _, n in layout}
    ladder = LadderSpec({n: r for n, r in resonators.items() if n in used}, tuple(layout),
                        float(_get(fd, "z0_ohm", "filter", 50.0, _NUM)), parasitics, convention)

    sweep = _grid(_get(doc, "sweep", "config", kind=dict), "sweep")
    mdoc = _get(doc, "metrics", "config", {}, dict)
    windows = _get(mdoc, "spur_windows_ghz", "metrics", None, list)
    if windows is not None:
        windows = [(float(a), float(b)) for a, b in windows]

    td = _get(doc, "trim", "config", {}, dict)
    tab = _get(doc, "dispersion_table", "config", {}, dict)

    od = _get(doc, "optimizer", "config", {}, dict)
    obj = Objective(**{k: float(v) for k, v in od.get("objective", {}).items()})
    opt = OptimizerSettings(int(od.get("n_starts", 16)), float(od.get("bounds_rel", 0.5)),
                            int(od.get("max_iter", 300)), obj,
                            _grid(od["grid"], "optimizer.grid") if "grid" in od
                            else SweepGrid(40.0, 60.0, 2001))

    tdoc = _get(doc, "tolerance", "config", {}, dict)
    thresholds = MetricThresholds(**{k: float(v) for k, v in tdoc.get("thresholds", {}).items()})
    seed = int(_get(doc, "seed", "config", 0, int))
    cases = []
    for k, sd in enumerate(tdoc.get("scenarios", [])):
        where = f"tolerance.scenarios[{k}]"
        if "stack" in sd:
            if sd["stack"] not in stacks:
                raise ConfigError(f"{where}.stack: unknown stack {sd['stack']!r}")
            st = stacks[sd["stack"]]
        else:
            st = _stack(sd, where, material)
        try:
            sc = ToleranceScenario(st, ModeSpec(int(sd.get("order", mode.order)),
                                                float(sd.get("lateral_wavelength_um",
                                                             mode.lateral_wavelength))),
                                   float(_get(sd, "sigma_nm", where, kind=_NUM)),
                                   sd.get("distribution", "normal"), int(sd.get("n_trials", 1000)),
                                   seed, bool(sd.get("correlated", True)),
                                   sd.get("method", "linear"))
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from None
        cases.append(ToleranceCase(str(sd.get("name", f"scenario{k}")), sc,
                                   bool(sd.get("with_filter", False))))

    fdoc = _get(doc, "fit", "config", {}, dict)
    fit_res = fdoc.get("resonator")
    if fit_res is not None and fit_res not in resonators:
        raise ConfigError(f"fit.resonator: unknown resonator {fit_res!r}")
    fit = FitSettings(fit_res, float(fdoc.get("snr_db", 40.0)), int(fdoc.get("n_points", 1001)),
                      tuple(float(x) for x in fdoc.get("span", (0.9, 1.1))),
                      int(fdoc.get("n_restarts", 8)), int(fdoc.get("n_spurs", 0)),
                      float(fdoc.get("residual_ceiling", 0.05)))

    return DesignConfig(
        material=material, calibration=cal, mode=mode, convention=convention, stacks=stacks,
        resonator_stacks={n: s for n, s in res_stacks.items() if n in used}, ladder=ladder,
        sweep=sweep, spur_windows=windows,
        min_inband_points=int(mdoc.get("min_inband_points", MIN_INBAND_POINTS)),
        trim_delta_f=float(td.get("delta_f_ghz", 1.9)),
        electrode_offset=float(td.get("electrode_offset_nm", 0.0)),
        single_layer_order=int(td.get("single_layer_order", 3)),
        table_thicknesses=[float(x) for x in tab.get("thicknesses_nm", [])],
        table_orders=[int(x) for x in tab.get("orders", [mode.order])],
        optimizer=opt, tolerance=cases, thresholds=thresholds, fit=fit, seed=seed, source=source)


def bundled_text(name: str = BUNDLED) -> str:
    return resources.files("xfl").joinpath("data", name).read_text(encoding="utf-8")


def load_config(path: str | os.PathLike | None = None) -> DesignConfig:
    """Load a config file. ``None``, or a bare name that does not exist on disk
    but matches a bundled config (e.g. ``paper.json``), loads the bundled copy."""
    if path is None:
        path = BUNDLED
    p = os.fspath(path)
    if os.path.exists(p):
        with open(p, encoding="utf-8") as fh:
            text = fh.read()
    elif os.path.basename(p) == p and resources.files("xfl").joinpath("data", p).is_file():
        text = bundled_text(p)
    else:
        raise ConfigError(f"config file not found: {p}")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{p}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return parse_config(doc, p)
