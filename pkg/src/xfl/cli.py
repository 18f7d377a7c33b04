"""Command-line entry point: ``xfl <subcommand> [--config FILE] [--seed N] [--out DIR]``.

Exit status is 0 on success, 1 on domain errors (bad config, infeasible
design, unreadable data) and 2 on usage errors.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .config import DesignConfig, load_config
from .errors import XflError
from .fitting import AdmittanceRecord, fit_mbvd, synthetic_record
from .ladder import SweepResult, simulate
from .mbvd import admittance, k2_from_fs_fp, motional_q, resonance_frequencies, synthesize_mbvd
from .metrics import compare_to_soa, extract_metrics, format_soa_table
from .optimize import optimize
from .stack import (LayerStack, ModeSpec, coupled_overtone_orders, dispersion_table, frequency_sensitivity,
                    mode_frequency, thickness_for_frequency, trim_depth_for_offset)
from .tolerance import run_tolerance, trial_rows
from .touchstone import read_touchstone, write_touchstone


def _clean(x):
    # JSON-safe, deterministic representation
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else None
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n")


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".12g")
    return str(v)


def write_csv(path: str, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_cell(v) for v in r])


def _sweep_rows(s: SweepResult):
    cols = [s.db("s11"), s.db("s21"), s.db("s22")]
    return [(s.frequencies[k], cols[0][k], cols[1][k], cols[2][k]) for k in range(len(s.frequencies))]


def _seed(args, cfg: DesignConfig) -> int:
    return cfg.seed if args.seed is None else args.seed


def cmd_stack(args, cfg: DesignConfig) -> dict:
    mode = cfg.mode
    thick = set(cfg.table_thicknesses) | {s.total_thickness for s in cfg.stacks.values()}
    rows = dispersion_table(sorted(thick), cfg.table_orders, mode.lateral_wavelength, cfg.material)
    write_csv(os.path.join(args.out, "dispersion.csv"), ["thickness_nm", "order", "frequency_ghz"],
              rows)
    stacks = {}
    for name, st in cfg.stacks.items():
        entry = {"layers_nm": [l.thickness for l in st.layers],
                 "orientations": [l.orientation for l in st.layers],
                 "total_thickness_nm": st.total_thickness,
                 "frequency_ghz": mode_frequency(st, mode),
                 "sensitivity_ghz_per_nm": frequency_sensitivity(st, mode),
                 "trim_depth_nm": trim_depth_for_offset(st, mode, cfg.trim_delta_f,
                                                        cfg.electrode_offset)}
        if st.is_p3f:
            entry["coupled_orders"] = [{"order": n, "coupling": c}
                                       for n, c in coupled_overtone_orders(st, 2 * mode.order)]
        stacks[name] = entry
    # single-layer reference: one layer of the first stack at the low-order mode
    first = next(iter(cfg.stacks.values()), None)
    single = None
    if first is not None:
        layer = first.layers[0].thickness
        sl = LayerStack((first.layers[0],), cfg.material)
        smode = ModeSpec(cfg.single_layer_order, mode.lateral_wavelength)
        single = {"thickness_nm": layer, "order": cfg.single_layer_order,
                  "frequency_ghz": mode_frequency(sl, smode),
                  "sensitivity_ghz_per_nm": frequency_sensitivity(sl, smode),
                  "trim_depth_nm": trim_depth_for_offset(sl, smode, cfg.trim_delta_f,
                                                         cfg.electrode_offset),
                  "thickness_for_50ghz_nm": thickness_for_frequency(50.0, smode, cfg.material)}
    out = {
        "material": {"v_thickness_m_s": cfg.material.v_thickness,
                     "v_lateral_m_s": cfg.material.v_lateral},
        "calibration_residuals_ghz": None if cfg.calibration is None
        else list(cfg.calibration.residuals),
        "mode": {"order": mode.order, "lateral_wavelength_um": mode.lateral_wavelength},
        "trim_delta_f_ghz": cfg.trim_delta_f,
        "electrode_offset_nm": cfg.electrode_offset,
        "stacks": stacks,
        "single_layer": single,
    }
    write_json(os.path.join(args.out, "stack.json"), out)
    for h, n, f in rows:
        if n == mode.order and h in {s.total_thickness for s in cfg.stacks.values()}:
            print(f"h={h:g} nm N={n} f={f:.3f} GHz")
    return out


def cmd_resonator(args, cfg: DesignConfig) -> dict:
    f = cfg.sweep.frequencies()
    names = [args.name] if args.name else sorted(cfg.ladder.resonators)
    out = {}
    for name in names:
        if name not in cfg.ladder.resonators:
            raise XflError(f"unknown resonator {name!r}")
        spec = cfg.ladder.resonators[name]
        params = synthesize_mbvd(spec, cfg.convention)
        rec = AdmittanceRecord(f, admittance(params, f), validate=False, z0=cfg.ladder.z0)
        write_touchstone(os.path.join(args.out, f"{name}.s1p"), rec,
                         comments=(f"resonator {name}",))
        write_csv(os.path.join(args.out, f"{name}_admittance.csv"),
                  ["frequency_ghz", "re_y_s", "im_y_s"],
                  [(f[k], rec.y[k].real, rec.y[k].imag) for k in range(len(f))])
        fs, fp = resonance_frequencies(params)
        out[name] = {
            "spec": {"fs_ghz": spec.fs, "k2_pct": 100 * spec.k2, "q": spec.q, "c0_ff": spec.c0,
                     "spurs": [{"fs_ghz": s.fs, "k2_pct": 100 * s.k2, "q": s.q}
                               for s in spec.spurs]},
            "mbvd": {"c0_ff": params.c0, "rs_ohm": params.rs, "r0_ohm": params.r0,
                     "branches": [{"rm_ohm": b.rm, "lm_nh": b.lm, "cm_ff": b.cm}
                                  for b in params.branches]},
            "fs_ghz": fs, "fp_ghz": fp,
            "k2_extracted_pct": 100 * k2_from_fs_fp(fs, fp, cfg.convention),
            "q_motional": motional_q(params),
        }
        print(f"{name}: fs={fs:.3f} GHz fp={fp:.3f} GHz")
    write_json(os.path.join(args.out, "resonator.json"), out)
    return out


def _filter_metrics(cfg: DesignConfig, sweep: SweepResult):
    return extract_metrics(sweep, spur_windows=cfg.spur_windows,
                           min_inband_points=cfg.min_inband_points)


def cmd_filter(args, cfg: DesignConfig) -> dict:
    sweep = simulate(cfg.ladder.build(), cfg.sweep)
    write_touchstone(os.path.join(args.out, "filter.s2p"), sweep, comments=("ladder filter",))
    write_csv(os.path.join(args.out, "filter.csv"),
              ["frequency_ghz", "s11_db", "s21_db", "s22_db"], _sweep_rows(sweep))
    m = _filter_metrics(cfg, sweep).to_dict()
    write_json(os.path.join(args.out, "metrics.json"), m)
    print(f"f_center={m['f_center_ghz']:.3f} GHz IL={m['il_db']:.3f} dB "
          f"FBW={m['fbw_3db_pct']:.3f} % OoB={m['oob_excl_spurs_db']:.2f} dB")
    return m


def _load_data(path: str) -> AdmittanceRecord:
    if path.lower().endswith(".csv"):
        with open(path, encoding="utf-8", newline="") as fh:
            rd = csv.DictReader(fh)
            try:
                rows = [(float(r["frequency_ghz"]), float(r["re_y_s"]), float(r["im_y_s"]))
                        for r in rd]
            except (KeyError, ValueError) as exc:
                raise XflError(f"{path}: bad admittance CSV ({exc})") from None
        a = np.array(rows, dtype=float).reshape(-1, 3)
        return AdmittanceRecord(a[:, 0], a[:, 1] + 1j * a[:, 2])
    data = read_touchstone(path)
    if not isinstance(data, AdmittanceRecord):
        raise XflError(f"{path}: fit needs one-port data")
    return AdmittanceRecord(data.frequencies, data.y, z0=data.z0)


def cmd_fit(args, cfg: DesignConfig) -> dict:
    seed = _seed(args, cfg)
    fs_cfg = cfg.fit
    if args.data:
        data = _load_data(args.data)
        source = {"data": os.path.basename(args.data)}
    else:
        name = fs_cfg.resonator or sorted(cfg.ladder.resonators)[0]
        spec = cfg.ladder.resonators[name]
        lo, hi = fs_cfg.span
        f = np.linspace(spec.fs * lo, spec.fs * hi, fs_cfg.n_points)
        data = synthetic_record(synthesize_mbvd(spec, cfg.convention), f, fs_cfg.snr_db,
                                np.random.default_rng(seed))
        write_touchstone(os.path.join(args.out, "fit_data.s1p"), data,
                         comments=(f"synthetic {name}, {fs_cfg.snr_db:g} dB SNR, seed {seed}",))
        source = {"synthetic": name, "snr_db": fs_cfg.snr_db, "seed": seed}
    res = fit_mbvd(data, n_spurs=fs_cfg.n_spurs, n_restarts=fs_cfg.n_restarts, seed=seed,
                   residual_ceiling=fs_cfg.residual_ceiling)
    out = {"source": source, **res.to_dict()}
    write_json(os.path.join(args.out, "fit.json"), out)
    print(f"fs={res.spec.fs:.4f} GHz k2={100 * res.spec.k2:.3f} % Q={res.spec.q:.2f} "
          f"C0={res.spec.c0:.3f} fF residual={res.residual:.3g}")
    if not res.converged:
        print("warning: fit residual above ceiling", file=sys.stderr)
    return out


def cmd_optimize(args, cfg: DesignConfig) -> dict:
    o = cfg.optimizer
    n_starts = args.starts if args.starts is not None else o.n_starts
    res = optimize(cfg.ladder, cfg.optimizer_bounds(), o.objective, seed=_seed(args, cfg),
                   n_starts=n_starts, grid=o.grid, max_iter=o.max_iter)
    out = res.to_dict()
    write_json(os.path.join(args.out, "optimize.json"), out)
    write_touchstone(os.path.join(args.out, "optimized.s2p"), res.sweep,
                     comments=("optimized ladder filter",))
    if res.metrics is not None:
        write_json(os.path.join(args.out, "optimized_metrics.json"), res.metrics.to_dict())
        print(f"cost {res.initial_cost:.4f} -> {res.cost:.4f}; IL={res.metrics.il_db:.3f} dB "
              f"FBW={res.metrics.fbw_3db:.3f} %")
    return out


def cmd_tolerance(args, cfg: DesignConfig) -> dict:
    seed = _seed(args, cfg)
    out = {}
    for case in cfg.tolerance:
        sc = replace(case.scenario, seed=seed)
        if args.trials is not None:
            sc = replace(sc, n_trials=args.trials)
        if case.with_filter:
            rep = run_tolerance(sc, cfg.ladder, cfg.stacks_by_resonator(), cfg.thresholds,
                                cfg.sweep)
        else:
            rep = run_tolerance(sc)
        out[case.name] = rep.to_dict()
        write_csv(os.path.join(args.out, f"tolerance_{case.name}_trials.csv"),
                  ["trial", "dh_nm", "fs_series_ghz", "fs_shunt_ghz", "il_db", "fbw_pct", "pass"],
                  trial_rows(rep))
        line = (f"{case.name}: shift std {rep.shift.std:.4f} GHz "
                f"(predicted {rep.predicted_std_ghz:.4f})")
        if rep.pass_rate is not None:
            line += f", pass rate {rep.pass_rate:.3f}"
        print(line)
    write_json(os.path.join(args.out, "tolerance.json"), out)
    return out


def cmd_report(args, cfg: DesignConfig) -> dict:
    sweep = simulate(cfg.ladder.build(), cfg.sweep)
    m = _filter_metrics(cfg, sweep)
    rows = compare_to_soa(m, label="simulated (config)")
    table = format_soa_table(rows)
    out = {"metrics": m.to_dict(), "comparison": [r.to_dict() for r in rows]}
    write_json(os.path.join(args.out, "report.json"), out)
    with open(os.path.join(args.out, "report.txt"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(table + "\n")
    print(table)
    return out


COMMANDS = {
    "stack": (cmd_stack, "dispersion table, stack frequencies and trim planning"),
    "resonator": (cmd_resonator, "synthesize mBVD resonators and sweep admittance"),
    "filter": (cmd_filter, "simulate the ladder filter and extract metrics"),
    "fit": (cmd_fit, "extract mBVD parameters from one-port data"),
    "optimize": (cmd_optimize, "tune C0 and series/shunt offset for low IL"),
    "tolerance": (cmd_tolerance, "Monte Carlo thickness tolerance study"),
    "report": (cmd_report, "metrics plus comparison with published filters"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None,
                        help="design config JSON (default: bundled paper.json)")
    common.add_argument("--seed", type=int, default=None, help="override the config seed")
    common.add_argument("--out", default="out", help="output directory (default: out)")

    p = argparse.ArgumentParser(prog="xfl", description="P3F acoustic ladder filter toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="command")
    parsers = {}
    for name, (_, help_) in COMMANDS.items():
        parsers[name] = sub.add_parser(name, parents=[common], help=help_, description=help_)
    parsers["resonator"].add_argument("--name", help="only this resonator")
    parsers["fit"].add_argument("--data", help=".s1p or CSV (frequency_ghz,re_y_s,im_y_s)")
    parsers["optimize"].add_argument("--starts", type=int, help="override number of starts")
    parsers["tolerance"].add_argument("--trials", type=int, help="override trials per scenario")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    if not argv:
        parser.print_usage(sys.stderr)
        return 2
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return 2
    try:
        cfg = load_config(args.config)
        os.makedirs(args.out, exist_ok=True)
        COMMANDS[args.command][0](args, cfg)
    except (XflError, ValueError, KeyError, OSError) as exc:
        print(f"xfl {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
