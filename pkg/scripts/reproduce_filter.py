"""Simulate the bundled reference design and compare against the target figures.

    python3 scripts/reproduce_filter.py [--config paper.json]
"""
import argparse
import time

from xfl.config import load_config
from xfl.ladder import simulate
from xfl.metrics import compare_to_soa, extract_metrics, format_soa_table
from xfl.stack import ModeSpec, LayerStack, mode_frequency, thickness_for_frequency, trim_depth_for_offset

# (name, target, tolerance) of the simulated response
TARGETS = [("f_center", 49.3, 0.6), ("il_db", 1.7, 1.0), ("fbw_3db", 3.3, 1.0)]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--config", default="paper.json")
    args = ap.parse_args()
    cfg = load_config(args.config)

    t0 = time.perf_counter()
    sweep = simulate(cfg.ladder.build(), cfg.sweep)
    m = extract_metrics(sweep, spur_windows=cfg.spur_windows)
    dt = time.perf_counter() - t0
    print(f"simulated {len(sweep.frequencies)} points in {dt:.2f} s")
    for name, target, tol in TARGETS:
        v = getattr(m, name)
        flag = "ok" if abs(v - target) <= tol else "MISS"
        print(f"  {name:<10} {v:8.3f}   target {target} +/- {tol}   {flag}")
    print(f"  OoB rejection (excl. spur windows) {m.oob_rejection_excl_spurs_db:.2f} dB")

    mode = cfg.mode
    print("\nstack frequencies:")
    for name, st in cfg.stacks.items():
        print(f"  {name:<8} h={st.total_thickness:6.1f} nm  N={mode.order}  "
              f"f={mode_frequency(st, mode):.3f} GHz")
    a3 = ModeSpec(3, mode.lateral_wavelength)
    h1 = thickness_for_frequency(50.0, a3, cfg.material)
    print(f"  single layer A3 at 50 GHz: {h1:.1f} nm")
    single = LayerStack.uniform(1, 110.0, cfg.material)
    four = LayerStack.uniform(4, 110.0, cfg.material)
    print(f"  trim for {cfg.trim_delta_f} GHz: single layer "
          f"{trim_depth_for_offset(single, a3, cfg.trim_delta_f):.2f} nm, 4-layer "
          f"{trim_depth_for_offset(four, mode, cfg.trim_delta_f):.2f} nm")

    print()
    print(format_soa_table(compare_to_soa(m, label="simulated")))


if __name__ == "__main__":
    main()
