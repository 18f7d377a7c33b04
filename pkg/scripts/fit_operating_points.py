"""Seeded fit round trips at the two measured resonator operating points.

    python3 scripts/fit_operating_points.py [--trials 20] [--points 1001]
"""
import argparse

import numpy as np

from xfl.fitting import fit_mbvd, synthetic_record
from xfl.mbvd import ResonatorSpec, synthesize_mbvd

POINTS = {
    "shunt": ResonatorSpec(47.7, 0.0256, 22.0, 80.0),
    "series": ResonatorSpec(49.6, 0.0412, 52.0, 37.0),
}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trials", type=int, default=20)
    ap.add_argument("--points", type=int, default=1001)
    ap.add_argument("--snr", type=float, default=40.0)
    args = ap.parse_args()
    for name, spec in POINTS.items():
        f = np.linspace(spec.fs * 0.9, spec.fs * 1.1, args.points)
        errs = []
        for seed in range(args.trials):
            data = synthetic_record(synthesize_mbvd(spec), f, args.snr, np.random.default_rng(seed))
            s = fit_mbvd(data, seed=seed).spec
            errs.append([abs(s.fs / spec.fs - 1), abs(s.k2 / spec.k2 - 1),
                         abs(s.q / spec.q - 1), abs(s.c0 / spec.c0 - 1)])
        worst = 100 * np.max(errs, axis=0)
        print(f"{name}: worst relative error over {args.trials} trials (%): fs {worst[0]:.3f}  "
              f"k2 {worst[1]:.3f}  Q {worst[2]:.3f}  C0 {worst[3]:.3f}")


if __name__ == "__main__":
    main()
