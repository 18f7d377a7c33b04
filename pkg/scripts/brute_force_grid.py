"""Exhaustive 20x20x20 grid over (C0 series, C0 shunt, delta_f) for the 3-element ladder.

Independent oracle for the optimizer: it re-derives the admittances and the
ABCD cascade inline with plain numpy (no imports from xfl) and reports the
lowest insertion loss among designs with a measurable 3-dB passband.

    python3 scripts/brute_force_grid.py [--n 20] [--rel 0.3] [--out grid.json]
"""
import argparse
import json
import time

import numpy as np

Z0 = 50.0
Q = 80.0
SERIES = dict(fs=49.6, k2=0.048, c0=37.0)
SHUNT = dict(fs=47.7, k2=0.075, c0=80.0)
# series-resonator spurs as fractions of its fs, coupling 0.5 %
SPUR_RATIOS = (0.916675, 1.083325)
SPUR_K2 = 0.005
F = np.linspace(40.0, 60.0, 2001)  # GHz
MIN_INBAND = 50


def branch_y(w, fs, k2, c0):
    cm = c0 * k2 / (1 - k2)
    ws = 2 * np.pi * fs * 1e9
    lm = 1 / (ws**2 * cm)
    rm = 1 / (ws * cm * Q)
    return 1 / (rm + 1j * w * lm + 1 / (1j * w * cm))


def resonator_y(w, fs, k2, c0_ff, spurs=()):
    c0 = c0_ff * 1e-15
    y = 1j * w * c0 + branch_y(w, fs, k2, c0)
    for fsp, k2p in spurs:
        y = y + branch_y(w, fsp, k2p, c0)
    return y


def s21_db(c0_ser, c0_sh, df, spur_ratios=SPUR_RATIOS):
    w = 2 * np.pi * F * 1e9
    fs_ser = SHUNT["fs"] + df
    spurs = [(fs_ser * r, SPUR_K2) for r in spur_ratios]
    z = 1 / resonator_y(w, fs_ser, SERIES["k2"], c0_ser, spurs)
    y = resonator_y(w, SHUNT["fs"], SHUNT["k2"], c0_sh)
    # series Z, shunt Y, series Z
    a = 1 + z * y
    b = 2 * z + z * z * y
    c = y
    d = 1 + z * y
    s21 = 2 / (a + b / Z0 + c * Z0 + d)
    return 20 * np.log10(np.abs(s21))


def insertion_loss(db):
    """IL if the response has a resolvable 3-dB passband, else None."""
    i = int(np.argmax(db))
    if i == 0 or i == len(db) - 1:
        return None
    level = db[i] - 3
    lo = np.flatnonzero(db[:i] < level)
    hi = np.flatnonzero(db[i + 1:] < level)
    if lo.size == 0 or hi.size == 0:
        return None
    j0, j1 = lo[-1], i + 1 + hi[0]
    f_lo = F[j0] + (level - db[j0]) / (db[j0 + 1] - db[j0]) * (F[j0 + 1] - F[j0])
    f_hi = F[j1 - 1] + (level - db[j1 - 1]) / (db[j1] - db[j1 - 1]) * (F[j1] - F[j1 - 1])
    if np.count_nonzero((F >= f_lo) & (F <= f_hi)) < MIN_INBAND:
        return None
    return -float(db[i])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--rel", type=float, default=0.3)
    ap.add_argument("--out")
    args = ap.parse_args()

    r = args.rel
    axes = [np.linspace(SERIES["c0"] * (1 - r), SERIES["c0"] * (1 + r), args.n),
            np.linspace(SHUNT["c0"] * (1 - r), SHUNT["c0"] * (1 + r), args.n),
            np.linspace(1.9 * (1 - r), 1.9 * (1 + r), args.n)]
    t0 = time.time()
    best = (np.inf, None)
    n_valid = 0
    for a in axes[0]:
        for b in axes[1]:
            for c in axes[2]:
                il = insertion_loss(s21_db(a, b, c))
                if il is None:
                    continue
                n_valid += 1
                if il < best[0]:
                    best = (il, (float(a), float(b), float(c)))
    out = {"n": args.n, "rel": r, "best_il_db": best[0],
           "best_point": {"c0_series_ff": best[1][0], "c0_shunt_ff": best[1][1],
                          "delta_f_ghz": best[1][2]},
           "n_valid": n_valid, "seconds": round(time.time() - t0, 1)}
    print(json.dumps(out, indent=2))
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(out, fh, indent=2)


if __name__ == "__main__":
    main()
