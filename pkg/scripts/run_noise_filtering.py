"""Measurement noise vs moving-average filtering on the planar system.

Prints median parameter errors over seeds for raw noisy data and for the
trailing moving average with its fill-in rows dropped.
"""

import argparse

import numpy as np

import occusid as oc
from occusid.trajectory import Trajectory


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--sigma", type=float, default=0.01)
    ap.add_argument("--window", type=int, default=20)
    ap.add_argument("--seeds", type=int, default=20)
    args = ap.parse_args()

    field, theta_true, basis = oc.builtin_system("system1")
    x0s = oc.lattice_centers([(-0.5, 0.5), (-2.5, -1.5)], 0.25)
    trajs = [oc.integrate_rk4(field, x0, 1.0, 1e-3) for x0 in x0s]
    centers = oc.lattice_centers([(-3, 3), (-3, 5)], 1.0)
    kern = oc.gaussian_rbf(10.0)

    def max_err(tr_list):
        sys = oc.assemble(tr_list, centers, basis, kern, "simpson")
        return float(np.abs(oc.solve_pinv(sys).theta_hat - theta_true).max())

    raw, filt = [], []
    for s in range(args.seeds):
        noisy = [oc.add_measurement_noise(t, args.sigma, seed=1000 * s + j)
                 for j, t in enumerate(trajs)]
        raw.append(max_err(noisy))
        smoothed = []
        for t in noisy:
            sm = oc.moving_average(t, args.window)
            smoothed.append(Trajectory(sm.samples[args.window - 1:], sm.step))
        filt.append(max_err(smoothed))
        print(f"seed block {s:2d}: raw {raw[-1]:.4e}  filtered {filt[-1]:.4e}")

    print(f"\nsigma={args.sigma} window={args.window} over {args.seeds} seeds")
    print(f"median raw error      {np.median(raw):.4e}")
    print(f"median filtered error {np.median(filt):.4e}")


if __name__ == "__main__":
    main()
