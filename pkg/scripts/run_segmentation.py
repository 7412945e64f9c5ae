"""Error vs segment count on the long Lorenz trajectory.

Splitting one trajectory into pieces multiplies the constraint rows without
new data; conditioning improves because short segments stay local.
"""

import argparse

import numpy as np

import occusid as oc


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--counts", default="1,10,100", help="segment counts to try")
    ap.add_argument("--rule", default="simpson", choices=["rh", "trap", "simpson"])
    args = ap.parse_args()
    counts = [int(c) for c in args.counts.split(",")]

    field, theta_true, basis = oc.builtin_system("lorenz")
    print("integrating lorenz for T=100 at h=1e-3 ...")
    traj = oc.integrate_rk4(field, np.array([-8.0, 7.0, 27.0]), 100.0, 1e-3)
    centers = oc.lattice_centers([(-20, 20), (-50, 50), (-20, 50)], 10.0)
    kern = oc.gaussian_rbf(10.0)

    print(f"\n{'segments':>9} {'rows':>7} {'l2 error':>12} {'condition':>12}")
    for parts in counts:
        trajs = oc.segment(traj, parts) if parts > 1 else [traj]
        sys = oc.assemble(trajs, centers, basis, kern, args.rule)
        r = oc.solve_pinv(sys)
        err = np.linalg.norm(r.theta_hat - theta_true)
        print(f"{parts:>9} {sys.A.shape[0]:>7} {err:>12.4e} {r.condition_number:>12.4e}")


if __name__ == "__main__":
    main()
