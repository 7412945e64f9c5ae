"""Kernel-width sweep on the planar system via `occusid sweep`."""

import argparse
import sys

from occusid.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--values", default="1,2,5,10,20,50,100")
    ap.add_argument("--noise-sigma", type=float, default=0.0)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    argv = [
        "sweep",
        "--system", "system1",
        "--h", "1e-2",
        "--param", "mu",
        "--values", args.values,
        "--out", args.out,
    ]
    if args.noise_sigma > 0:
        argv += ["--noise-sigma", str(args.noise_sigma)]
    return cli_main(argv)


if __name__ == "__main__":
    sys.exit(main())
