"""Noise-trial comparison of the occupation-kernel and integral least-squares
estimators on segmented Lorenz data. Thin wrapper over `occusid montecarlo`."""

import argparse
import sys

from occusid.cli import main as cli_main


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=50)
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    return cli_main([
        "montecarlo",
        "--trials", str(args.trials),
        "--jobs", str(args.jobs),
        "--out", args.out,
    ])


if __name__ == "__main__":
    sys.exit(main())
