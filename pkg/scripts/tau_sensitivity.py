"""Empirical size across fixed tau values for one scenario, with common random numbers."""

import argparse
import os

from hdmanova.datagen import scenario_build, scenario_names
from hdmanova.harness import Budget, run_size


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="fda-M1-common-unbalanced", choices=scenario_names())
    ap.add_argument("--taus", default="0,0.5,0.8,0.99")
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--B", type=int, default=1000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    args = ap.parse_args()

    for tau in (float(t) for t in args.taus.split(",")):
        sc = Budget(reps=args.reps, B=args.B, tau=tau, seed=args.seed).apply(scenario_build(args.scenario))
        res = run_size(sc, workers=args.workers)
        print(f"tau={tau:.2f}  size={res.rejection_rate:.3f}  se={res.mc_se:.3f}")


if __name__ == "__main__":
    main()
