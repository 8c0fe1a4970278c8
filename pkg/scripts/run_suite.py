"""Run every experiment on the standard dimension list and print a status table.

Usage: python3 scripts/run_suite.py [--seed 42] [--trials N] [--threads 1]
"""

import argparse

from operon.lab import EXPERIMENTS, run_experiment

DIMS = [(2, 2), (2, 3), (3, 3)]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=42)
    parser.add_argument("--trials", type=int, default=None)
    parser.add_argument("--threads", type=int, default=1)
    args = parser.parse_args()

    failed = 0
    for name in sorted(EXPERIMENTS):
        for dims in DIMS:
            rep = run_experiment(name, args.seed, dims, trials=args.trials, threads=args.threads)
            ok = sum(bool(v) for v in rep.checks.values())
            print(f"{name:<22} {dims[0]}x{dims[1]}  {rep.status:<8} trials={rep.trials:<5} checks={ok}/{len(rep.checks)}")
            failed += rep.status == "fail"
    raise SystemExit(1 if failed else 0)


if __name__ == "__main__":
    main()
