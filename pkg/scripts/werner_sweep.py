"""Sweep the two-qubit Werner family and print PPT and hull-distance data.

Usage: python3 scripts/werner_sweep.py [--points 11] [--budget 200]
"""

import argparse
import time

import numpy as np

from operon.entanglement import ppt_min_eigen, separable_approximation
from operon.numerics import projector, singlet
from operon.states import StateFunctional


def werner(p):
    return p * projector(singlet()) + (1 - p) * np.eye(4) / 4


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=11)
    parser.add_argument("--budget", type=int, default=200)
    args = parser.parse_args()

    print(f"{'p':>6} {'min PT eig':>12} {'(1-3p)/4':>10} {'hull dist':>10} {'time s':>7}")
    for p in np.linspace(0.0, 1.0, args.points):
        rho = StateFunctional(werner(p), (2, 2))
        t0 = time.perf_counter()
        lam = ppt_min_eigen(rho.density, rho.dims).value
        dist, _ = separable_approximation(rho, budget=args.budget)
        print(f"{p:6.3f} {lam:12.6f} {(1 - 3 * p) / 4:10.6f} {dist:10.2e} {time.perf_counter() - t0:7.2f}")


if __name__ == "__main__":
    main()
