"""Counts and eigenvalues of A and JA for the sech^2 wells kappa = 1..5."""
import argparse
import time
from pathlib import Path

from indefsl.coefficients import load_problem
from indefsl.matching import eigenvalues_A, eigenvalues_JA, gap_of_JA

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--kappa", type=int, nargs="*", default=[1, 2, 3, 4, 5])
    args = ap.parse_args()
    print("kappa  n_A  n_JA+  n_JA-  lambda1  nearest_JA+  seconds  A eigenvalues / JA eigenvalues (positive)")
    for k in args.kappa:
        p = load_problem(PROBLEMS / f"sech2_k{k}.json")
        a, b = k + 1.0, (k + 1.0) ** 2
        t0 = time.perf_counter()
        ra = eigenvalues_A(p, a, b)
        rj = eigenvalues_JA(p, a, b)
        g = gap_of_JA(p)
        dt = time.perf_counter() - t0
        ea = " ".join(f"{e.center:.10f}" for e in ra.eigenvalues)
        ej = " ".join(f"{e.center:.10f}" for e in rj.eigenvalues if e.center > 0)
        print(f"{k:5d}  {ra.count:3d}  {rj.details['n_positive']:5d}  {rj.details['n_negative']:5d}  "
              f"{g.lambda1:7.4f}  {g.nearest_positive:11.6f}  {dt:7.2f}  {ea} / {ej}")


if __name__ == "__main__":
    main()
