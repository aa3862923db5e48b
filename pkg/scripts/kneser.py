"""Eigenvalue counts below the threshold for the two Kneser tails as X doubles."""
import argparse
from pathlib import Path

from indefsl.coefficients import load_problem
from indefsl.theorems import verify_accumulation

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--N", type=int, default=20)
    args = ap.parse_args()
    for name, top in (("kneser_super", 5.0), ("kneser_sub", 3.0)):
        rep = verify_accumulation(load_problem(PROBLEMS / f"{name}.json"), 0.0, top, N=args.N)
        print(f"{name}: {rep.verdict} ({rep.reason})")
        print("      X    n_A  n_JA+  n_JA-")
        for h in rep.measured["history"]:
            print(f"  {h['X']:5.0f}  {h['n_A']:5d}  {h['n_JA_positive']:5d}  {h['n_JA_negative']:5d}")


if __name__ == "__main__":
    main()
