"""Seeded random-well suite: count estimates and oracle agreement per case."""
import argparse
import csv
import os
import sys

import numpy as np

from indefsl.coefficients import build_problem
from indefsl.oracle import oracle_eigenvalues
from indefsl.theorems import SUITE_SEED, SUITE_SIZE, SuiteRow, max_discrepancy, run_suite, suite_interval, suite_problem


def oracle_error(row, seed, n=4000, X=30.0):
    p = build_problem(suite_problem(row.case, seed))
    a, b = suite_interval(p)
    oa = oracle_eigenvalues(p, "A", a, b, X, n)
    oj = np.concatenate([oracle_eigenvalues(p, "JA", -b, -a, X, n), oracle_eigenvalues(p, "JA", a, b, X, n)])
    if len(oa) != len(row.eigenvalues_A) or len(oj) != len(row.eigenvalues_JA):
        return float("inf")
    return float(max(np.max(np.abs(np.sort(row.eigenvalues_A) - oa), initial=0.0),
                     np.max(np.abs(np.sort(row.eigenvalues_JA) - oj), initial=0.0)))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--cases", type=int, default=SUITE_SIZE)
    ap.add_argument("--seed", type=int, default=SUITE_SEED)
    ap.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    ap.add_argument("--oracle", action="store_true", help="also compare with the FD oracle (n=4000, X=30)")
    ap.add_argument("--csv", default=None)
    args = ap.parse_args()
    rows = run_suite(args.cases, args.seed, args.workers)
    fields = list(SuiteRow.CSV_FIELDS) + (["oracle_error"] if args.oracle else [])
    out = open(args.csv, "w", newline="") if args.csv else sys.stdout
    w = csv.writer(out)
    w.writerow(fields)
    for r in rows:
        extra = [f"{oracle_error(r, args.seed):.3e}"] if args.oracle else []
        w.writerow(["" if v is None else v for v in r.csv_row()] + extra)
    if args.csv:
        out.close()
    print("max discrepancy:", max_discrepancy(rows), file=sys.stderr)


if __name__ == "__main__":
    main()
