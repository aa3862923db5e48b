"""Band edges of a periodic problem, FD oracle comparison and the JA gap audit."""
import argparse
from pathlib import Path

import numpy as np

from indefsl.coefficients import load_problem
from indefsl.oracle import periodic_edges
from indefsl.periodic import audit_gaps_JA, band_edges

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--problem", default=str(PROBLEMS / "mathieu.json"))
    ap.add_argument("--lambda-max", type=float, default=100.0)
    ap.add_argument("--grid", type=int, default=4000)
    args = ap.parse_args()
    p = load_problem(args.problem)
    bs = band_edges(p, args.lambda_max)
    ora = periodic_edges(p, args.grid, bs.lam_max)
    print(f"lambda1 = {bs.lambda1:.12f}")
    for kind in ("periodic", "antiperiodic"):
        ev = [e.value for e in bs.edges if e.kind == kind]
        err = np.max(np.abs(np.array(ev) - ora[kind][: len(ev)]), initial=0.0)
        print(f"{kind:13s} edges {np.round(ev, 10).tolist()}  max |ODE - FD| {err:.2e}")
    for g in bs.gaps:
        print(f"gap ({g[0]:.10f}, {g[1]:.10f})  width {g[1] - g[0]:.3e}")
    for rep in audit_gaps_JA(p):
        print(f"{rep.theorem:13s} {rep.interval}  {rep.measured}  {rep.verdict}")


if __name__ == "__main__":
    main()
