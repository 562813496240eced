#!/usr/bin/env python3
"""Compare engine counterfactuals on 2-D fixtures with an exhaustive grid (step 1e-3).

For every fixture and regularizer prints the engine value, the cheapest
feasible grid point, their difference and the blackbox fallback's value.

    python3 scripts/grid_check.py [--regularizers l2 l1 l1skew]
"""
import argparse
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from cfx.blackbox import blackbox_counterfactual  # noqa: E402
from cfx.engine import CounterfactualQuery, compute_counterfactual  # noqa: E402
from fixtures import EUCLID, L1, L1_SKEW, grid_cases  # noqa: E402
from oracles import grid_min  # noqa: E402

REGS = {"l2": EUCLID, "l1": L1, "l1skew": L1_SKEW}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--regularizers", nargs="+", choices=sorted(REGS), default=["l2", "l1skew"])
    ap.add_argument("--step", type=float, default=1e-3)
    args = ap.parse_args(argv)

    print(f"{'fixture':12s} {'reg':7s} {'method':10s} {'engine':>10s} {'grid':>10s} "
          f"{'diff':>9s} {'blackbox':>10s}")
    worst = float("-inf")
    for name, model, x, y, tol in grid_cases():
        for key in args.regularizers:
            reg = REGS[key]
            q = CounterfactualQuery(x, y, reg, tolerance=tol)
            r = compute_counterfactual(model, q)
            best, _ = grid_min(model, y, x, reg, r.regularization + 0.02, h=args.step, tol=tol)
            bb = blackbox_counterfactual(model, q).regularization
            worst = max(worst, r.regularization - best)
            print(f"{name:12s} {key:7s} {r.method:10s} {r.regularization:10.6f} {best:10.6f} "
                  f"{r.regularization - best:9.2e} {bb:10.6f}")
    print(f"max(engine - grid) = {worst:.2e}")
    return 0


if __name__ == "__main__":
    t0 = time.perf_counter()
    code = main()
    print(f"{time.perf_counter() - t0:.1f}s")
    sys.exit(code)
