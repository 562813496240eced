#!/usr/bin/env python3
"""Random validity sweep: every reported counterfactual must re-predict to the target.

Prints one row per model family with counts of solved instances, outcomes by
method or failure reason, violations and time.

    python3 scripts/validity_suite.py --instances 240 --seed 2024
"""
import argparse
import sys
import time
from collections import Counter, defaultdict
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from cfx import models as M  # noqa: E402
from cfx.engine import CounterfactualQuery, compute_counterfactual  # noqa: E402
from cfx.errors import NoCounterfactual  # noqa: E402
from fixtures import FAMILIES  # noqa: E402
from test_acceptance import _validity_instance  # noqa: E402


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instances", type=int, default=240)
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    outcomes = defaultdict(Counter)
    seconds = Counter()
    violations = 0
    for i in range(args.instances):
        family = FAMILIES[i % len(FAMILIES)]
        m, x, y, tol, reg = _validity_instance(rng, family)
        t0 = time.perf_counter()
        try:
            r = compute_counterfactual(m, CounterfactualQuery(x, y, reg, tolerance=tol))
            tag = r.method
            if not M.matches_target(m, r.x_cf, y, tol + 1e-9):
                violations += 1
                tag = "VIOLATION"
        except NoCounterfactual as exc:
            tag = exc.reason
        seconds[family] += time.perf_counter() - t0
        outcomes[family][tag] += 1

    print(f"{'family':14s} {'time[s]':>8s}  outcomes")
    for family in FAMILIES:
        detail = ", ".join(f"{k}={v}" for k, v in sorted(outcomes[family].items()))
        print(f"{family:14s} {seconds[family]:8.2f}  {detail}")
    print(f"total {sum(seconds.values()):.1f}s, violations {violations}")
    return 1 if violations else 0


if __name__ == "__main__":
    sys.exit(main())
