#!/usr/bin/env python3
"""Show the penalty CCP trace for one two-class QDA counterfactual.

Prints ``tau``, the penalised objective and the constraint violation at each
linearisation point, then the refined result.

    python3 scripts/ccp_trace.py
"""
import sys

import numpy as np

from cfx import models as M
from cfx.engine import build_constraints, counterfactual_program
from cfx.regularizers import Regularizer
from cfx.solvers import penalty_ccp, refine_active_set


def main():
    qda = M.QdaModel([[0.0, 0.0], [2.0, 1.0]],
                     [[[1.0, 0.3], [0.3, 0.5]], [[0.4, -0.1], [-0.1, 1.2]]], [0.5, 0.5])
    x = np.array([-1.0, -0.5])
    reg = Regularizer.euclidean()
    prog = counterfactual_program(reg, x, build_constraints(qda, 1).relaxed(1e-4))
    sol = penalty_ccp(prog, x)
    print(f"{'k':>3s} {'tau':>8s} {'penalised':>12s} {'violation':>10s}  point")
    for it in sol.info["trace"].iterates:
        print(f"{it.k:3d} {it.tau:8.1f} {it.penalized:12.6f} {it.violation:10.2e}  {it.point}")
    z = refine_active_set(prog, sol.x)
    print(f"status {sol.status.value}, x' = {z}, squared distance {np.sum((z - x) ** 2):.9f}, "
          f"prediction {qda.predict(z)}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
