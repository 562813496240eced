"""Derivative-free Downhill-Simplex (Nelder-Mead) minimiser."""
from dataclasses import dataclass

import numpy as np


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    iterations: int
    evaluations: int
    converged: bool
    reason: str


def downhill_simplex(fun, start, initial_step=0.1, xtol=1e-8, ftol=1e-10, max_iter=5000,
                     on_eval=None, spread_diameter=1e-7):
    """Minimise ``fun`` from ``start``.

    Stops when the simplex diameter drops below ``xtol`` or the spread of
    vertex values below ``ftol``; hitting ``max_iter`` returns the best vertex
    with ``converged=False``.  ``on_eval(x, f)`` sees every evaluated point.

    The spread test is only trusted once the diameter is below
    ``spread_diameter``: a simplex straddling the minimum symmetrically has
    zero spread long before it has located anything.
    """
    x0 = np.asarray(start, dtype=float)
    n = x0.size
    evals = 0

    def f(x):
        nonlocal evals
        evals += 1
        v = float(fun(x))
        if on_eval is not None:
            on_eval(x, v)
        return v

    simplex = np.vstack([x0] + [x0 + initial_step * np.eye(n)[i] for i in range(n)])
    values = np.array([f(p) for p in simplex])

    for it in range(max_iter + 1):
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        diam = max(np.max(np.abs(simplex[1:] - simplex[0]), initial=0.0), 0.0)
        if values[-1] - values[0] < ftol and diam < spread_diameter:
            return SimplexResult(simplex[0], values[0], it, evals, True, "ftol")
        if diam < xtol:
            return SimplexResult(simplex[0], values[0], it, evals, True, "xtol")
        if it == max_iter:
            break

        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]
        xr = centroid + (centroid - worst)
        fr = f(xr)
        if fr < values[0]:
            xe = centroid + 2.0 * (centroid - worst)
            fe = f(xe)
            if fe < fr:
                simplex[-1], values[-1] = xe, fe
            else:
                simplex[-1], values[-1] = xr, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        else:
            if fr < values[-1]:
                xc = centroid + 0.5 * (xr - centroid)
                fc = f(xc)
                accept = fc <= fr
            else:
                xc = centroid + 0.5 * (worst - centroid)
                fc = f(xc)
                accept = fc < values[-1]
            if accept:
                simplex[-1], values[-1] = xc, fc
            else:
                best = simplex[0]
                for i in range(1, n + 1):
                    simplex[i] = best + 0.5 * (simplex[i] - best)
                    values[i] = f(simplex[i])

    order = np.argsort(values, kind="stable")
    return SimplexResult(simplex[order[0]], values[order[0]], max_iter, evals, False,
                         "max_iterations")
