"""Global solution of ``min 0.5||z - x||^2  s.t.  0.5 z'Az + b.z + r <= 0`` for any symmetric A.

A single-constraint QCQP has zero duality gap, so the optimum is found from
the dual: for a multiplier ``lam >= 0`` with ``I + lam A`` PSD the Lagrangian
minimiser is ``z(lam) = (I + lam A)^{-1} (x - lam b)``, and ``lam`` solves the
secular equation ``g(z(lam)) = 0``.  In the eigenbasis of ``A`` every
evaluation is O(d).
"""
import math

import numpy as np

from ..numerics import sym_eigen
from .program import Constraint, ProgramSolution, Status

HARD_TOL = 1e-10


def _canonical_sign(v):
    """Flip ``v`` so its largest-magnitude entry (first on ties) is positive."""
    k = int(np.argmax(np.abs(v)))
    return v if v[k] > 0 else -v


class _Secular:
    def __init__(self, A, b, r, x):
        eig = sym_eigen(A)
        self.e = eig.eigenvalues
        self.V = eig.eigenvectors
        self.xt = self.V.T @ x
        self.bt = self.V.T @ b
        self.r = r

    def point_tilde(self, lam):
        return (self.xt - lam * self.bt) / (1.0 + lam * self.e)

    def g_tilde(self, zt):
        return float(0.5 * np.sum(self.e * zt ** 2) + self.bt @ zt + self.r)

    def phi(self, lam):
        return self.g_tilde(self.point_tilde(lam))


def _bisect(fun, lo, hi, iters=200):
    """Root of a decreasing function with fun(lo) > 0 >= fun(hi); returns the feasible end."""
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if fun(mid) > 0:
            lo = mid
        else:
            hi = mid
    return hi


def solve_single_qcqp_dual(x, A, b, r, lam_cap=1e12):
    """Return the global minimiser of the squared distance to ``x`` over one quadratic constraint.

    Ties between global minimisers in the hard case are broken by taking the
    positive multiple of the sign-normalised leading eigenvector.
    """
    x = np.asarray(x, dtype=float)
    b = np.asarray(b, dtype=float)
    A = np.asarray(A, dtype=float)
    con = Constraint(b, r, A)
    d = x.size

    def done(z, lam, hard=False, iters=0):
        primal = 0.5 * float((z - x) @ (z - x))
        gval = con.value(z)
        dual = primal + lam * gval
        grad = (z - x) + lam * con.grad(z)
        return ProgramSolution(Status.OPTIMAL, z, primal, iters, max(gval, 0.0),
                               float(np.max(np.abs(grad))), np.array([lam]),
                               {"duality_gap": abs(primal - dual), "hard_case": hard,
                                "multiplier": lam})

    if con.value(x) <= 0:
        return done(x.copy(), 0.0)

    sec = _Secular(A if con.A is not None else np.zeros((d, d)), b, float(r), x)
    e_min = sec.e[0]
    scale = 1.0 + np.abs(sec.xt).max(initial=0.0) + np.abs(sec.bt).max(initial=0.0)

    if e_min >= 0:
        hi = 1.0
        while sec.phi(hi) > 0:
            hi *= 2.0
            if hi > lam_cap:
                return ProgramSolution(Status.INFEASIBLE, np.full(d, np.nan), float("nan"))
        lam = _bisect(sec.phi, 0.0, hi)
        return done(sec.V @ sec.point_tilde(lam), lam)

    lam_up = -1.0 / e_min
    K = np.abs(sec.e - e_min) <= 1e-12 * max(1.0, abs(e_min))
    numer = sec.xt[K] - lam_up * sec.bt[K]
    if np.max(np.abs(numer)) > HARD_TOL * scale:
        # phi -> -inf at lam_up: an interior root exists
        hi = lam_up
        lam = _bisect(sec.phi, 0.0, hi)
        if lam >= lam_up:
            lam = math.nextafter(lam_up, 0.0)
        return done(sec.V @ sec.point_tilde(lam), lam)

    # limit of z(lam) at lam_up: eigenspace K components tend to -b/e_min
    def limit_point():
        zt = np.empty(d)
        zt[~K] = (sec.xt[~K] - lam_up * sec.bt[~K]) / (1.0 + lam_up * sec.e[~K])
        zt[K] = -sec.bt[K] / e_min
        return zt

    zt_lim = limit_point()
    phi_lim = sec.g_tilde(zt_lim)
    if phi_lim < 0:
        lam = _bisect(sec.phi, 0.0, lam_up)
        zt = sec.point_tilde(lam) if lam < lam_up else zt_lim
        return done(sec.V @ zt, lam)

    # hard case: move along the leading eigenvector until the constraint is active
    v = _canonical_sign(sec.V[:, np.flatnonzero(K)[0]])
    t = math.sqrt(2.0 * phi_lim / (-e_min))
    z = sec.V @ zt_lim + t * v
    return done(z, lam_up, hard=True)
