"""Log-barrier interior-point method for convex QCQPs.

Every constraint must be convex (PSD ``A`` or linear).  When the start point
is not strictly feasible a Phase-1 problem ``min s  s.t.  f_i(z) <= s`` is
solved first.
"""
import numpy as np

from ..numerics import is_psd
from .program import ProgramSolution, Status, kkt_residuals

ALPHA = 0.01
BETA = 0.5
ACTIVE_TOL = 1e-6


class _Barrier:
    """Objective ``t * f0(z) - sum log(-f_i(z))`` with stacked constraint data."""

    def __init__(self, Q, lin, A, q, c):
        self.Q, self.lin, self.q, self.c = Q, lin, q, c
        self.set_quadratic(A)

    def set_quadratic(self, A):
        # only constraints with a quadratic part pay for the matrix products
        self.A = A
        self.quad = np.flatnonzero(np.any(A != 0, axis=(1, 2))) if A.size else np.zeros(0, int)
        self.Aq = A[self.quad]

    def f0(self, z):
        v = self.lin @ z
        if self.Q is not None:
            v += 0.5 * z @ self.Q @ z
        return v

    def _parts(self, z):
        f = self.q @ z + self.c
        Az = None
        if self.quad.size:
            Az = self.Aq @ z
            f[self.quad] += 0.5 * (Az @ z)
        return f, Az

    def cons(self, z):
        return self._parts(z)[0]

    def phi(self, z, t):
        f = self.cons(z)
        if f.max(initial=-1.0) >= 0:
            return np.inf
        return t * self.f0(z) - np.log(-f).sum()

    def newton(self, z, t):
        f, Az = self._parts(z)
        J = self.q.copy()
        if Az is not None:
            J[self.quad] += Az
        inv = -1.0 / f
        g0 = self.lin if self.Q is None else self.Q @ z + self.lin
        grad = t * g0 + J.T @ inv
        H = (J * inv[:, None] ** 2).T @ J
        if self.quad.size:
            H += np.tensordot(inv[self.quad], self.Aq, axes=1)
        if self.Q is not None:
            H += t * self.Q
        return _newton_step(H, grad)


def _newton_step(H, grad):
    """Solve ``H dz = -grad`` by Cholesky, adding a growing ridge if ``H`` is numerically singular."""
    scale = max(float(np.max(np.abs(np.diag(H)))), 1e-300)
    ridge = 0.0
    for _ in range(12):
        try:
            L = np.linalg.cholesky(H + ridge * np.eye(H.shape[0]))
            dz = -np.linalg.solve(L.T, np.linalg.solve(L, grad))
            dec = float(-grad @ dz)
            if np.isfinite(dec) and dec >= 0:
                return dz, dec
        except np.linalg.LinAlgError:
            pass
        ridge = scale * 1e-14 if ridge == 0.0 else ridge * 100.0
    dz = -grad / scale
    return dz, float(-grad @ dz)


def _stack(constraints, n):
    m = len(constraints)
    A = np.zeros((m, n, n))
    q = np.zeros((m, n))
    c = np.zeros(m)
    for i, con in enumerate(constraints):
        if con.A is not None:
            A[i] = con.A
        q[i] = con.q
        c[i] = con.c
    return A, q, c


def _center(bar, z, t, max_newton, stop=None):
    """Damped Newton on the barrier objective.

    Returns ``(z, newton steps, stopped early, centred)``.  The Armijo test
    allows a rounding slack relative to the barrier value: at large ``t`` the
    exact decrease is below machine precision and a strict test would
    backtrack to nothing.
    """
    steps = 0
    dec = np.inf
    for _ in range(max_newton):
        dz, dec = bar.newton(z, t)
        if dec / 2 <= 1e-10:
            return z, steps, False, True
        s = 1.0
        while bar.cons(z + s * dz).max(initial=-1.0) >= 0:
            s *= BETA
            if s < 1e-12:
                break
        cur = bar.phi(z, t)
        slack = 1e-13 * max(1.0, abs(cur))
        while bar.phi(z + s * dz, t) > cur - ALPHA * s * dec + slack:
            s *= BETA
            if s < 1e-12:
                break
        if s < 1e-12:
            break
        z = z + s * dz
        steps += 1
        if stop is not None and stop(z):
            return z, steps, True, True
    # stalled: accept only if the remaining decrement is at rounding level
    return z, steps, False, dec / 2 <= 1e-6 * max(1.0, abs(bar.phi(z, t)))


def _barrier_loop(bar, z, m, gap_tol, mu, t0, max_outer, max_newton, stop=None):
    t = t0
    total = 0
    centred = True
    for _ in range(max_outer):
        z, steps, stopped, centred = _center(bar, z, t, max_newton, stop)
        total += steps
        if stopped:
            return z, t, total, True, centred
        if m / t <= gap_tol:
            break
        t *= mu
    return z, t, total, False, centred


def _phase1(constraints, z0, n, gap_tol, max_outer, max_newton):
    """Find a strictly feasible point or certify (numerically) that none exists."""
    A, q, c = _stack(constraints, n)
    m = len(constraints)
    # variables (z, s); constraints f_i(z) - s <= 0 plus s >= -1 to keep it bounded
    A1 = np.zeros((m + 1, n + 1, n + 1))
    A1[:m, :n, :n] = A
    q1 = np.zeros((m + 1, n + 1))
    q1[:m, :n] = q
    q1[:m, n] = -1.0
    q1[m, n] = -1.0
    c1 = np.concatenate([c, [-1.0]])
    lin = np.zeros(n + 1)
    lin[n] = 1.0
    bar = _Barrier(None, lin, A1, q1, c1)
    f = bar.cons(np.append(z0, 0.0))[:m]
    s0 = max(f.max() + 1.0, 0.0)
    w0 = np.append(z0, s0)
    w, _, steps, stopped, _ = _barrier_loop(
        bar, w0, m + 1, gap_tol, 10.0, 1.0, max_outer, max_newton,
        stop=lambda w: w[n] < 0)
    return w[:n], (stopped or w[n] < 0), steps


def _polish_multipliers(prog, z, lam):
    """Least-squares multipliers on the nearly active constraints.

    The barrier estimate ``-1 / (t f_i)`` leaves a stationarity residual of
    ``|grad phi| / t``; fitting the active multipliers directly removes most of
    it.  The fit is kept only when it is non-negative and more stationary.
    """
    if lam.size == 0:
        return lam
    vals = np.array([con.value(z) for con in prog.constraints])
    act = np.flatnonzero(vals >= -ACTIVE_TOL)
    if act.size == 0:
        return lam
    J = np.array([prog.constraints[i].grad(z) for i in act])
    fit = np.linalg.lstsq(J.T, -prog.objective_grad(z), rcond=None)[0]
    if np.any(fit < 0):
        return lam
    cand = np.zeros_like(lam)
    cand[act] = fit
    if kkt_residuals(prog, z, cand)[0] < kkt_residuals(prog, z, lam)[0]:
        return cand
    return lam


def solve_convex_qcqp(prog, start=None, gap_tol=1e-9, mu=20.0, t0=1.0,
                      max_outer=60, max_newton=100):
    """Minimise a convex quadratic objective under convex quadratic constraints."""
    n = prog.dim
    for con in prog.constraints:
        if con.A is not None and not is_psd(con.A):
            raise ValueError("solve_convex_qcqp requires PSD constraint matrices")
    z = np.zeros(n) if start is None else np.asarray(start, dtype=float).copy()
    m = len(prog.constraints)
    A, q, c = _stack(prog.constraints, n)
    bar = _Barrier(prog.Q, prog.linear, A, q, c)
    steps = 0
    if m and np.any(bar.cons(z) >= 0):
        z, ok, steps = _phase1(prog.constraints, z, n, 1e-10, max_outer, max_newton)
        if not ok:
            return ProgramSolution(Status.INFEASIBLE, z, float("nan"), steps,
                                   prog.violation(z))
    if m == 0:
        bar.set_quadratic(np.zeros((0, n, n)))
    z, t, more, _, centred = _barrier_loop(bar, z, max(m, 1), gap_tol, mu, t0, max_outer,
                                           max_newton)
    steps += more
    lam = -1.0 / (t * bar.cons(z)) if m else np.zeros(0)
    lam = _polish_multipliers(prog, z, lam)
    stat, comp, _ = kkt_residuals(prog, z, lam)
    status = Status.OPTIMAL if (m / t <= gap_tol or m == 0) and centred else Status.MAX_ITERATIONS
    if not np.all(np.isfinite(z)):
        status = Status.UNBOUNDED
    return ProgramSolution(status, z, prog.objective(z), steps, prog.violation(z),
                           stat, lam, {"duality_measure": m / t, "complementarity": comp})
