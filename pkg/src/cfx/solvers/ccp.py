"""Penalty convex-concave procedure for difference-of-convex constraints.

Each DC constraint ``0.5 z'A+z - 0.5 z'A-z + q.z + c <= 0`` has its concave
part linearised at the current iterate ``z_k``::

    0.5 z'A-z  >=  rho.z + c_tilde,   rho = A- z_k,   c_tilde = -0.5 z_k'A- z_k

which gives a convex QCQP.  A non-negative slack per DC constraint keeps the
subproblem feasible from any start; slacks are charged at rate 1 while the
objective is scaled by ``1 / tau_k`` (equivalent to charging slacks at
``tau_k``).  Only constraints violated at ``z_k`` get a slack.
"""
from dataclasses import dataclass, field

import numpy as np

from .barrier import solve_convex_qcqp
from .program import CanonicalProgram, Constraint, ProgramSolution, Status
from ..errors import SubproblemFailure


@dataclass(frozen=True)
class PenaltySchedule:
    tau0: float = 1.0
    growth: float = 2.0
    tau_max: float = 1e6
    max_iter: int = 100
    move_tol: float = 1e-6
    slack_tol: float = 1e-6

    def next(self, tau):
        return min(self.growth * tau, self.tau_max)


@dataclass
class CcpIterate:
    k: int
    point: np.ndarray
    rho: list
    c_tilde: list
    tau: float
    penalized: float  # objective(z_k) / tau_k + total violation at z_k
    violation: float


@dataclass
class CcpTrace:
    iterates: list = field(default_factory=list)

    @property
    def penalized(self):
        return [it.penalized for it in self.iterates]

    def is_monotone(self, slack=1e-9):
        vals = self.penalized
        return all(b <= a + slack for a, b in zip(vals, vals[1:]))


def _dc_violation(constraints, z):
    return np.array([max(con.value(z), 0.0) for con in constraints])


def _convexify(con, zk, n_total, slack_idx=None):
    """Linearise the concave part of ``con`` at ``zk``, optionally attaching slack ``slack_idx``."""
    a_plus, a_minus = con.split if con.split is not None else (con.A, None)
    k = con.q.size
    rho = a_minus @ zk[:k] if a_minus is not None else np.zeros(k)
    c_tilde = -0.5 * zk[:k] @ a_minus @ zk[:k] if a_minus is not None else 0.0
    q = np.zeros(n_total)
    q[:k] = con.q - rho
    if slack_idx is not None:
        q[slack_idx] = -1.0
    A = None
    if a_plus is not None and np.any(a_plus):
        A = np.zeros((n_total, n_total))
        A[:k, :k] = a_plus
    return Constraint(q, con.c - c_tilde, A), rho, c_tilde


def penalty_ccp(prog, start, schedule=PenaltySchedule(), gap_tol=1e-8):
    """Approximately solve a program whose flagged constraints are DC.

    Constraints with ``is_dc`` are linearised; the remaining (convex)
    constraints are kept as hard constraints.  ``start`` is the first
    linearisation point and may be infeasible.  The returned solution carries
    the per-iteration ``CcpTrace`` in ``info["trace"]``.
    """
    n = prog.dim
    dc = [con for con in prog.constraints if con.is_dc]
    hard = [con for con in prog.constraints if not con.is_dc]
    z = np.asarray(start, dtype=float).copy()
    tau = schedule.tau0
    trace = CcpTrace()
    status = Status.MAX_ITERATIONS
    best = None
    sol = None
    for k in range(schedule.max_iter):
        viol = _dc_violation(dc, z)
        pen = prog.objective(z) / tau + viol.sum()
        # slacks only where z_k violates: elsewhere z_k already satisfies the
        # (inner) linearisation, so the subproblem stays feasible without one
        slacked = [j for j in range(len(dc)) if viol[j] > 0]
        n_total = n + len(slacked)
        slot = {j: n + i for i, j in enumerate(slacked)}
        rows, rhos, ctils = [], [], []
        for j, con in enumerate(dc):
            row, rho, ct = _convexify(con, z, n_total, slot.get(j))
            rows.append(row)
            rhos.append(rho)
            ctils.append(ct)
        trace.iterates.append(CcpIterate(k, z.copy(), rhos, ctils, tau, pen, float(viol.max(initial=0.0))))

        # without slacks the 1/tau scaling does not change the minimiser but
        # would shrink the objective below the barrier's absolute gap tolerance
        scale = 1.0 / tau if slacked else 1.0
        lin = np.zeros(n_total)
        lin[:n] = prog.linear * scale
        lin[n:] = 1.0
        Q = None
        if prog.Q is not None:
            Q = np.zeros((n_total, n_total))
            Q[:n, :n] = prog.Q * scale
        slack_rows = [Constraint(-np.eye(n_total)[i], 0.0) for i in range(n, n_total)]
        sub = CanonicalProgram(lin, [con.lifted(n_total) for con in hard] + rows + slack_rows,
                               Q, prog.constant * scale)
        w0 = np.concatenate([z, viol[slacked] + 1.0])
        sol = solve_convex_qcqp(sub, start=w0, gap_tol=gap_tol)
        if sol.status is not Status.OPTIMAL:
            raise SubproblemFailure(f"CCP subproblem {k} ended with status {sol.status.value}")
        z_new = sol.x[:n]
        move = float(np.max(np.abs(z_new - z), initial=0.0))
        z = z_new
        viol_new = _dc_violation(dc, z)
        if viol_new.max(initial=0.0) <= schedule.slack_tol:
            if best is None or prog.objective(z) < prog.objective(best):
                best = z.copy()
        if move < schedule.move_tol and viol_new.max(initial=0.0) < schedule.slack_tol:
            status = Status.OPTIMAL
            break
        tau = schedule.next(tau)

    viol = _dc_violation(dc, z)
    trace.iterates.append(CcpIterate(len(trace.iterates), z.copy(), [], [], tau,
                                     prog.objective(z) / tau + viol.sum(),
                                     float(viol.max(initial=0.0))))
    if status is not Status.OPTIMAL and best is not None:
        z = best
    return ProgramSolution(status, z, prog.objective(z), len(trace.iterates) - 1,
                           prog.violation(z), sol.stationarity if sol else float("nan"),
                           info={"trace": trace, "tau": tau})


def refine_active_set(prog, z, active_tol=1e-6, max_iter=30):
    """Newton (SQP) steps on the constraints active at ``z``.

    CCP converges linearly along a curved boundary; once it has identified
    the active constraints, Newton's method on the KKT system of
    ``min objective  s.t.  active g_i = 0`` converges quadratically.  Returns
    the refined point, or ``z`` unchanged when the step fails, leaves the
    feasible set, produces a negative multiplier or does not improve the
    objective.
    """
    z0 = np.asarray(z, dtype=float)
    cons = prog.constraints
    active = [con for con in cons if con.value(z0) >= -active_tol]
    if not active:
        return z0
    n = prog.dim
    m = len(active)
    z = z0.copy()
    lam = np.zeros(m)
    converged = False
    for _ in range(max_iter):
        J = np.array([con.grad(z) for con in active])
        g = prog.objective_grad(z)
        if not lam.any():
            lam = np.linalg.lstsq(J.T, -g, rcond=None)[0]
        H = np.zeros((n, n)) if prog.Q is None else prog.Q.copy()
        for l_i, con in zip(lam, active):
            if con.A is not None:
                H += l_i * con.A
        K = np.block([[H, J.T], [J, np.zeros((m, m))]])
        rhs = -np.concatenate([g, [con.value(z) for con in active]])
        sol = np.linalg.lstsq(K, rhs, rcond=None)[0]
        d, lam = sol[:n], sol[n:]
        if not np.all(np.isfinite(d)):
            return z0
        z = z + d
        if np.max(np.abs(d), initial=0.0) <= 1e-14 * max(1.0, np.max(np.abs(z))):
            converged = True
            break
    if not converged or np.any(lam < -1e-9):
        return z0
    if prog.violation(z) > 1e-12 or prog.objective(z) > prog.objective(z0):
        return z0
    return z
