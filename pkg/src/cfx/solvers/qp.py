"""Primal active-set method for convex QPs with linear inequality constraints."""
import numpy as np

from .lp import solve_lp
from .program import CanonicalProgram, ProgramSolution, Status, kkt_residuals

STEP_TOL = 1e-12
MULT_TOL = 1e-10


def _null_space(M, n):
    if M.shape[0] == 0:
        return np.eye(n)
    _, s, vt = np.linalg.svd(M)
    rank = int(np.sum(s > 1e-10 * max(1.0, s[0])))
    return vt[rank:].T


def _feasible_start(prog, G, h):
    n = prog.dim
    z0 = np.zeros(n)
    if prog.Q is not None:
        try:
            z0 = np.linalg.lstsq(prog.Q, -prog.linear, rcond=None)[0]
        except np.linalg.LinAlgError:
            z0 = np.zeros(n)
    if G.shape[0] == 0 or np.all(G @ z0 - h <= 1e-12):
        return z0, Status.OPTIMAL
    phase1 = solve_lp(CanonicalProgram(np.zeros(n), prog.constraints))
    return phase1.x, phase1.status


def solve_qp(prog, max_iter=500):
    """Minimise ``0.5 z'Qz + linear.z`` subject to ``G z <= h``.

    Starts from the unconstrained minimiser when it is feasible, otherwise from
    a Phase-1 simplex vertex.  Each iteration solves the equality-constrained
    subproblem on the working set in null-space form, so a merely PSD ``Q`` is
    handled by stepping along directions of zero curvature.
    """
    G, h = prog.linear_system()
    n = prog.dim
    Q = prog.Q if prog.Q is not None else np.zeros((n, n))
    z, status = _feasible_start(prog, G, h)
    if status is not Status.OPTIMAL:
        return ProgramSolution(status, np.full(n, np.nan), float("nan"), 0)

    scale = 1.0 + np.abs(G).max(initial=0.0)
    work = [i for i in range(G.shape[0]) if abs(G[i] @ z - h[i]) <= 1e-10 * scale]
    # keep a linearly independent subset
    indep = []
    for i in work:
        cand = G[indep + [i]]
        if np.linalg.matrix_rank(cand, tol=1e-10) == len(indep) + 1:
            indep.append(i)
    work = indep

    for it in range(1, max_iter + 1):
        g = Q @ z + prog.linear
        Z = _null_space(G[work], n)
        unbounded_dir = False
        if Z.shape[1] == 0:
            p = np.zeros(n)
        else:
            H = Z.T @ Q @ Z
            r = Z.T @ g
            evals, evecs = np.linalg.eigh(H)
            flat = evals <= 1e-12 * max(1.0, abs(evals).max(initial=0.0))
            r_flat = evecs[:, flat].T @ r
            if flat.any() and np.linalg.norm(r_flat) > 1e-12 * (1 + np.linalg.norm(g)):
                p = -Z @ (evecs[:, flat] @ r_flat)
                unbounded_dir = True
            else:
                inv = np.where(flat, 0.0, 1.0 / np.where(flat, 1.0, evals))
                p = -Z @ (evecs @ (inv * (evecs.T @ r)))

        if np.linalg.norm(p) <= STEP_TOL * (1 + np.linalg.norm(z)):
            if work:
                mu = np.linalg.lstsq(G[work].T, -g, rcond=None)[0]
            else:
                mu = np.zeros(0)
            if mu.size == 0 or mu.min() >= -MULT_TOL:
                lam = np.zeros(G.shape[0])
                lam[work] = np.maximum(mu, 0.0)
                stat, comp, _ = kkt_residuals(prog, z, lam)
                return ProgramSolution(Status.OPTIMAL, z, prog.objective(z), it,
                                       prog.violation(z), stat, lam,
                                       {"complementarity": comp})
            del work[int(np.argmin(mu))]
            continue

        alpha = np.inf if unbounded_dir else 1.0
        block = None
        for i in range(G.shape[0]):
            if i in work:
                continue
            gp = G[i] @ p
            if gp > 1e-14 * scale * np.linalg.norm(p):
                step = max((h[i] - G[i] @ z) / gp, 0.0)
                if step < alpha:
                    alpha, block = step, i
        if not np.isfinite(alpha):
            return ProgramSolution(Status.UNBOUNDED, z, -np.inf, it)
        z = z + alpha * p
        if block is not None:
            work.append(block)
    return ProgramSolution(Status.MAX_ITERATIONS, z, prog.objective(z), max_iter,
                           prog.violation(z))
