"""Two-phase primal simplex with Bland's rule for ``min c.z  s.t.  G z <= h`` (z free)."""
import numpy as np

from .program import ProgramSolution, Status, kkt_residuals

PIVOT_TOL = 1e-9


class _Tableau:
    """Dense tableau over the equality form ``T y = rhs, y >= 0``."""

    def __init__(self, T, rhs, basis):
        self.T = T
        self.rhs = rhs
        self.basis = list(basis)
        self.row_ids = list(range(T.shape[0]))
        self.pivots = 0

    def pivot(self, row, col):
        T, rhs = self.T, self.rhs
        p = T[row, col]
        T[row] /= p
        rhs[row] /= p
        for r in range(T.shape[0]):
            if r != row and T[r, col] != 0.0:
                f = T[r, col]
                T[r] -= f * T[row]
                rhs[r] -= f * rhs[row]
        self.basis[row] = col
        self.pivots += 1

    def run(self, cost, allowed, max_iter):
        """Minimise ``cost.y`` over the columns flagged in ``allowed``; Bland's rule."""
        while self.pivots < max_iter:
            cb = cost[self.basis]
            reduced = cost - cb @ self.T
            enter = None
            for j in np.flatnonzero(allowed):
                if reduced[j] < -PIVOT_TOL:
                    enter = j
                    break
            if enter is None:
                return "optimal"
            col = self.T[:, enter]
            best, leave = np.inf, None
            for r in np.flatnonzero(col > PIVOT_TOL):
                ratio = self.rhs[r] / col[r]
                if ratio < best - 1e-12 or (abs(ratio - best) <= 1e-12 and self.basis[r] < self.basis[leave]):
                    best, leave = ratio, r
            if leave is None:
                return "unbounded"
            self.pivot(leave, enter)
        return "max_iterations"


def solve_lp(prog, max_iter=None):
    """Solve a linear program in canonical form.

    The free variable is split as ``z = u - v`` and every row gets a slack, so
    the tableau works on ``[G, -G, I]``.  Phase 1 uses artificials only for
    rows whose right-hand side is negative.
    """
    if prog.Q is not None:
        raise ValueError("solve_lp requires a linear objective")
    G, h = prog.linear_system()
    m, n = G.shape
    c = prog.linear
    sign = np.where(h < 0, -1.0, 1.0)
    base = np.hstack([G, -G, np.eye(m)]) * sign[:, None]
    rhs = h * sign
    need_art = np.flatnonzero(sign < 0)
    n_struct = 2 * n + m
    art = np.zeros((m, need_art.size))
    art[need_art, np.arange(need_art.size)] = 1.0
    T = np.hstack([base, art])
    basis = [2 * n + i for i in range(m)]
    for k, r in enumerate(need_art):
        basis[r] = n_struct + k
    tab = _Tableau(T, rhs.copy(), basis)
    cap = max_iter or 50 * (m + n + 10)

    if need_art.size:
        cost1 = np.zeros(T.shape[1])
        cost1[n_struct:] = 1.0
        state = tab.run(cost1, np.ones(T.shape[1], bool), cap)
        if state == "max_iterations":
            return _failed(Status.MAX_ITERATIONS, n, tab.pivots)
        if cost1[tab.basis] @ tab.rhs > 1e-9 * (1 + np.abs(h).max(initial=0)):
            return _failed(Status.INFEASIBLE, n, tab.pivots)
        _drive_out_artificials(tab, n_struct)

    cost2 = np.concatenate([c, -c, np.zeros(m), np.zeros(need_art.size)])
    allowed = np.zeros(tab.T.shape[1], bool)
    allowed[:n_struct] = True
    state = tab.run(cost2, allowed, cap)
    if state == "unbounded":
        return _failed(Status.UNBOUNDED, n, tab.pivots)
    if state == "max_iterations":
        return _failed(Status.MAX_ITERATIONS, n, tab.pivots)

    # recompute the basic solution and duals from the original data
    full = np.hstack([base, art])
    rows, cols = tab.row_ids, tab.basis
    B = full[np.ix_(rows, cols)]
    y_b = np.linalg.solve(B, rhs[rows])
    pi = np.linalg.solve(B.T, cost2[cols])
    y = np.zeros(full.shape[1])
    y[cols] = y_b
    z = y[:n] - y[n:2 * n]
    lam = np.zeros(m)
    lam[rows] = -sign[rows] * pi
    lam = np.maximum(lam, 0.0)
    stat, comp, _ = kkt_residuals(prog, z, lam)
    return ProgramSolution(Status.OPTIMAL, z, prog.objective(z), tab.pivots,
                           prog.violation(z), stat, lam, {"complementarity": comp})


def _drive_out_artificials(tab, n_struct):
    for r, col in enumerate(tab.basis):
        if col is None or col < n_struct:
            continue
        candidates = np.flatnonzero(np.abs(tab.T[r, :n_struct]) > PIVOT_TOL)
        if candidates.size:
            tab.pivot(r, candidates[0])
        else:
            # redundant row
            tab.basis[r] = None
            tab.T[r] = 0.0
            tab.rhs[r] = 0.0
    keep = [r for r, b in enumerate(tab.basis) if b is not None]
    tab.T = tab.T[keep]
    tab.rhs = tab.rhs[keep]
    tab.basis = [tab.basis[r] for r in keep]
    tab.row_ids = [tab.row_ids[r] for r in keep]


def _failed(status, n, iters):
    return ProgramSolution(status, np.full(n, np.nan), float("nan"), iters)
