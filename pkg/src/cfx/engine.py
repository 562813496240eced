"""Turn a model and a requested prediction into a program, solve it, report the counterfactual."""
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from . import models as M
from .errors import (
    DimensionMismatch,
    Infeasible,
    InvalidTarget,
    NoPrototypeForTarget,
    NotFound,
    SubproblemFailure,
    ValidationError,
)
from .numerics import as_vector
from .regularizers import Regularizer, eval_regularizer, objective_pieces
from .solvers import (
    CanonicalProgram,
    Constraint,
    PenaltySchedule,
    Status,
    penalty_ccp,
    refine_active_set,
    solve_lp,
    solve_qp,
    solve_single_qcqp_dual,
)

TIE_TOL = 1e-9
FEAS_TOL = 1e-12


@dataclass(frozen=True)
class CounterfactualQuery:
    x: Any
    target: Any
    regularizer: Regularizer = Regularizer("euclidean")
    margin: float = 1e-4  # strict "<" becomes "<= -margin"
    tolerance: float = 0.0  # accepted |f(x') - y'| for regressors
    split_margin: float = 1e-6  # step past a tree threshold on the "> t" side
    strength: float = None  # blackbox / ensemble trade-off C; None = caller default

    def __post_init__(self):
        object.__setattr__(self, "x", as_vector(self.x))
        if not self.margin > 0:
            raise ValidationError("margin must be > 0")
        if not self.tolerance >= 0:
            raise ValidationError("tolerance must be >= 0")
        if not self.split_margin > 0:
            raise ValidationError("split margin must be > 0")
        if self.strength is not None and not self.strength > 0:
            raise ValidationError("strength must be > 0")

    def check(self, model):
        if self.x.size != model.dimension:
            raise DimensionMismatch(
                f"input has dimension {self.x.size}, model expects {model.dimension}")
        self.regularizer.check_dim(self.x.size)


@dataclass
class CounterfactualReport:
    x_cf: np.ndarray
    x: np.ndarray
    regularization: float
    prediction: Any
    method: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def deltas(self):
        return self.x_cf - self.x

    def to_dict(self):
        return {
            "counterfactual": [float(v) for v in self.x_cf],
            "deltas": [float(v) for v in self.deltas],
            "regularization_value": float(self.regularization),
            "achieved_prediction": _plain(self.prediction),
            "method": self.method,
            "diagnostics": {k: _plain(v) for k, v in self.diagnostics.items()},
        }


def _plain(v):
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    return v


@dataclass(frozen=True)
class ConstraintSet:
    """Conjunction of constraints ``g(x') <= 0`` (or ``< 0`` where ``strict``)."""

    constraints: tuple
    strict: tuple

    def relaxed(self, margin):
        return tuple(con.relaxed(margin) if s else con
                     for con, s in zip(self.constraints, self.strict))

    @property
    def is_linear(self):
        return all(con.is_linear for con in self.constraints)

    def __len__(self):
        return len(self.constraints)


# ------------------------------------------------------------ constraints


def _class_index(model, target):
    idx = model.label_index(target)
    if idx is None:
        raise InvalidTarget(f"{target!r} is not a label of this model (labels: {list(model.labels)})")
    return idx


def _strict(rows):
    return ConstraintSet(tuple(rows), (True,) * len(rows))


def hyperplane_constraints(model, target):
    if target not in (1, -1):
        raise InvalidTarget("hyperplane targets are -1 or +1")
    y = 1.0 if target == 1 else -1.0
    return _strict([Constraint(-y * model.w, -model.b * y)])


def softmax_constraints(model, target):
    i = _class_index(model, target)
    rows = [Constraint(model.W[j] - model.W[i], model.b[j] - model.b[i])
            for j in range(len(model.labels)) if j != i]
    return _strict(rows)


def glm_constraints(model, target, tol):
    """Two linear rows bounding the linear predictor ``w.x' + b``.

    The interval ``|f(x') - y'| <= tol`` is mapped through the inverse link,
    so for ``tol = 0`` this is exactly ``w.x' + b = link(y')``.
    """
    try:
        y = float(target)
    except (TypeError, ValueError):
        raise InvalidTarget(f"regression target must be a number, got {target!r}") from None
    if not math.isfinite(y):
        raise InvalidTarget("regression target must be finite")
    w, b = model.w, model.b
    if model.kind == "linear":
        lo, hi = y - tol, y + tol
    elif model.kind == "poisson":
        if y <= 0:
            raise InvalidTarget("Poisson targets must be > 0")
        hi = math.log(y + tol)
        lo = math.log(y - tol) if y - tol > 0 else -math.inf
    else:
        if y == 0:
            raise InvalidTarget("exponential targets must be non-zero")
        # f = -1/z is increasing on each branch; stay on the branch of y
        if y > 0:
            lo = -1.0 / (y - tol) if y - tol > 0 else -math.inf
            hi = -1.0 / (y + tol)
        else:
            lo = -1.0 / (y - tol)
            hi = -1.0 / (y + tol) if y + tol < 0 else math.inf
    rows = []
    if math.isfinite(hi):
        rows.append(Constraint(w, b - hi))
    if math.isfinite(lo):
        rows.append(Constraint(-w, lo - b))
    return ConstraintSet(tuple(rows), (False,) * len(rows))


def gnb_constraints(model, target):
    i = _class_index(model, target)
    mu, var, pri = model.means, model.variances, model.priors
    rows = []
    for j in range(len(model.labels)):
        if j == i:
            continue
        split = (np.diag(1.0 / var[i]), np.diag(1.0 / var[j]))
        q = mu[j] / var[j] - mu[i] / var[i]
        c = math.log(pri[j] / pri[i]) + float(np.sum(
            0.5 * np.log(var[i] / var[j]) - mu[j] ** 2 / (2 * var[j]) + mu[i] ** 2 / (2 * var[i])))
        rows.append(Constraint(q, c, split=split))
    return _strict(rows)


def qda_constraints(model, target):
    i = _class_index(model, target)
    P, mu = model.precisions, model.means
    rows = []
    for j in range(len(model.labels)):
        if j == i:
            continue
        q = P[j] @ mu[j] - P[i] @ mu[i]
        c = (0.5 * (mu[i] @ P[i] @ mu[i] - mu[j] @ P[j] @ mu[j])
             + 0.5 * (model.logdets[i] - model.logdets[j])
             + math.log(model.priors[j] / model.priors[i]))
        rows.append(Constraint(q, c, split=(P[i], P[j])))
    return _strict(rows)


def lvq_constraints(model, i):
    """Rows forcing prototype ``i`` to be closer than every prototype of another label.

    ``d_i(x') - d_j(x') < 0`` halved:
    ``0.5 x'(O_i - O_j)x' + x'.(O_j p_j - O_i p_i) + 0.5 (p_i'O_i p_i - p_j'O_j p_j) < 0``.
    """
    own = model.prototype_labels[i]
    p = model.prototypes
    oi = model.omega(i)
    rows = []
    for j, lab in enumerate(model.prototype_labels):
        if lab == own:
            continue
        oj = model.omega(j)
        q = oj @ p[j] - oi @ p[i]
        c = 0.5 * (p[i] @ oi @ p[i] - p[j] @ oj @ p[j])
        rows.append(Constraint(q, c, split=(oi, oj)))
    return _strict(rows)


def build_constraints(model, target, tol=0.0, prototype=None):
    """Constraint system whose solutions are predicted as ``target``.

    For LVQ models the system depends on which prototype is to be the nearest
    one, given by ``prototype``.
    """
    if isinstance(model, M.HyperplaneModel):
        return hyperplane_constraints(model, target)
    if isinstance(model, M.SoftmaxModel):
        return softmax_constraints(model, target)
    if isinstance(model, M.GlmRegressor):
        return glm_constraints(model, target, tol)
    if isinstance(model, M.GnbModel):
        return gnb_constraints(model, target)
    if isinstance(model, M.QdaModel):
        return qda_constraints(model, target)
    if isinstance(model, M.LvqModel):
        if prototype is None:
            raise ValueError("LVQ constraints need a prototype index")
        if model.prototype_labels[prototype] != target:
            raise InvalidTarget(f"prototype {prototype} is not labelled {target!r}")
        return lvq_constraints(model, prototype)
    raise TypeError(f"no constraint system for {type(model).__name__}")


# ---------------------------------------------------------------- solving


def counterfactual_program(reg, x, constraints):
    """Canonical program minimising ``reg`` around ``x`` under ``constraints``.

    Squared L2 becomes ``0.5 x'x' - x.x' + 0.5 x.x`` (half the distance, same
    minimiser).  Weighted L1 is lifted to the epigraph variable ``(x', beta)``.
    """
    d = x.size
    pieces = objective_pieces(reg, x)
    if reg.kind == "euclidean":
        return CanonicalProgram(pieces.linear, constraints, pieces.Q, 0.5 * pieces.constant)
    rows = [Constraint(r, -h) for r, h in zip(pieces.rows, pieces.rhs)]
    lifted = [con.lifted(2 * d) for con in constraints]
    return CanonicalProgram(pieces.cost, rows + lifted)


def _solve_linear(reg, x, constraints):
    prog = counterfactual_program(reg, x, constraints)
    if reg.kind == "euclidean":
        return solve_qp(prog), "qp"
    return solve_lp(prog), "lp"


def _ccp_start(reg, x, point):
    point = np.asarray(point, dtype=float)
    if reg.kind == "euclidean":
        return point
    return np.concatenate([point, reg.weights * np.abs(point - x) + 1.0])


def _solve_dc(reg, x, constraints, starts, schedule=PenaltySchedule()):
    """Non-convex path: dual method for one constraint + squared L2, else multi-start CCP."""
    d = x.size
    if reg.kind == "euclidean":
        # each constraint alone is a relaxation solved globally by the dual
        # method; a relaxed optimum meeting every other constraint is optimal
        for con in constraints:
            sol = solve_single_qcqp_dual(x, con.A, con.q, con.c)
            if sol.status is Status.INFEASIBLE:
                raise Infeasible("a quadratic constraint cannot be satisfied")
            if all(other.value(sol.x) <= FEAS_TOL for other in constraints):
                return [(sol, "dual-qcqp")]
    prog = counterfactual_program(reg, x, constraints)
    out = []
    for start in starts:
        try:
            sol = penalty_ccp(prog, _ccp_start(reg, x, start), schedule)
        except SubproblemFailure:
            continue
        refined = refine_active_set(prog, sol.x)
        sol.info["refined"] = bool(np.any(refined != sol.x))
        sol.x = refined[:d]
        out.append((sol, "ccp"))
    return out


def _finish(model, query, candidates, extra=None):
    """Pick the valid candidate with the lowest regularization (first wins ties)."""
    best = None
    for x_cf, method, diag in candidates:
        if x_cf is None or not np.all(np.isfinite(x_cf)):
            continue
        try:
            ok = M.matches_target(model, x_cf, query.target, query.tolerance + 1e-9)
        except Exception:
            ok = False
        if not ok:
            continue
        val = eval_regularizer(query.regularizer, query.x, x_cf)
        if best is None or val < best[0] - TIE_TOL:
            best = (val, x_cf, method, diag)
    if best is None:
        return None
    val, x_cf, method, diag = best
    diag = dict(diag)
    if extra:
        diag.update(extra)
    return CounterfactualReport(np.asarray(x_cf, dtype=float), query.x.copy(), val,
                                model.predict(x_cf), method, diag)


def _solve_system(model, query, cset, witnesses=()):
    """Solve one constraint system; returns a list of (x', method, diagnostics)."""
    x = query.x
    reg = query.regularizer
    cons = cset.relaxed(query.margin)
    if cset.is_linear:
        sol, method = _solve_linear(reg, x, cons)
        if sol.status is Status.INFEASIBLE:
            raise Infeasible("the (relaxed) constraint system is infeasible")
        if sol.status is not Status.OPTIMAL:
            raise NotFound(f"{method} solver ended with status {sol.status.value}")
        return [(sol.x[:x.size], method, sol.diagnostics())]
    starts = [w for w in witnesses if w is not None] + [x]
    return [(sol.x, method, sol.diagnostics()) for sol, method in _solve_dc(reg, x, cons, starts)]


def _witness(model, target):
    """A point predicted as ``target`` (class mean) to seed the CCP, if one exists."""
    idx = model.label_index(target)
    mean = model.means[idx]
    return mean if model.predict(mean) == target else None


def lvq_counterfactual(model, query):
    query.check(model)
    owners = [i for i, lab in enumerate(model.prototype_labels) if lab == query.target]
    if not owners:
        raise NoPrototypeForTarget(f"no prototype is labelled {query.target!r}")
    results = []
    for i in owners:
        cset = lvq_constraints(model, i)
        if not cset.constraints:
            # every prototype carries the target label
            results.append((query.x.copy(), "qp" if query.regularizer.kind == "euclidean" else "lp",
                            {"prototype": i}))
            continue
        for x_cf, method, diag in _solve_system(model, query, cset, [model.prototypes[i]]):
            results.append((x_cf, method, {**diag, "prototype": i}))
    report = _finish(model, query, results)
    if report is None:
        raise NotFound("no per-prototype program produced a valid counterfactual")
    return report


def compute_counterfactual(model, query):
    """Dispatch ``query`` to the model-specific method and return the report."""
    from . import trees

    query.check(model)
    if isinstance(model, M.TreeModel):
        return trees.tree_counterfactual(model, query)
    if isinstance(model, M.EnsembleModel):
        return trees.ensemble_counterfactual(model, query)
    if isinstance(model, M.LvqModel):
        return lvq_counterfactual(model, query)
    if isinstance(model, (M.HyperplaneModel, M.SoftmaxModel, M.GlmRegressor,
                          M.GnbModel, M.QdaModel)):
        cset = build_constraints(model, query.target, query.tolerance)
        witnesses = []
        if isinstance(model, (M.GnbModel, M.QdaModel)):
            witnesses.append(_witness(model, query.target))
        report = _finish(model, query, _solve_system(model, query, cset, witnesses))
        if report is None:
            raise NotFound("solver output failed validation")
        return report
    from .blackbox import blackbox_counterfactual
    return blackbox_counterfactual(model, query)
