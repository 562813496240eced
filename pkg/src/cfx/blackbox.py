"""Model-agnostic fallback: minimise ``loss(h(x'), y') + C * theta(x', x)`` with a downhill simplex."""
from dataclasses import dataclass
from typing import Any

import numpy as np

from . import models as M
from .errors import EvaluationError, NotFound, ValidationError
from .regularizers import Regularizer, eval_regularizer
from .solvers import downhill_simplex

DEFAULT_STRENGTH = 1.0
DECAY = 0.1
DECAY_ROUNDS = 6


@dataclass(frozen=True)
class BlackboxObjective:
    """0-1 loss for classifiers, squared loss for regressors, plus ``C`` times the regularizer."""

    model: Any
    target: Any
    x: np.ndarray
    regularizer: Regularizer
    strength: float = DEFAULT_STRENGTH

    def __post_init__(self):
        if not self.strength > 0:
            raise ValidationError("C must be > 0")

    def loss(self, z):
        try:
            y = self.model.predict(z)
        except EvaluationError:
            return np.inf
        if self.model.is_classifier:
            return 0.0 if y == self.target else 1.0
        return float((y - self.target) ** 2)

    def __call__(self, z):
        return self.loss(z) + self.strength * eval_regularizer(self.regularizer, self.x, z)


def blackbox_counterfactual(model, query, restarts=10, sigma=1.0, seed=0):
    """Downhill simplex from ``x`` and ``restarts - 1`` Gaussian perturbations of it.

    Every evaluated point is checked for validity and the cheapest valid one
    is returned.  A 0-1 loss is flat away from the decision boundary, so when
    a round of restarts produces no valid point the next round divides ``C``
    by ten and doubles ``sigma`` (at most six times).  Once a valid point is
    known, a final run starts from it with ``C`` lowered until the distance
    term cannot outweigh a unit of loss, which pulls it towards the boundary
    without leaving the target region.
    """
    from .engine import CounterfactualReport

    query.check(model)
    if restarts < 1:
        raise ValidationError("restarts must be >= 1")
    x = query.x
    rng = np.random.default_rng(seed)
    C = DEFAULT_STRENGTH if query.strength is None else query.strength
    best = {"x": None, "cost": np.inf}

    def offer(z, _f):
        try:
            ok = M.matches_target(model, z, query.target, query.tolerance)
        except EvaluationError:
            return
        if ok:
            cost = eval_regularizer(query.regularizer, x, z)
            if cost < best["cost"]:
                best["x"], best["cost"] = np.array(z, dtype=float), cost

    evals = 0

    def run(strength, start, step=0.1):
        nonlocal evals
        objective = BlackboxObjective(model, query.target, x, query.regularizer, strength)
        res = downhill_simplex(objective, start, initial_step=step, on_eval=offer, max_iter=2000)
        evals += res.evaluations

    offer(x, None)
    spread = sigma
    for _ in range(DECAY_ROUNDS + 1):
        starts = [x.copy()] + [x + spread * rng.standard_normal(x.size) for _ in range(restarts - 1)]
        for s in starts:
            run(C, s)
        if best["x"] is not None:
            break
        C *= DECAY
        spread *= 2.0
    if best["x"] is None:
        raise NotFound("no simplex run reached the requested prediction")
    if best["cost"] > 0:
        C = min(C, 0.5 / best["cost"])
        for _ in range(2):
            step = 0.1 * max(float(np.max(np.abs(best["x"] - x))), 1e-3)
            run(C, best["x"], step)
    return CounterfactualReport(best["x"], x.copy(), best["cost"], model.predict(best["x"]),
                                "blackbox", {"evaluations": evals, "strength": C,
                                             "restarts": restarts})
