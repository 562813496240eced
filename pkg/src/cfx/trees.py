"""Counterfactuals for decision trees (exact) and tree ensembles (two heuristics)."""
from dataclasses import dataclass

import numpy as np

from . import models as M
from .errors import InconsistentPath, NoSuchPrediction, NotFound
from .regularizers import eval_regularizer
from .solvers import downhill_simplex

ENSEMBLE_STRENGTH = 0.1


@dataclass(frozen=True)
class PathCondition:
    """Root-to-leaf path as ``(feature, "<=" | ">", threshold)`` tests plus the leaf value."""

    conditions: tuple
    prediction: object

    def bounds(self, dim):
        """Per-feature interval ``(lo, hi]`` admitted by the path."""
        lo = np.full(dim, -np.inf)
        hi = np.full(dim, np.inf)
        for f, rel, t in self.conditions:
            if rel == "<=":
                hi[f] = min(hi[f], t)
            else:
                lo[f] = max(lo[f], t)
        return lo, hi

    def is_consistent(self, dim):
        lo, hi = self.bounds(dim)
        return bool(np.all(lo < hi))

    def admits(self, x):
        return all((x[f] <= t) if rel == "<=" else (x[f] > t) for f, rel, t in self.conditions)


@dataclass(frozen=True)
class BoxChange:
    """Cheapest move of ``x`` into a path's box under a regularizer."""

    path: PathCondition
    x_cf: np.ndarray
    cost: float


def _paths(node, prefix):
    if isinstance(node, M.Leaf):
        yield PathCondition(tuple(prefix), node.value)
        return
    yield from _paths(node.left, prefix + [(node.feature, "<=", node.threshold)])
    yield from _paths(node.right, prefix + [(node.feature, ">", node.threshold)])


def _accepts(tree, value, target, tol):
    if tree.is_classifier:
        return value == target
    return abs(value - target) <= tol


def enumerate_paths(tree, target=None, tol=0.0):
    """Consistent paths in depth-first (left first) order, optionally only those ending at ``target``."""
    out = []
    for p in _paths(tree.root, []):
        if not p.is_consistent(tree.dimension):
            continue
        if target is not None and not _accepts(tree, p.prediction, target, tol):
            continue
        out.append(p)
    return out


def path_min_change(x, path, reg, split_margin=1e-6):
    """Move each feature of ``x`` to the nearest point of its interval.

    Features below the open end ``lo`` go to ``lo + split_margin`` (or ``hi``
    when the interval is narrower than the margin); features above ``hi`` go
    to ``hi``.  The per-feature choice is optimal for any separable
    regularizer.
    """
    x = np.asarray(x, dtype=float)
    lo, hi = path.bounds(x.size)
    if not np.all(lo < hi):
        raise InconsistentPath("path has an empty feature interval")
    x_cf = x.copy()
    below = x <= lo
    x_cf[below] = np.minimum(lo[below] + split_margin, hi[below])
    above = x > hi
    x_cf[above] = hi[above]
    return BoxChange(path, x_cf, eval_regularizer(reg, x, x_cf))


def _report(model, query, x_cf, method, diag):
    from .engine import CounterfactualReport

    val = eval_regularizer(query.regularizer, query.x, x_cf)
    return CounterfactualReport(x_cf, query.x.copy(), val, model.predict(x_cf), method, diag)


def _best_change(tree, query, target, tol):
    paths = enumerate_paths(tree, target, tol)
    if not paths:
        return None
    best = None
    for p in paths:
        ch = path_min_change(query.x, p, query.regularizer, query.split_margin)
        if best is None or ch.cost < best.cost:
            best = ch
    return best


def tree_counterfactual(tree, query):
    """Exact counterfactual: cheapest box change over all paths ending in the target."""
    query.check(tree)
    if not tree.is_classifier:
        float(query.target)
    best = _best_change(tree, query, query.target, query.tolerance)
    if best is None:
        raise NoSuchPrediction(f"no leaf of the tree predicts {query.target!r}")
    paths = len(enumerate_paths(tree))
    return _report(tree, query, best.x_cf, "tree",
                   {"paths_considered": paths, "leaf": best.path.prediction})


def _valid(model, x, query):
    return M.matches_target(model, x, query.target, query.tolerance + 1e-9)


class _BestValid:
    """Keeps the cheapest valid point among everything offered to it (first wins ties)."""

    def __init__(self, model, query):
        self.model, self.query = model, query
        self.x, self.cost = None, np.inf

    def offer(self, x):
        if not _valid(self.model, x, self.query):
            return
        cost = eval_regularizer(self.query.regularizer, self.query.x, x)
        if cost < self.cost:
            self.x, self.cost = np.array(x, dtype=float), cost


def _trivial(ensemble, query, method):
    if _valid(ensemble, query.x, query):
        return _report(ensemble, query, query.x.copy(), method, {"candidates": 1})
    return None


def ensemble_counterfactual_a(ensemble, query):
    """Per-tree counterfactuals refined by a downhill simplex on a disagreement count.

    Minimises ``(#trees not predicting the target) + C * theta(x', x)``
    (regression: distance of the mean outside the tolerance band) starting
    from each tree's own counterfactual, and returns the cheapest valid point
    seen anywhere during the search.
    """
    query.check(ensemble)
    hit = _trivial(ensemble, query, "ensemble-a")
    if hit is not None:
        return hit
    C = ENSEMBLE_STRENGTH if query.strength is None else query.strength
    keeper = _BestValid(ensemble, query)
    x = query.x

    if ensemble.is_classifier:
        def miss(z):
            return sum(v != query.target for v in ensemble.tree_predictions(z))
    else:
        def miss(z):
            return max(0.0, abs(ensemble.predict(z) - query.target) - query.tolerance)

    def objective(z):
        return miss(z) + C * eval_regularizer(query.regularizer, x, z)

    starts = []
    for tree in ensemble.trees:
        if ensemble.is_classifier:
            ch = _best_change(tree, query, query.target, 0.0)
        else:
            paths = enumerate_paths(tree)
            closest = min(paths, key=lambda p: abs(p.prediction - query.target))
            ch = path_min_change(x, closest, query.regularizer, query.split_margin)
        if ch is not None:
            starts.append(ch.x_cf)
    if not starts:
        raise NoSuchPrediction(f"no tree can predict {query.target!r}")

    evals = 0
    for s in starts:
        keeper.offer(s)
        res = downhill_simplex(objective, s, initial_step=0.1,
                               on_eval=lambda z, _f: keeper.offer(z), max_iter=2000)
        evals += res.evaluations
    if keeper.x is None:
        raise NotFound("the simplex search found no point with the target prediction")
    return _report(ensemble, query, keeper.x, "ensemble-a",
                   {"starts": len(starts), "evaluations": evals})


def ensemble_counterfactual_b(ensemble, query):
    """Candidate box changes of individual trees, kept when the whole ensemble agrees.

    For voting ensembles only trees currently not predicting the target
    contribute, each through its paths ending in the target; for mean
    ensembles every path of every tree is a candidate.
    """
    query.check(ensemble)
    hit = _trivial(ensemble, query, "ensemble-b")
    if hit is not None:
        return hit
    x = query.x
    seen = set()
    keeper = _BestValid(ensemble, query)
    votes = ensemble.tree_predictions(x)
    for tree, vote in zip(ensemble.trees, votes):
        if ensemble.is_classifier:
            if vote == query.target:
                continue
            paths = enumerate_paths(tree, query.target)
        else:
            paths = enumerate_paths(tree)
        for p in paths:
            ch = path_min_change(x, p, query.regularizer, query.split_margin)
            key = ch.x_cf.tobytes()
            if key in seen:
                continue
            seen.add(key)
            keeper.offer(ch.x_cf)
    if keeper.x is None:
        raise NotFound(f"none of {len(seen)} candidate changes flips the ensemble")
    return _report(ensemble, query, keeper.x, "ensemble-b", {"candidates": len(seen)})


def ensemble_counterfactual(ensemble, query):
    """Run both heuristics and keep the cheaper valid answer (B on ties)."""
    found = []
    errors = []
    for fn in (ensemble_counterfactual_b, ensemble_counterfactual_a):
        try:
            found.append(fn(ensemble, query))
        except (NotFound, NoSuchPrediction) as exc:
            errors.append(exc)
    if not found:
        if all(isinstance(e, NoSuchPrediction) for e in errors):
            raise errors[0]
        raise NotFound("neither ensemble heuristic found a counterfactual")
    return min(found, key=lambda r: r.regularization)
