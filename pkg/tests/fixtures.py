"""Hand-built 2-D models shared by several test modules."""
import numpy as np

from cfx import models as M
from cfx.regularizers import Regularizer

EUCLID = Regularizer.euclidean()
L1 = Regularizer.manhattan([1.0, 1.0])
L1_SKEW = Regularizer.manhattan([2.0, 0.5])


def grid_cases():
    """(name, model, x, target, tolerance) on the 2-D plane, one or more per family."""
    rot = np.array([[np.cos(0.4), -np.sin(0.4)], [np.sin(0.4), np.cos(0.4)]])
    return [
        ("hyperplane", M.HyperplaneModel([1.0, -2.0], 0.5), [-2.0, 1.0], 1, 0.0),
        ("softmax3", M.SoftmaxModel([[1.0, 0.0], [-0.5, 1.0], [-0.5, -1.0]], [0.0, 0.2, -0.1]),
         [2.0, 0.3], 2, 0.0),
        ("gnb", M.GnbModel([[-1.0, 0.0], [1.0, 1.0]], [[1.0, 2.0], [0.5, 1.0]], [0.4, 0.6]),
         [-2.0, 0.0], 1, 0.0),
        ("gnb3", M.GnbModel([[-1.0, 0.0], [1.5, 1.0], [0.0, -2.0]],
                            [[1.0, 0.6], [0.4, 1.5], [2.0, 0.5]], [0.3, 0.3, 0.4]),
         [-1.5, 0.5], 2, 0.0),
        ("qda", M.QdaModel([[0.0, 0.0], [2.0, 1.0]],
                           [[[1.0, 0.3], [0.3, 0.5]], [[0.4, -0.1], [-0.1, 1.2]]], [0.5, 0.5]),
         [-1.0, -0.5], 1, 0.0),
        ("gmlvq", M.LvqModel([[-1.0, 0.0], [1.0, 0.5], [0.0, 2.0]], ("A", "B", "B"),
                             ("global", [[2.0, 0.5], [0.5, 1.0]])),
         [-2.0, -0.5], "B", 0.0),
        ("lgmlvq", M.LvqModel([[-1.0, 0.0], [1.0, 0.0], [0.0, 2.0]], ("A", "B", "C"),
                              ("per_prototype", ([[1.0, 0.0], [0.0, 2.0]],
                                                 [[2.0, 0.0], [0.0, 0.5]],
                                                 (rot @ np.diag([1.5, 0.3]) @ rot.T).tolist()))),
         [-2.0, 0.0], "B", 0.0),
        ("linear", M.GlmRegressor("linear", [1.0, 0.5], -0.5), [0.0, 0.0], 2.0, 0.05),
        ("poisson", M.GlmRegressor("poisson", [0.5, 1.0], 0.0), [0.0, 0.0], 3.0, 0.05),
        ("exponential", M.GlmRegressor("exponential", [1.0, -0.5], -2.0), [0.0, 0.0], 1.0, 0.05),
    ]


def _spd(rng, d, lo=0.3, hi=2.0):
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return (q * rng.uniform(lo, hi, d)) @ q.T


def _priors(rng, k):
    p = rng.uniform(0.5, 1.5, k)
    p = p / p.sum()
    p[-1] = 1.0 - p[:-1].sum()
    return p


def random_model(rng, family, d, k):
    """Random model of ``family`` with input dimension ``d`` and ``k`` classes."""
    if family == "hyperplane":
        return M.HyperplaneModel(rng.standard_normal(d), rng.standard_normal())
    if family == "softmax":
        return M.SoftmaxModel(rng.standard_normal((k, d)), rng.standard_normal(k))
    if family in ("linear", "poisson", "exponential"):
        return M.GlmRegressor(family, rng.standard_normal(d) * 0.5, rng.standard_normal() * 0.5)
    if family == "gnb":
        return M.GnbModel(rng.standard_normal((k, d)) * 1.5, rng.uniform(0.3, 2.0, (k, d)),
                          _priors(rng, k))
    if family == "qda":
        return M.QdaModel(rng.standard_normal((k, d)) * 1.5, tuple(_spd(rng, d) for _ in range(k)),
                          _priors(rng, k))
    if family.startswith("lvq"):
        per = int(rng.integers(1, 3))
        labels = tuple(int(c) for c in np.repeat(np.arange(k), per))
        protos = rng.standard_normal((len(labels), d)) * 1.5
        if family == "lvq-identity":
            metric = "identity"
        elif family == "lvq-global":
            metric = ("global", _spd(rng, d))
        else:
            metric = ("per_prototype", tuple(_spd(rng, d) for _ in labels))
        return M.LvqModel(protos, labels, metric)
    raise ValueError(family)


FAMILIES = ("hyperplane", "softmax", "linear", "poisson", "exponential", "gnb", "qda",
            "lvq-identity", "lvq-global", "lvq-local", "tree", "ensemble")


def random_target(rng, model, x):
    if isinstance(model, M.HyperplaneModel):
        return -model.predict(x)
    if isinstance(model, M.GlmRegressor):
        y = model.predict(x)
        if model.kind == "linear":
            return float(y + rng.uniform(-2, 2))
        if model.kind == "poisson":
            return float(y * np.exp(rng.uniform(-1, 1)))
        return float(y * np.exp(rng.uniform(-0.7, 0.7)))
    current = model.predict(x)
    others = [lab for lab in model.labels if lab != current]
    return others[int(rng.integers(len(others)))] if others else current


def random_regularizer(rng, d):
    if rng.random() < 0.5:
        return EUCLID
    return Regularizer.manhattan(rng.uniform(0.5, 2.0, d))


def three_stumps():
    """Majority vote of ``x0 <= t -> A else B`` for t = 1, 2, 3."""
    return M.EnsembleModel([M.stump(0, t, "A", "B") for t in (1.0, 2.0, 3.0)])


def adversarial_ensemble():
    """Every single-tree fix at x = (0, 0) leaves the vote at A; moving both features flips it to B."""
    return M.EnsembleModel([
        M.stump(0, 0.01, "A", "B", dim=2),
        M.stump(1, 0.01, "A", "B", dim=2),
        M.TreeModel(M.Node(0, -1.0, M.Leaf("B"), M.Leaf("A")), 2),
    ])
