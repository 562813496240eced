"""Model families, their prediction functions and the JSON model-file format.

Every model is an immutable dataclass exposing ``dimension`` and
``predict(x)``.  ``load_model`` / ``dump_model`` convert to and from the
declarative document::

    {"family": "hyperplane", "dimension": 2, "params": {"w": [1, 0], "b": -1}}
"""
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .errors import (
    DimensionMismatch,
    EvaluationError,
    ParseError,
    UnsupportedFamily,
    ValidationError,
)
from .numerics import as_matrix, as_vector, is_psd, is_symmetric, sym_eigen

FAMILIES = (
    "hyperplane", "softmax", "linear", "poisson", "exponential",
    "gnb", "qda", "lvq", "tree", "ensemble",
)
GLM_KINDS = ("linear", "poisson", "exponential")
POLE_TOL = 1e-12


def _check_x(x, dim):
    try:
        return as_vector(x, dim)
    except ValidationError:
        raise
    except DimensionMismatch:
        raise DimensionMismatch(f"input has wrong dimension (model expects {dim})") from None


def _check_priors(priors, k):
    priors = as_vector(priors, k)
    if np.any(priors <= 0):
        raise ValidationError("priors must be strictly positive")
    if abs(priors.sum() - 1.0) > 1e-9:
        raise ValidationError("priors must sum to 1")
    return priors


def _labels(labels, k):
    if labels is None:
        return tuple(range(k))
    labels = tuple(labels)
    if len(labels) != k:
        raise ValidationError(f"expected {k} labels, got {len(labels)}")
    if len(set(labels)) != k:
        raise ValidationError("labels must be distinct")
    return labels


class Classifier:
    """Mixin for models whose prediction is a discrete label."""

    is_classifier = True

    def label_index(self, label):
        for i, lab in enumerate(self.labels):
            if lab == label:
                return i
        return None


@dataclass(frozen=True)
class HyperplaneModel(Classifier):
    """``h(x) = sign(w.x + b)`` with labels -1/+1; the boundary itself maps to +1."""

    w: np.ndarray
    b: float

    def __post_init__(self):
        object.__setattr__(self, "w", as_vector(self.w))
        if self.w.size < 1:
            raise ValidationError("w must have at least one entry")
        if not math.isfinite(self.b):
            raise ValidationError("b must be finite")
        object.__setattr__(self, "b", float(self.b))

    @property
    def dimension(self):
        return self.w.size

    @property
    def labels(self):
        return (-1, 1)

    def decision(self, x):
        return float(self.w @ x + self.b)

    def predict(self, x):
        x = _check_x(x, self.dimension)
        return 1 if self.decision(x) >= 0 else -1


@dataclass(frozen=True)
class SoftmaxModel(Classifier):
    W: np.ndarray
    b: np.ndarray
    labels: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "W", as_matrix(self.W))
        object.__setattr__(self, "b", as_vector(self.b))
        k = self.W.shape[0]
        if k < 2:
            raise ValidationError("softmax needs at least two classes")
        if self.b.size != k:
            raise ValidationError("one intercept per class required")
        object.__setattr__(self, "labels", _labels(self.labels, k))

    @property
    def dimension(self):
        return self.W.shape[1]

    def scores(self, x):
        return self.W @ x + self.b

    def predict(self, x):
        x = _check_x(x, self.dimension)
        return self.labels[int(np.argmax(self.scores(x)))]


@dataclass(frozen=True)
class GlmRegressor:
    kind: str
    w: np.ndarray
    b: float

    is_classifier = False

    def __post_init__(self):
        if self.kind not in GLM_KINDS:
            raise UnsupportedFamily(self.kind)
        object.__setattr__(self, "w", as_vector(self.w))
        if not math.isfinite(self.b):
            raise ValidationError("b must be finite")
        object.__setattr__(self, "b", float(self.b))

    @property
    def dimension(self):
        return self.w.size

    def predict(self, x):
        x = _check_x(x, self.dimension)
        z = float(self.w @ x + self.b)
        if self.kind == "linear":
            return z
        if self.kind == "poisson":
            return math.exp(z)
        if abs(z) < POLE_TOL:
            raise EvaluationError("exponential regressor evaluated at its pole")
        return -1.0 / z


@dataclass(frozen=True)
class GnbModel(Classifier):
    """Gaussian naive Bayes; ``means``/``variances`` are (classes, features)."""

    means: np.ndarray
    variances: np.ndarray
    priors: np.ndarray
    labels: tuple = None

    def __post_init__(self):
        object.__setattr__(self, "means", as_matrix(self.means))
        object.__setattr__(self, "variances", as_matrix(self.variances))
        k = self.means.shape[0]
        if k < 2:
            raise ValidationError("at least two classes required")
        if self.variances.shape != self.means.shape:
            raise ValidationError("means and variances must have the same shape")
        if np.any(self.variances <= 0):
            raise ValidationError("variances must be strictly positive")
        object.__setattr__(self, "priors", _check_priors(self.priors, k))
        object.__setattr__(self, "labels", _labels(self.labels, k))

    @property
    def dimension(self):
        return self.means.shape[1]

    def log_joint(self, x):
        var = self.variances
        ll = -0.5 * np.log(2 * np.pi * var) - (x - self.means) ** 2 / (2 * var)
        return ll.sum(axis=1) + np.log(self.priors)

    def predict(self, x):
        x = _check_x(x, self.dimension)
        return self.labels[int(np.argmax(self.log_joint(x)))]


@dataclass(frozen=True)
class QdaModel(Classifier):
    means: np.ndarray
    covariances: tuple
    priors: np.ndarray
    labels: tuple = None
    precisions: tuple = field(init=False, repr=False, compare=False)
    logdets: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "means", as_matrix(self.means))
        k, d = self.means.shape
        if k < 2:
            raise ValidationError("at least two classes required")
        covs = tuple(as_matrix(c) for c in self.covariances)
        if len(covs) != k:
            raise ValidationError("one covariance per class required")
        precisions, logdets = [], []
        for c in covs:
            if c.shape != (d, d):
                raise ValidationError("covariance has wrong shape")
            if not is_symmetric(c):
                raise ValidationError("covariance is not symmetric")
            c = 0.5 * (c + c.T)
            eig = sym_eigen(c)
            if eig.eigenvalues[0] <= 0:
                raise ValidationError("covariance is not positive definite")
            precisions.append((eig.eigenvectors / eig.eigenvalues) @ eig.eigenvectors.T)
            logdets.append(float(np.sum(np.log(eig.eigenvalues))))
        object.__setattr__(self, "covariances", covs)
        object.__setattr__(self, "precisions", tuple(0.5 * (p + p.T) for p in precisions))
        object.__setattr__(self, "logdets", np.array(logdets))
        object.__setattr__(self, "priors", _check_priors(self.priors, k))
        object.__setattr__(self, "labels", _labels(self.labels, k))

    @property
    def dimension(self):
        return self.means.shape[1]

    def log_joint(self, x):
        out = np.empty(len(self.precisions))
        for i, (mu, prec) in enumerate(zip(self.means, self.precisions)):
            r = x - mu
            out[i] = -0.5 * r @ prec @ r - 0.5 * self.logdets[i] + math.log(self.priors[i])
        return out

    def predict(self, x):
        x = _check_x(x, self.dimension)
        return self.labels[int(np.argmax(self.log_joint(x)))]


@dataclass(frozen=True)
class LvqModel(Classifier):
    """Nearest-prototype classifier.

    ``metric`` is ``"identity"``, ``("global", omega)`` or
    ``("per_prototype", (omega_1, ..., omega_P))``.
    """

    prototypes: np.ndarray
    prototype_labels: tuple
    metric: Any = "identity"

    def __post_init__(self):
        object.__setattr__(self, "prototypes", as_matrix(self.prototypes))
        p, d = self.prototypes.shape
        if p < 2:
            raise ValidationError("at least two prototypes required")
        if len(self.prototype_labels) != p:
            raise ValidationError("one label per prototype required")
        object.__setattr__(self, "prototype_labels", tuple(self.prototype_labels))
        metric = self.metric
        if metric == "identity":
            pass
        elif isinstance(metric, tuple) and metric[0] == "global":
            metric = ("global", self._check_omega(metric[1], d))
        elif isinstance(metric, tuple) and metric[0] == "per_prototype":
            mats = tuple(self._check_omega(m, d) for m in metric[1])
            if len(mats) != p:
                raise ValidationError("one metric matrix per prototype required")
            metric = ("per_prototype", mats)
        else:
            raise ValidationError(f"unknown LVQ metric {metric!r}")
        object.__setattr__(self, "metric", metric)

    @staticmethod
    def _check_omega(m, d):
        m = as_matrix(m)
        if m.shape != (d, d):
            raise ValidationError("metric matrix has wrong shape")
        if not is_symmetric(m):
            raise ValidationError("metric matrix is not symmetric")
        m = 0.5 * (m + m.T)
        if not is_psd(m):
            raise ValidationError("metric matrix is not positive semi-definite")
        return m

    @property
    def dimension(self):
        return self.prototypes.shape[1]

    @property
    def labels(self):
        seen = []
        for lab in self.prototype_labels:
            if lab not in seen:
                seen.append(lab)
        return tuple(seen)

    @property
    def metric_kind(self):
        return self.metric if isinstance(self.metric, str) else self.metric[0]

    def omega(self, i):
        kind = self.metric_kind
        if kind == "identity":
            return np.eye(self.dimension)
        if kind == "global":
            return self.metric[1]
        return self.metric[1][i]

    def distances(self, x):
        out = np.empty(len(self.prototypes))
        for i, p in enumerate(self.prototypes):
            r = x - p
            out[i] = r @ r if self.metric_kind == "identity" else r @ self.omega(i) @ r
        return out

    def predict(self, x):
        x = _check_x(x, self.dimension)
        return self.prototype_labels[int(np.argmin(self.distances(x)))]


@dataclass(frozen=True)
class Leaf:
    value: Any


@dataclass(frozen=True)
class Node:
    """Internal split: go ``left`` when ``x[feature] <= threshold``, else ``right``."""

    feature: int
    threshold: float
    left: Any
    right: Any


def _tree_depth_first(node):
    stack = [node]
    while stack:
        n = stack.pop()
        yield n
        if isinstance(n, Node):
            stack.append(n.right)
            stack.append(n.left)


@dataclass(frozen=True)
class TreeModel:
    root: Any
    dim: int
    task: str = "classification"

    def __post_init__(self):
        if self.task not in ("classification", "regression"):
            raise ValidationError(f"unknown tree task {self.task!r}")
        for n in _tree_depth_first(self.root):
            if isinstance(n, Node):
                if not 0 <= n.feature < self.dim:
                    raise ValidationError(f"feature index {n.feature} out of range")
                if not math.isfinite(n.threshold):
                    raise ValidationError("threshold must be finite")
            elif not isinstance(n, Leaf):
                raise ValidationError("tree nodes must be splits or leaves")
            elif self.task == "regression" and not _is_real(n.value):
                raise ValidationError("regression leaves must be numbers")

    @property
    def is_classifier(self):
        return self.task == "classification"

    @property
    def dimension(self):
        return self.dim

    @property
    def labels(self):
        seen = []
        for n in _tree_depth_first(self.root):
            if isinstance(n, Leaf) and n.value not in seen:
                seen.append(n.value)
        return tuple(seen)

    def _walk(self, x):
        n = self.root
        while isinstance(n, Node):
            n = n.left if x[n.feature] <= n.threshold else n.right
        return n.value

    def predict(self, x):
        return self._walk(_check_x(x, self.dim))


def _is_real(v):
    return isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool)


def _sort_key(v):
    return (0, float(v), "") if _is_real(v) else (1, 0.0, str(v))


@dataclass(frozen=True)
class EnsembleModel:
    trees: tuple
    aggregation: str = "majority-vote"

    def __post_init__(self):
        object.__setattr__(self, "trees", tuple(self.trees))
        if not self.trees:
            raise ValidationError("ensemble needs at least one tree")
        if self.aggregation not in ("majority-vote", "mean"):
            raise ValidationError(f"unknown aggregation {self.aggregation!r}")
        if len({t.dimension for t in self.trees}) != 1:
            raise ValidationError("trees disagree on input dimension")

    @property
    def is_classifier(self):
        return self.aggregation == "majority-vote"

    @property
    def dimension(self):
        return self.trees[0].dimension

    @property
    def labels(self):
        seen = []
        for t in self.trees:
            for lab in t.labels:
                if lab not in seen:
                    seen.append(lab)
        return tuple(seen)

    def tree_predictions(self, x):
        x = _check_x(x, self.dimension)
        return [t._walk(x) for t in self.trees]

    def aggregate(self, votes):
        if self.aggregation == "mean":
            return float(np.mean(votes))
        counts = {}
        for v in votes:
            counts[v] = counts.get(v, 0) + 1
        top = max(counts.values())
        # ties: lowest label wins
        return min((v for v, c in counts.items() if c == top), key=_sort_key)

    def predict(self, x):
        return self.aggregate(self.tree_predictions(x))


def predict(model, x):
    return model.predict(x)


def matches_target(model, x, target, tol=0.0):
    """True when ``model`` predicts ``target`` at ``x`` (regressors: within ``tol``)."""
    y = model.predict(x)
    if model.is_classifier:
        return y == target
    return abs(y - target) <= tol


# --------------------------------------------------------------------- I/O


def _tree_from_doc(doc):
    if not isinstance(doc, dict):
        raise ParseError("tree node must be an object")
    if "leaf" in doc:
        return Leaf(doc["leaf"])
    try:
        feature = doc["feature"]
        if isinstance(feature, bool) or not isinstance(feature, int):
            raise ParseError("feature index must be an integer")
        return Node(feature, float(doc["threshold"]),
                    _tree_from_doc(doc["left"]), _tree_from_doc(doc["right"]))
    except KeyError as exc:
        raise ParseError(f"tree node missing key {exc}") from None


def _tree_to_doc(node):
    if isinstance(node, Leaf):
        return {"leaf": node.value}
    return {"feature": node.feature, "threshold": node.threshold,
            "left": _tree_to_doc(node.left), "right": _tree_to_doc(node.right)}


def _metric_from_doc(metric):
    if metric == "identity":
        return "identity"
    if isinstance(metric, dict) and len(metric) == 1:
        if "global" in metric:
            return ("global", metric["global"])
        if "per_prototype" in metric:
            return ("per_prototype", tuple(metric["per_prototype"]))
    raise ParseError(f"bad LVQ metric {metric!r}")


def _build(family, dim, p):
    if family in ("hyperplane", "logistic"):
        if family == "logistic" and p.get("threshold", 0.5) != 0.5:
            raise UnsupportedFamily("logistic regression only supported with threshold 0.5")
        return HyperplaneModel(p["w"], p["b"])
    if family == "softmax":
        return SoftmaxModel(p["W"], p["b"], p.get("labels"))
    if family in GLM_KINDS:
        return GlmRegressor(family, p["w"], p["b"])
    if family == "gnb":
        return GnbModel(p["means"], p["variances"], p["priors"], p.get("labels"))
    if family == "qda":
        return QdaModel(p["means"], tuple(p["covariances"]), p["priors"], p.get("labels"))
    if family == "lvq":
        return LvqModel(p["prototypes"], tuple(p["labels"]),
                        _metric_from_doc(p.get("metric", "identity")))
    if family == "tree":
        return TreeModel(_tree_from_doc(p["root"]), dim, p.get("task", "classification"))
    if family == "ensemble":
        task = "regression" if p.get("aggregation") == "mean" else "classification"
        trees = [TreeModel(_tree_from_doc(t), dim, task) for t in p["trees"]]
        return EnsembleModel(trees, p.get("aggregation", "majority-vote"))
    raise UnsupportedFamily(f"unknown model family {family!r}")


def load_model(document):
    """Parse a model document (JSON text or an already-decoded dict)."""
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}") from None
    if not isinstance(document, dict):
        raise ParseError("model document must be a JSON object")
    family = document.get("family")
    if family not in FAMILIES + ("logistic",):
        raise UnsupportedFamily(f"unknown model family {family!r}")
    dim = document.get("dimension")
    if isinstance(dim, bool) or not isinstance(dim, int) or dim < 1:
        raise ParseError("'dimension' must be a positive integer")
    params = document.get("params")
    if not isinstance(params, dict):
        raise ParseError("'params' must be an object")
    try:
        model = _build(family, dim, params)
    except KeyError as exc:
        raise ParseError(f"missing parameter {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ParseError(str(exc)) from None
    if model.dimension != dim:
        raise ValidationError(f"parameters have dimension {model.dimension}, document says {dim}")
    return model


def _listify(a):
    return np.asarray(a).tolist()


def _labels_out(model, params):
    if tuple(model.labels) != tuple(range(len(model.labels))):
        params["labels"] = list(model.labels)
    return params


def dump_model(model):
    """Inverse of ``load_model``: returns a JSON-serialisable dict."""
    dim = model.dimension
    if isinstance(model, HyperplaneModel):
        family, params = "hyperplane", {"w": _listify(model.w), "b": model.b}
    elif isinstance(model, SoftmaxModel):
        family = "softmax"
        params = _labels_out(model, {"W": _listify(model.W), "b": _listify(model.b)})
    elif isinstance(model, GlmRegressor):
        family, params = model.kind, {"w": _listify(model.w), "b": model.b}
    elif isinstance(model, GnbModel):
        family = "gnb"
        params = _labels_out(model, {"means": _listify(model.means),
                                     "variances": _listify(model.variances),
                                     "priors": _listify(model.priors)})
    elif isinstance(model, QdaModel):
        family = "qda"
        params = _labels_out(model, {"means": _listify(model.means),
                                     "covariances": [_listify(c) for c in model.covariances],
                                     "priors": _listify(model.priors)})
    elif isinstance(model, LvqModel):
        family = "lvq"
        kind = model.metric_kind
        if kind == "identity":
            metric = "identity"
        elif kind == "global":
            metric = {"global": _listify(model.metric[1])}
        else:
            metric = {"per_prototype": [_listify(m) for m in model.metric[1]]}
        params = {"prototypes": _listify(model.prototypes),
                  "labels": list(model.prototype_labels), "metric": metric}
    elif isinstance(model, TreeModel):
        family, params = "tree", {"root": _tree_to_doc(model.root), "task": model.task}
    elif isinstance(model, EnsembleModel):
        family = "ensemble"
        params = {"trees": [_tree_to_doc(t.root) for t in model.trees],
                  "aggregation": model.aggregation}
    else:
        raise UnsupportedFamily(type(model).__name__)
    return {"family": family, "dimension": dim, "params": params}


def read_model(path):
    with open(path) as fh:
        return load_model(fh.read())


def stump(feature: int, threshold: float, left, right, dim: int = 1,
          task: str = "classification") -> TreeModel:
    """Convenience constructor for a depth-one tree."""
    return TreeModel(Node(feature, threshold, Leaf(left), Leaf(right)), dim, task)

