"""Distance regularizers, MAD feature weights and their solver-ready forms."""
import csv
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, EmptyDataset, ParseError, ValidationError

MAD_FLOOR = 1e-9
WEIGHT_CAP = 1e9  # the weight of a column whose MAD is at or below the floor


@dataclass(frozen=True)
class Regularizer:
    """``kind`` is ``"manhattan"`` (weighted L1) or ``"euclidean"`` (squared L2)."""

    kind: str
    weights: np.ndarray = None

    def __post_init__(self):
        if self.kind not in ("manhattan", "euclidean"):
            raise ValidationError(f"unknown regularizer {self.kind!r}")
        if self.kind == "manhattan":
            if self.weights is None:
                raise ValidationError("manhattan regularizer needs weights")
            w = np.asarray(self.weights, dtype=float)
            if w.ndim != 1 or not np.all(np.isfinite(w)) or np.any(w <= 0):
                raise ValidationError("weights must be finite and strictly positive")
            object.__setattr__(self, "weights", w)

    @classmethod
    def euclidean(cls):
        return cls("euclidean")

    @classmethod
    def manhattan(cls, weights):
        return cls("manhattan", weights)

    @classmethod
    def uniform(cls, dim):
        return cls("manhattan", np.ones(dim))

    def check_dim(self, dim):
        if self.kind == "manhattan" and self.weights.size != dim:
            raise DimensionMismatch(f"regularizer has {self.weights.size} weights, input has {dim}")

    def __call__(self, x, x_cf):
        return eval_regularizer(self, x, x_cf)


def eval_regularizer(reg, x, x_cf):
    x = np.asarray(x, dtype=float)
    x_cf = np.asarray(x_cf, dtype=float)
    if x.shape != x_cf.shape:
        raise DimensionMismatch("x and x' differ in dimension")
    reg.check_dim(x.size)
    diff = x_cf - x
    if reg.kind == "euclidean":
        return float(diff @ diff)
    return float(reg.weights @ np.abs(diff))


def mad_weights(data):
    """Inverse median absolute deviation of each column of ``data`` (rows x features).

    Even-length medians average the two middle order statistics.  A MAD at or
    below ``MAD_FLOOR`` is clamped to it, giving weight ``WEIGHT_CAP`` (written
    out exactly rather than as the rounded ``1 / MAD_FLOOR``).
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] == 0:
        raise EmptyDataset("dataset must have at least one row and one column")
    if not np.all(np.isfinite(data)):
        raise ValidationError("dataset contains non-finite values")
    med = np.median(data, axis=0)
    mad = np.median(np.abs(data - med), axis=0)
    w = np.full(mad.shape, WEIGHT_CAP)
    big = mad > MAD_FLOOR
    w[big] = 1.0 / mad[big]
    return w


def read_dataset(path):
    """Read a numeric CSV with a header row; returns ``(header, rows x cols array)``."""
    try:
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r]
    except OSError as exc:
        raise ParseError(str(exc)) from None
    if not rows:
        raise EmptyDataset(f"{path} is empty")
    header, body = rows[0], rows[1:]
    if not body:
        raise EmptyDataset(f"{path} has no data rows")
    try:
        data = np.array([[float(c) for c in r] for r in body])
    except ValueError as exc:
        raise ParseError(f"non-numeric cell in {path}: {exc}") from None
    if data.ndim != 2 or data.shape[1] != len(header):
        raise ParseError(f"ragged rows in {path}")
    return header, data


@dataclass(frozen=True)
class EpigraphLpPieces:
    """Weighted-L1 objective in epigraph form over the stacked variable ``(x', beta)``.

    ``rows @ z <= rhs`` holds the 3d inequalities
    ``U x' - beta <= U x``, ``-U x' - beta <= -U x`` and ``-beta <= 0``.
    """

    dim: int
    upsilon: np.ndarray
    cost: np.ndarray
    rows: np.ndarray
    rhs: np.ndarray


@dataclass(frozen=True)
class QuadraticPieces:
    """Squared-L2 objective as ``0.5 z'Qz + linear.z`` plus the dropped constant.

    ``||x' - x||^2 = 2 * (0.5 x'x' - x.x') + constant``.
    """

    Q: np.ndarray
    linear: np.ndarray
    constant: float


def objective_pieces(reg, x):
    x = np.asarray(x, dtype=float)
    d = x.size
    reg.check_dim(d)
    if reg.kind == "euclidean":
        return QuadraticPieces(np.eye(d), -x.copy(), float(x @ x))
    ups = np.diag(reg.weights)
    eye = np.eye(d)
    rows = np.block([
        [ups, -eye],
        [-ups, -eye],
        [np.zeros((d, d)), -eye],
    ])
    rhs = np.concatenate([ups @ x, -(ups @ x), np.zeros(d)])
    cost = np.concatenate([np.zeros(d), np.ones(d)])
    return EpigraphLpPieces(d, ups, cost, rows, rhs)
