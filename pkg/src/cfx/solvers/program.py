"""Canonical program representation shared by all solvers.

A program minimises ``0.5 z'Qz + linear.z + constant`` subject to constraints
``0.5 z'Az + q.z + c <= 0``.  A constraint may carry a PSD split
``A = A_plus - A_minus`` marking it as difference-of-convex.
"""
import enum
from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatch, ValidationError
from ..numerics import is_psd, symmetrize


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"
    MAX_ITERATIONS = "MaxIterations"


@dataclass(frozen=True)
class Constraint:
    q: np.ndarray
    c: float
    A: np.ndarray = None
    split: tuple = None  # (A_plus, A_minus), both PSD

    def __post_init__(self):
        object.__setattr__(self, "q", np.asarray(self.q, dtype=float))
        object.__setattr__(self, "c", float(self.c))
        n = self.q.size
        if self.split is not None:
            a_plus, a_minus = (symmetrize(np.asarray(m, dtype=float)) for m in self.split)
            if a_plus.shape != (n, n) or a_minus.shape != (n, n):
                raise DimensionMismatch("split matrices do not match q")
            object.__setattr__(self, "split", (a_plus, a_minus))
            if self.A is None:
                object.__setattr__(self, "A", a_plus - a_minus)
        if self.A is not None:
            a = symmetrize(np.asarray(self.A, dtype=float))
            if a.shape != (n, n):
                raise DimensionMismatch("A does not match q")
            if not np.any(a):
                a = None
            object.__setattr__(self, "A", a)

    @property
    def is_linear(self):
        return self.A is None

    @property
    def is_dc(self):
        return self.split is not None and self.A is not None

    def value(self, z):
        v = self.q @ z + self.c
        if self.A is not None:
            v += 0.5 * z @ self.A @ z
        return float(v)

    def grad(self, z):
        return self.q if self.A is None else self.A @ z + self.q

    def relaxed(self, margin):
        """Strict ``g < 0`` turned into ``g + margin <= 0``."""
        return Constraint(self.q, self.c + margin, self.A, self.split)

    def lifted(self, n):
        """Same constraint on a longer variable whose first ``q.size`` entries are the originals."""
        k = self.q.size
        if n == k:
            return self

        def pad(m):
            if m is None:
                return None
            out = np.zeros((n, n))
            out[:k, :k] = m
            return out

        q = np.zeros(n)
        q[:k] = self.q
        split = None if self.split is None else tuple(pad(m) for m in self.split)
        return Constraint(q, self.c, pad(self.A), split)


@dataclass(frozen=True)
class CanonicalProgram:
    linear: np.ndarray
    constraints: tuple = ()
    Q: np.ndarray = None
    constant: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "linear", np.asarray(self.linear, dtype=float))
        object.__setattr__(self, "constraints", tuple(self.constraints))
        n = self.linear.size
        if self.Q is not None:
            q = symmetrize(np.asarray(self.Q, dtype=float))
            if q.shape != (n, n):
                raise DimensionMismatch("objective Q does not match linear term")
            if not is_psd(q):
                raise ValidationError("objective Q is not positive semi-definite")
            object.__setattr__(self, "Q", q if np.any(q) else None)
        for con in self.constraints:
            if con.q.size != n:
                raise DimensionMismatch("constraint dimension differs from objective")

    @property
    def dim(self):
        return self.linear.size

    @property
    def is_linear(self):
        return all(con.is_linear for con in self.constraints)

    def objective(self, z):
        v = self.linear @ z + self.constant
        if self.Q is not None:
            v += 0.5 * z @ self.Q @ z
        return float(v)

    def objective_grad(self, z):
        return self.linear if self.Q is None else self.Q @ z + self.linear

    def violation(self, z):
        return max((max(con.value(z), 0.0) for con in self.constraints), default=0.0)

    def linear_system(self):
        """Stack linear constraints as ``G z <= h``."""
        if not self.is_linear:
            raise ValidationError("program has quadratic constraints")
        if not self.constraints:
            return np.zeros((0, self.dim)), np.zeros(0)
        g = np.array([con.q for con in self.constraints])
        h = -np.array([con.c for con in self.constraints])
        return g, h


@dataclass
class ProgramSolution:
    status: Status
    x: np.ndarray
    value: float
    iterations: int = 0
    max_violation: float = float("nan")
    stationarity: float = float("nan")
    multipliers: np.ndarray = None
    info: dict = field(default_factory=dict)

    @property
    def optimal(self):
        return self.status is Status.OPTIMAL

    def diagnostics(self):
        out = {"status": self.status.value, "iterations": self.iterations,
               "max_violation": self.max_violation, "stationarity": self.stationarity}
        for key, val in self.info.items():
            if isinstance(val, (int, float, str, bool)):
                out[key] = val
        return out


def kkt_residuals(prog, z, lam):
    """Stationarity, complementarity and dual-feasibility residuals (inf-norms)."""
    grad = prog.objective_grad(z).astype(float).copy()
    comp = 0.0
    for lam_i, con in zip(lam, prog.constraints):
        grad += lam_i * con.grad(z)
        comp = max(comp, abs(lam_i * con.value(z)))
    dual = max((max(-l, 0.0) for l in lam), default=0.0)
    return float(np.max(np.abs(grad), initial=0.0)), comp, dual
