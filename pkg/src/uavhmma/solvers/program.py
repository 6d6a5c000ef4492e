"""Solver-agnostic problem containers shared by the three solver classes."""
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
MAX_ITERS = "max_iters"
NUMERICAL_TROUBLE = "numerical_trouble"

DEFAULT_TOL_FEAS = 1e-8  # absolute, on scaled constraints
DEFAULT_TOL_OPT = 1e-6   # relative, on the objective


@dataclass
class AffineBlock:
    """Rows a @ x <= b.  ``a`` may be dense or scipy-sparse."""

    a: object
    b: np.ndarray
    name: str = "affine"

    @property
    def rows(self):
        return self.a.shape[0]

    def value(self, x):
        return np.asarray(self.a @ x) - self.b


@dataclass
class SmoothBlock:
    """Rows c_i(x) <= 0 with convex smooth c_i and exact derivatives.

    ``value(x)`` returns (m,), ``jac(x)`` returns (m, n) (dense or sparse),
    and ``hess_weighted(x, w)`` returns sum_i w_i * hess(c_i) as a dense
    (n, n) array.
    """

    rows: int
    value: object
    jac: object
    hess_weighted: object
    name: str = "smooth"


@dataclass
class ConvexProgram:
    """min objective @ x subject to affine/smooth rows and box bounds."""

    num_vars: int
    objective: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    affine: list = field(default_factory=list)
    smooth: list = field(default_factory=list)

    @classmethod
    def minimize(cls, objective, lower=None, upper=None):
        objective = np.asarray(objective, dtype=float)
        n = objective.size
        lo = np.full(n, -np.inf) if lower is None else np.asarray(lower, dtype=float)
        up = np.full(n, np.inf) if upper is None else np.asarray(upper, dtype=float)
        return cls(n, objective, lo, up)

    def add_affine(self, a, b, name="affine"):
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if not sp.issparse(a):
            a = np.atleast_2d(np.asarray(a, dtype=float))
        self.affine.append(AffineBlock(a, b, name))

    def add_smooth(self, rows, value, jac, hess_weighted, name="smooth"):
        self.smooth.append(SmoothBlock(rows, value, jac, hess_weighted, name))

    def num_constraints(self):
        rows = sum(b.rows for b in self.affine) + sum(b.rows for b in self.smooth)
        rows += int(np.isfinite(self.lower).sum() + np.isfinite(self.upper).sum())
        return rows

    def constraint_values(self, x):
        """All inequality values (<= 0 when feasible), bounds included."""
        parts = [blk.value(x) for blk in self.affine]
        parts += [np.asarray(blk.value(x)) for blk in self.smooth]
        lo_mask = np.isfinite(self.lower)
        up_mask = np.isfinite(self.upper)
        parts.append(self.lower[lo_mask] - x[lo_mask])
        parts.append(x[up_mask] - self.upper[up_mask])
        return np.concatenate([p for p in parts if p.size]) if parts else np.empty(0)

    def max_violation(self, x):
        v = self.constraint_values(x)
        return float(v.max(initial=0.0))


@dataclass
class SolveOutcome:
    """Result of one solver call, with an independent feasibility figure."""

    status: str
    x: np.ndarray
    objective: float
    max_violation: float
    iterations: int
    cert_gap: float = float("nan")
    message: str = ""

    @property
    def optimal(self):
        return self.status == OPTIMAL
