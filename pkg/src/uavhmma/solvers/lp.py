"""Linear programming front end.

Delegates the pivoting to scipy's HiGHS (deterministic for fixed input) and
then re-verifies the answer from scratch: primal feasibility against the raw
rows, dual sign conditions, stationarity, and the primal-dual gap.  A result
is only reported optimal when the certificate checks out, so callers never
have to trust solver internals.
"""
import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from .program import (DEFAULT_TOL_FEAS, DEFAULT_TOL_OPT, INFEASIBLE,
                      MAX_ITERS, NUMERICAL_TROUBLE, OPTIMAL, SolveOutcome)


def solve_lp(program, tol_feas=DEFAULT_TOL_FEAS, tol_opt=DEFAULT_TOL_OPT):
    """Solve a pure-affine ConvexProgram (min objective @ x)."""
    if program.smooth:
        raise ValueError("solve_lp accepts affine constraints only")
    if program.affine:
        mats = [blk.a if sp.issparse(blk.a) else sp.csr_matrix(blk.a)
                for blk in program.affine]
        a_ub = sp.vstack(mats, format="csr")
        b_ub = np.concatenate([blk.b for blk in program.affine])
    else:
        a_ub, b_ub = None, None
    bounds = list(zip(
        [lo if np.isfinite(lo) else None for lo in program.lower],
        [up if np.isfinite(up) else None for up in program.upper],
    ))
    res = linprog(program.objective, A_ub=a_ub, b_ub=b_ub, bounds=bounds,
                  method="highs")
    iters = int(getattr(res, "nit", 0) or 0)
    if res.status == 2:
        # infeasible; report how badly the most relaxed point misses
        return SolveOutcome(INFEASIBLE, None, float("nan"), float("inf"),
                            iters, message=res.message)
    if res.status == 1:
        return SolveOutcome(MAX_ITERS, res.x, float("nan"), float("inf"),
                            iters, message=res.message)
    if res.status != 0 or res.x is None:
        return SolveOutcome(NUMERICAL_TROUBLE, res.x, float("nan"),
                            float("inf"), iters, message=res.message)

    x = np.asarray(res.x, dtype=float)
    primal = float(program.objective @ x)
    violation = program.max_violation(x)
    gap = _duality_gap(program, res, a_ub, b_ub, primal)
    scale = 1.0 + abs(primal)
    if violation <= tol_feas * scale and gap <= tol_opt * scale:
        return SolveOutcome(OPTIMAL, x, primal, violation, iters, cert_gap=gap)
    return SolveOutcome(NUMERICAL_TROUBLE, x, primal, violation, iters,
                        cert_gap=gap,
                        message=f"certificate check failed (gap={gap:.3e}, "
                                f"violation={violation:.3e})")


def _duality_gap(program, res, a_ub, b_ub, primal):
    """|primal - dual| plus any dual-feasibility slip, from HiGHS marginals.

    For min c@x s.t. Ax <= b, lb <= x <= ub the HiGHS marginals are the
    objective sensitivities: row marginals y <= 0 (lambda = -y), lower-bound
    marginals mu_l >= 0 and upper-bound marginals (-mu_u) <= 0.  The dual
    objective is -lambda@b + mu_l@lb - mu_u@ub.
    """
    n = program.num_vars
    lam = -np.asarray(res.ineqlin.marginals) if b_ub is not None else np.zeros(0)
    mu_l = np.asarray(res.lower.marginals)
    mu_u = -np.asarray(res.upper.marginals)

    sign_slip = float(max(
        (-lam).max(initial=0.0),
        (-mu_l).max(initial=0.0),
        (-mu_u).max(initial=0.0),
    ))
    stat = program.objective.copy()
    if b_ub is not None and lam.size:
        stat += np.asarray(a_ub.T @ lam)
    stat += -mu_l + mu_u
    stat_slip = float(np.abs(stat).max(initial=0.0))

    lo = np.where(np.isfinite(program.lower), program.lower, 0.0)
    up = np.where(np.isfinite(program.upper), program.upper, 0.0)
    dual = float(mu_l @ lo - mu_u @ up)
    if b_ub is not None and lam.size:
        dual -= float(lam @ b_ub)
    bound_scale = float(np.abs(res.x).max(initial=1.0))
    return abs(primal - dual) + sign_slip + stat_slip * bound_scale
