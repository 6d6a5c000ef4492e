"""Log-barrier interior-point solver for smooth convex programs and QCQPs.

Standard path following: damped Newton centering on

    t * c@x - sum log(-c_i(x)) - sum log(x - lb) - sum log(ub - x)

with t scaled up geometrically until the barrier duality gap m/t certifies
the objective to the requested relative tolerance.  Constraint callbacks
supply exact gradients and weighted Hessians, so Newton steps are cheap and
the whole procedure is deterministic.

Callers normally hand in a strictly feasible start; when they cannot, a
phase-1 problem (minimize the worst constraint value) either produces one
or certifies infeasibility.
"""
import numpy as np
import scipy.sparse as sp

from .program import (DEFAULT_TOL_FEAS, DEFAULT_TOL_OPT, INFEASIBLE,
                      MAX_ITERS, NUMERICAL_TROUBLE, OPTIMAL, ConvexProgram,
                      SolveOutcome)

_MU = 20.0
_NEWTON_TOL = 1e-10      # on the squared Newton decrement / 2
_MAX_NEWTON_PER_STAGE = 60
_MAX_STAGES = 40
_ARMIJO = 0.25
_BACKTRACK = 0.5


class _Barrier:
    """Barrier function state for one program."""

    def __init__(self, prog):
        self.prog = prog
        self.lo_idx = np.flatnonzero(np.isfinite(prog.lower))
        self.up_idx = np.flatnonzero(np.isfinite(prog.upper))
        self.lo = prog.lower[self.lo_idx]
        self.up = prog.upper[self.up_idx]
        self.m = prog.num_constraints()

    def slacks(self, x):
        """List of positive-slack arrays; any nonpositive entry means x is
        not strictly feasible."""
        out = [-blk.value(x) for blk in self.prog.affine]
        out += [-np.asarray(blk.value(x)) for blk in self.prog.smooth]
        out.append(x[self.lo_idx] - self.lo)
        out.append(self.up - x[self.up_idx])
        return out

    def strictly_feasible(self, x):
        return all(s.size == 0 or s.min() > 0.0 for s in self.slacks(x))

    def value(self, t, x):
        total = t * float(self.prog.objective @ x)
        for s in self.slacks(x):
            if s.size and s.min() <= 0.0:
                return np.inf
            total -= float(np.log(s).sum()) if s.size else 0.0
        return total

    def grad_hess(self, t, x):
        n = self.prog.num_vars
        g = t * self.prog.objective.copy()
        h = np.zeros((n, n))
        for blk in self.prog.affine:
            s = -blk.value(x)
            w = 1.0 / s
            if sp.issparse(blk.a):
                g += np.asarray(blk.a.T @ w)
                h += (blk.a.T @ sp.diags(w**2) @ blk.a).toarray()
            else:
                g += blk.a.T @ w
                h += blk.a.T @ (w[:, None] ** 2 * blk.a)
        for blk in self.prog.smooth:
            s = -np.asarray(blk.value(x))
            w = 1.0 / s
            j = blk.jac(x)
            if sp.issparse(j):
                g += np.asarray(j.T @ w)
                h += (j.T @ sp.diags(w**2) @ j).toarray()
            else:
                j = np.asarray(j)
                g += j.T @ w
                h += j.T @ (w[:, None] ** 2 * j)
            h += blk.hess_weighted(x, w)
        dlo = x[self.lo_idx] - self.lo
        dup = self.up - x[self.up_idx]
        np.subtract.at(g, self.lo_idx, 1.0 / dlo)
        np.add.at(g, self.up_idx, 1.0 / dup)
        diag = np.zeros(n)
        np.add.at(diag, self.lo_idx, 1.0 / dlo**2)
        np.add.at(diag, self.up_idx, 1.0 / dup**2)
        h[np.diag_indices(n)] += diag
        return g, h


def _newton_step(h, g):
    """Solve h @ d = -g by Cholesky, escalating a diagonal jitter on failure."""
    jitter = 0.0
    base = float(np.abs(np.diag(h)).max(initial=1.0))
    for _ in range(8):
        try:
            hj = h if jitter == 0.0 else h + jitter * np.eye(h.shape[0])
            c = np.linalg.cholesky(hj)
            d = np.linalg.solve(c.T, np.linalg.solve(c, -g))
            return d
        except np.linalg.LinAlgError:
            jitter = max(jitter * 10.0, 1e-12 * base)
    return None


def solve_barrier(program, x0, tol_feas=DEFAULT_TOL_FEAS,
                  tol_opt=DEFAULT_TOL_OPT, allow_phase1=True):
    """Minimize ``program`` starting from ``x0``.

    ``x0`` should be strictly feasible; otherwise phase 1 runs first (or the
    problem is declared infeasible).  Returns a SolveOutcome whose optimal
    status certifies max violation <= tol_feas and a barrier gap at most
    tol_opt relative to the objective.
    """
    bar = _Barrier(program)
    x = np.asarray(x0, dtype=float).copy()
    if not bar.strictly_feasible(x):
        if not allow_phase1:
            return SolveOutcome(INFEASIBLE, x, float("nan"), float("inf"), 0,
                                message="start not strictly feasible")
        x = _phase1(program, x, tol_feas)
        if x is None:
            return SolveOutcome(INFEASIBLE, None, float("nan"), float("inf"),
                                0, message="phase 1 found no interior point")

    m = max(bar.m, 1)
    t = 1.0
    newton_total = 0
    for _ in range(_MAX_STAGES):
        psi = bar.value(t, x)
        for _ in range(_MAX_NEWTON_PER_STAGE):
            g, h = bar.grad_hess(t, x)
            d = _newton_step(h, g)
            if d is None:
                return SolveOutcome(NUMERICAL_TROUBLE, x,
                                    float(program.objective @ x),
                                    program.max_violation(x), newton_total,
                                    message="hessian factorization failed")
            newton_total += 1
            lam2 = float(-g @ d)
            if lam2 / 2.0 <= _NEWTON_TOL:
                break
            step = 1.0
            for _ in range(60):
                x_new = x + step * d
                psi_new = bar.value(t, x_new)
                if psi_new <= psi + _ARMIJO * step * float(g @ d):
                    break
                step *= _BACKTRACK
            else:
                break  # stalled line search: accept current center
            x, psi = x_new, psi_new
        obj = float(program.objective @ x)
        gap = m / t
        if gap <= tol_opt * (1.0 + abs(obj)):
            violation = program.max_violation(x)
            status = OPTIMAL if violation <= tol_feas * (1.0 + abs(obj)) else NUMERICAL_TROUBLE
            return SolveOutcome(status, x, obj, violation, newton_total,
                                cert_gap=gap)
        t *= _MU
    return SolveOutcome(MAX_ITERS, x, float(program.objective @ x),
                        program.max_violation(x), newton_total, cert_gap=m / t)


def _phase1(program, x_guess, tol_feas):
    """Find a strictly feasible point by minimizing a shared slack.

    Adds one variable s bounding every constraint value from above; if the
    optimum cannot push s below zero the region has no interior.
    """
    n = program.num_vars
    x = np.clip(
        x_guess,
        np.where(np.isfinite(program.lower), program.lower + 1e-9, x_guess),
        np.where(np.isfinite(program.upper), program.upper - 1e-9, x_guess),
    )
    vals = program.constraint_values(x)
    s0 = float(vals.max(initial=0.0)) + 1.0

    obj = np.zeros(n + 1)
    obj[-1] = 1.0
    aug = ConvexProgram.minimize(
        obj,
        lower=np.append(program.lower, -np.inf),
        upper=np.append(program.upper, s0 + 1.0),
    )
    for blk in program.affine:
        a = blk.a.toarray() if sp.issparse(blk.a) else np.asarray(blk.a)
        aug.add_affine(np.hstack([a, -np.ones((a.shape[0], 1))]), blk.b,
                       name=blk.name + "+s")
    for blk in program.smooth:
        aug.add_smooth(
            blk.rows,
            value=lambda z, b=blk: np.asarray(b.value(z[:-1])) - z[-1],
            jac=lambda z, b=blk: _augment_jac(b.jac(z[:-1]), b.rows),
            hess_weighted=lambda z, w, b=blk: _pad(b.hess_weighted(z[:-1], w)),
            name=blk.name + "+s",
        )
    out = solve_barrier(aug, np.append(x, s0), tol_feas=tol_feas,
                        tol_opt=1e-4, allow_phase1=False)
    if out.x is None or out.x[-1] >= -tol_feas:
        return None
    return out.x[:-1]


def _augment_jac(j, rows):
    if sp.issparse(j):
        j = j.toarray()
    return np.hstack([np.asarray(j), -np.ones((rows, 1))])


def _pad(h):
    n = h.shape[0]
    out = np.zeros((n + 1, n + 1))
    out[:n, :n] = h
    return out


def solve_smooth(program, x0, **kw):
    """Barrier solve for programs with smooth convex constraint callbacks."""
    return solve_barrier(program, x0, **kw)


def solve_qcqp(program, x0, check_convexity=False, rng=None, **kw):
    """Barrier solve for convex quadratically constrained programs.

    With ``check_convexity`` a randomized midpoint probe asserts each smooth
    row behaves convexly around the start (debug aid for modelling slips).
    """
    if check_convexity:
        rng = np.random.default_rng(0) if rng is None else rng
        _convexity_probe(program, np.asarray(x0, dtype=float), rng)
    return solve_barrier(program, x0, **kw)


def _convexity_probe(program, x0, rng, trials=8, scale=1e-2):
    for blk in program.smooth:
        for _ in range(trials):
            da = rng.normal(size=x0.size) * scale * (1.0 + np.abs(x0))
            db = rng.normal(size=x0.size) * scale * (1.0 + np.abs(x0))
            va = np.asarray(blk.value(x0 + da))
            vb = np.asarray(blk.value(x0 + db))
            vm = np.asarray(blk.value(x0 + 0.5 * (da + db)))
            slack = 1e-9 * (1.0 + np.abs(va) + np.abs(vb))
            if np.any(vm > 0.5 * (va + vb) + slack):
                raise ValueError(f"constraint block '{blk.name}' failed a "
                                 "midpoint convexity probe")


def check_gradients(block, x, rel_tol=1e-5, rng=None):
    """Finite-difference validation of a smooth block's Jacobian at x.

    Returns the worst relative error over a handful of random directions.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    j = block.jac(x)
    if sp.issparse(j):
        j = j.toarray()
    j = np.asarray(j)
    worst = 0.0
    for _ in range(6):
        d = rng.normal(size=x.size)
        d /= np.linalg.norm(d)
        eps = 1e-6 * (1.0 + np.linalg.norm(x))
        fwd = np.asarray(block.value(x + eps * d))
        bwd = np.asarray(block.value(x - eps * d))
        fd = (fwd - bwd) / (2.0 * eps)
        an = j @ d
        err = np.abs(fd - an) / (1.0 + np.abs(an))
        worst = max(worst, float(err.max(initial=0.0)))
    if worst > rel_tol:
        raise AssertionError(f"gradient check failed: {worst:.2e} > {rel_tol}")
    return worst
