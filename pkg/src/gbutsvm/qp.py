"""Box-constrained convex quadratic programs and regularized Gram factors.

The solver minimizes ``0.5 * x'Qx + q'x`` subject to ``lower <= x <= upper``
with projected gradient steps, a Barzilai-Borwein step length, and an Armijo
backtracking safeguard along the projection arc, so the objective never
increases from one iterate to the next. First-order optimality is measured
by the projected-gradient residual

    ``|| x - clip(x - grad f(x), lower, upper) ||_inf``

which is zero exactly at a KKT point of the box problem. Near the optimum
the gradient iteration is finished off by an exact solve on the active face
it has identified, which avoids the slow terminal crawl that first-order
methods exhibit at tight tolerances.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from ._fsio import atomic_write_text
from ._validation import as_float_vector, require
from .errors import FactorizationError

_ARMIJO_C = 1e-4
_MAX_BACKTRACKS = 60


@dataclass(frozen=True)
class BoxQP:
    """minimize 0.5 x'Qx + q'x  subject to  lower <= x <= upper."""

    Q: np.ndarray
    q: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        Q = np.ascontiguousarray(self.Q, dtype=np.float64)
        q = as_float_vector(self.q, "q")
        lo = as_float_vector(self.lower, "lower")
        hi = as_float_vector(self.upper, "upper")
        n = q.size
        require(Q.ndim == 2 and Q.shape == (n, n), f"Q must be {n}x{n}, got {Q.shape}")
        require(np.all(np.isfinite(Q)), "Q contains non-finite entries")
        asym = float(np.max(np.abs(Q - Q.T))) if n else 0.0
        require(asym <= 1e-10 * max(1.0, float(np.max(np.abs(Q)))),
                f"Q is not symmetric (max asymmetry {asym:g})")
        require(lo.size == n and hi.size == n, "bounds must match q in length")
        require(np.all(lo <= hi), "lower bound exceeds upper bound somewhere")
        for nm, arr in (("Q", Q), ("q", q), ("lower", lo), ("upper", hi)):
            arr.setflags(write=False)
        object.__setattr__(self, "Q", Q)
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def n(self):
        return self.q.size

    def objective(self, x):
        x = np.asarray(x, dtype=np.float64)
        return float(0.5 * x @ self.Q @ x + self.q @ x)


@dataclass(frozen=True)
class QPSolution:
    x: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool


def kkt_residual(problem: BoxQP, x):
    """Projected-gradient residual at x (inf-norm); 0 at a KKT point."""
    x = np.asarray(x, dtype=np.float64)
    g = problem.Q @ x + problem.q
    return float(np.max(np.abs(x - np.clip(x - g, problem.lower, problem.upper)))) if x.size else 0.0


def _polish(Q, q, lo, hi, x, g, fx, tol):
    """Exact solve on the face suggested by (x, g); None unless it verifies.

    Coordinates sitting on a bound with a consistent gradient sign are pinned
    there; the remaining free block is solved as an equality system. The
    candidate is accepted only when it is feasible, satisfies the residual
    test, and does not increase the objective, so a wrong face guess is
    harmless.
    """
    span = 1.0 + np.abs(lo) + np.abs(hi)
    active_lo = ((x - lo) <= 1e-10 * span) & (g >= -tol)
    active_hi = ((hi - x) <= 1e-10 * span) & (g <= tol) & ~active_lo
    free = ~(active_lo | active_hi)
    z = np.where(active_lo, lo, np.where(active_hi, hi, x))
    if np.any(free):
        F = np.flatnonzero(free)
        B = np.flatnonzero(~free)
        rhs = -q[F]
        if B.size:
            rhs = rhs - Q[np.ix_(F, B)] @ z[B]
        Qff = Q[np.ix_(F, F)]
        try:
            zf = np.linalg.solve(Qff, rhs)
        except np.linalg.LinAlgError:
            zf = np.linalg.lstsq(Qff, rhs, rcond=None)[0]
        if not np.all(np.isfinite(zf)):
            return None
        if np.any(zf < lo[F]) or np.any(zf > hi[F]):
            return None
        z[F] = zf
    g_z = Q @ z + q
    res = float(np.max(np.abs(z - np.clip(z - g_z, lo, hi))))
    f_z = float(0.5 * z @ (g_z + q))
    if res <= tol and f_z <= fx + 1e-12 * (1.0 + abs(fx)):
        return z, f_z, res
    return None


def solve_box_qp(problem: BoxQP, tol=1e-8, max_iter=10000, x0=None):
    """Solve a BoxQP to projected-gradient residual <= tol.

    Returns a :class:`QPSolution`; ``converged`` is False when the iteration
    budget ran out, in which case the best (last) iterate is still returned.
    """
    require(tol > 0, f"tol must be positive, got {tol}", exc=ValueError)
    Q, q, lo, hi = problem.Q, problem.q, problem.lower, problem.upper
    n = problem.n
    if n == 0:
        return QPSolution(np.zeros(0), 0.0, 0.0, 0, True)

    x = np.clip(np.zeros(n) if x0 is None else np.asarray(x0, dtype=np.float64), lo, hi)
    # Spectral norm of Q fixes the fallback step 1/L when the BB ratio is
    # unusable (first iteration, or negative curvature along s).
    lipschitz = float(np.linalg.norm(Q, 2)) if np.any(Q) else 0.0
    fallback = 1.0 / lipschitz if lipschitz > 0 else 1e12

    g = Q @ x + q
    fx = float(0.5 * x @ (g + q))
    step = fallback
    it = 0
    for it in range(1, max_iter + 1):
        res = float(np.max(np.abs(x - np.clip(x - g, lo, hi))))
        if res <= tol:
            return QPSolution(x, fx, res, it - 1, True)
        if res <= 1e3 * tol or it % 100 == 0:
            polished = _polish(Q, q, lo, hi, x, g, fx, tol)
            if polished is not None:
                z, f_z, res_z = polished
                return QPSolution(z, f_z, res_z, it - 1, True)

        t = step
        for _ in range(_MAX_BACKTRACKS + 1):
            x_new = np.clip(x - t * g, lo, hi)
            d = x_new - x
            gd = float(g @ d)
            g_new = Q @ x_new + q
            f_new = float(0.5 * x_new @ (g_new + q))
            if f_new <= fx + _ARMIJO_C * gd or not np.any(d):
                break
            t *= 0.5

        s = x_new - x
        if not np.any(s):
            # The projection arc has collapsed below floating-point
            # resolution: further iterations would repeat exactly.
            polished = _polish(Q, q, lo, hi, x, g, fx, tol)
            if polished is not None:
                z, f_z, res_z = polished
                return QPSolution(z, f_z, res_z, it, True)
            return QPSolution(x, fx, res, it, False)
        yv = g_new - g
        x, g, fx = x_new, g_new, f_new

        sy = float(s @ yv)
        if sy > 1e-300:
            step = float(s @ s) / sy
            if not np.isfinite(step) or step <= 0:
                step = fallback
        else:
            step = fallback

    res = float(np.max(np.abs(x - np.clip(x - g, lo, hi))))
    if res > tol:
        polished = _polish(Q, q, lo, hi, x, g, fx, tol)
        if polished is not None:
            z, f_z, res_z = polished
            return QPSolution(z, f_z, res_z, max_iter, True)
    return QPSolution(x, fx, res, max_iter, res <= tol)


def dump_box_qp(problem: BoxQP, solution, path):
    """Write (Q, q, bounds, solution) to CSV for offline cross-checks."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["section", "i", "j", "value"])
    for i in range(problem.n):
        for j in range(problem.n):
            w.writerow(["Q", i, j, "%.17g" % problem.Q[i, j]])
    for name, vec in (
        ("q", problem.q),
        ("lower", problem.lower),
        ("upper", problem.upper),
    ):
        for i, v in enumerate(vec):
            w.writerow([name, i, "", "%.17g" % v])
    if solution is not None:
        for i, v in enumerate(solution.x):
            w.writerow(["x", i, "", "%.17g" % v])
        w.writerow(["objective", "", "", "%.17g" % solution.objective])
        w.writerow(["kkt_residual", "", "", "%.17g" % solution.kkt_residual])
    atomic_write_text(path, buf.getvalue())


class GramFactor:
    """Cholesky factor of M'M + delta*I, exposing solves against it."""

    def __init__(self, M, delta=None):
        M = np.ascontiguousarray(M, dtype=np.float64)
        require(M.ndim == 2 and M.shape[0] >= 1, "M must be a nonempty matrix")
        require(np.all(np.isfinite(M)), "M contains non-finite entries")
        gram = M.T @ M
        n = gram.shape[0]
        if delta is None or delta == 0.0:
            delta = default_ridge(gram)
        require(delta > 0, f"ridge must be positive, got {delta}", exc=ValueError)
        try:
            self._factor = cho_factor(
                gram + delta * np.eye(n), lower=True, check_finite=False
            )
        except LinAlgError as exc:
            raise FactorizationError(
                f"Cholesky failed for ridge {delta:g}: {exc}"
            ) from exc
        self.delta = float(delta)
        self.n = n

    def solve(self, rhs):
        """Solve (M'M + delta*I) x = rhs; rhs may be a vector or matrix."""
        rhs = np.asarray(rhs, dtype=np.float64)
        require(rhs.shape[0] == self.n, f"rhs has {rhs.shape[0]} rows, expected {self.n}")
        return cho_solve(self._factor, rhs, check_finite=False)


def default_ridge(gram):
    """Scale-aware default ridge: 1e-6 * (1 + trace(M'M)/n)."""
    n = gram.shape[0]
    return 1e-6 * (1.0 + float(np.trace(gram)) / n)


def gram_factor(M, delta=None):
    """Factor M'M + delta*I (delta=None or 0 picks the default ridge)."""
    return GramFactor(M, delta)


def gram_solve(factor: GramFactor, rhs):
    return factor.solve(rhs)


def robust_gram_factor(M):
    """Factor with the default ridge, escalating x10 up to the 1e-2 scale."""
    M = np.ascontiguousarray(M, dtype=np.float64)
    gram_trace = float(np.trace(M.T @ M))
    base = 1.0 + gram_trace / M.shape[1]
    last_exc = None
    for scale in (1e-6, 1e-5, 1e-4, 1e-3, 1e-2):
        try:
            return GramFactor(M, scale * base)
        except FactorizationError as exc:
            last_exc = exc
    raise FactorizationError(
        f"Cholesky failed even at ridge {1e-2 * base:g}"
    ) from last_exc
