"""Twin-hyperplane training problems and decision rules.

Three related classifiers are assembled and solved here, each finding a
pair of nonparallel hyperplanes (w+, b+) and (w-, b-):

* ``train_tsvm`` - plain twin SVM on labeled points;
* ``train_utsvm`` - twin SVM with Universum samples sitting inside an
  epsilon-insensitive band between the planes;
* ``train_gbutsvm`` - the granular-ball variant: rows are ball centers and
  every margin/band requirement is deepened by the ball radius.

Each training problem is a pair of box-constrained concave duals, solved
as minimizations by :func:`gbutsvm.qp.solve_box_qp`. With every radius
zero the granular problem coincides with the point problems, so the
point-based trainers double as reduction references.

A sample is classified by whichever hyperplane is nearer in absolute
decision value; exact ties go to +1.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from ._validation import as_float_matrix, as_float_vector, as_pm1_labels, require
from .errors import DataFormatError, SolverError
from .granular import BallSet
from .kernels import rbf_kernel_matrix
from .qp import BoxQP, robust_gram_factor, solve_box_qp

KINDS = ("tsvm", "utsvm", "gbutsvm")
KERNELS = ("linear", "rbf")


@dataclass(frozen=True)
class Hyperparams:
    """Penalties and kernel settings shared by the three trainers.

    c1, c2 : misclassification penalties of the two primal problems.
    cu : penalty on Universum band violations (0 disables the Universum
        block even when Universum rows are supplied).
    epsilon : half-width parameter of the Universum insensitive band.
    kernel : "linear" or "rbf"; sigma is the RBF width.
    """

    c1: float = 1.0
    c2: float = 1.0
    cu: float = 1.0
    epsilon: float = 0.0
    kernel: str = "linear"
    sigma: float = 1.0

    def __post_init__(self):
        require(self.c1 > 0, f"c1 must be positive, got {self.c1}", exc=ValueError)
        require(self.c2 > 0, f"c2 must be positive, got {self.c2}", exc=ValueError)
        require(self.cu >= 0, f"cu must be >= 0, got {self.cu}", exc=ValueError)
        require(self.epsilon >= 0, f"epsilon must be >= 0, got {self.epsilon}", exc=ValueError)
        require(self.kernel in KERNELS, f"kernel must be in {KERNELS}", exc=ValueError)
        if self.kernel == "rbf":
            require(self.sigma > 0, f"sigma must be positive, got {self.sigma}", exc=ValueError)
        if self.epsilon > 1:
            warnings.warn(
                f"epsilon={self.epsilon} lies outside the usual [0, 1] band grid",
                stacklevel=2,
            )


@dataclass(frozen=True)
class TrainInputs:
    """Rows and radii feeding the granular training problem.

    A, B hold positive/negative rows (ball centers, or raw points with
    zero radii); U optionally holds Universum rows. Radii deepen the
    margin requirements row-by-row.
    """

    A: np.ndarray
    B: np.ndarray
    r_plus: np.ndarray
    r_minus: np.ndarray
    U: np.ndarray | None = None
    r_univ: np.ndarray | None = None

    def __post_init__(self):
        A = as_float_matrix(self.A, "A")
        B = as_float_matrix(self.B, "B")
        rp = as_float_vector(self.r_plus, "r_plus")
        rm = as_float_vector(self.r_minus, "r_minus")
        require(A.shape[1] == B.shape[1], "A and B disagree on feature count")
        require(rp.size == A.shape[0], "r_plus length must match A rows")
        require(rm.size == B.shape[0], "r_minus length must match B rows")
        require(np.all(rp >= 0) and np.all(rm >= 0), "radii must be >= 0")
        U = self.U
        ru = self.r_univ
        if U is not None and np.asarray(U).size == 0:
            U = None
        if U is not None:
            U = as_float_matrix(U, "U")
            require(U.shape[1] == A.shape[1], "U disagrees on feature count")
            require(ru is not None, "U given without r_univ")
            ru = as_float_vector(ru, "r_univ")
            require(ru.size == U.shape[0], "r_univ length must match U rows")
            require(np.all(ru >= 0), "radii must be >= 0")
        else:
            ru = None
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "r_plus", rp)
        object.__setattr__(self, "r_minus", rm)
        object.__setattr__(self, "U", U)
        object.__setattr__(self, "r_univ", ru)

    @property
    def n_features(self):
        return self.A.shape[1]

    @staticmethod
    def from_points(X, y, universum=None):
        """Points as degenerate balls: every radius is zero."""
        X = as_float_matrix(X, "X")
        y = as_pm1_labels(y)
        require(X.shape[0] == y.size, "X and y disagree on sample count")
        A = X[y == 1]
        B = X[y == -1]
        if A.shape[0] == 0 or B.shape[0] == 0:
            raise DataFormatError("training data must contain both labels")
        U = None
        ru = None
        if universum is not None and np.asarray(universum).size:
            U = as_float_matrix(universum, "universum")
            ru = np.zeros(U.shape[0])
        return TrainInputs(A, B, np.zeros(A.shape[0]), np.zeros(B.shape[0]), U, ru)

    @staticmethod
    def from_balls(class_balls: BallSet, universum_balls: BallSet | None = None):
        """Ball centers as rows, ball radii as margins."""
        A = class_balls.centers(1)
        B = class_balls.centers(-1)
        if A.shape[0] == 0 or B.shape[0] == 0:
            raise DataFormatError(
                f"ball set {class_balls.source_name!r} lacks a class "
                f"(counts: {class_balls.counts()})"
            )
        U = ru = None
        if universum_balls is not None and len(universum_balls):
            U = universum_balls.centers(0)
            ru = universum_balls.radii(0)
            if U.shape[0] == 0:
                U = ru = None
        return TrainInputs(A, B, class_balls.radii(1), class_balls.radii(-1), U, ru)


@dataclass
class TrainedModel:
    """Both hyperplanes plus the dual variables and solve diagnostics."""

    kind: str
    params: Hyperparams
    n_features: int
    theta_plus: np.ndarray
    theta_minus: np.ndarray
    reference: np.ndarray | None  # stacked [A; B] rows for kernel models
    alpha: np.ndarray
    mu: np.ndarray
    lam: np.ndarray
    nu: np.ndarray
    diagnostics: dict = field(default_factory=dict)

    @property
    def w_plus(self):
        return self.theta_plus[:-1]

    @property
    def b_plus(self):
        return float(self.theta_plus[-1])

    @property
    def w_minus(self):
        return self.theta_minus[:-1]

    @property
    def b_minus(self):
        return float(self.theta_minus[-1])


def _augment(M):
    return np.hstack([M, np.ones((M.shape[0], 1))])


def _embed(t: TrainInputs, h: Hyperparams):
    """Apply the kernel embedding; returns (A, B, U, reference)."""
    if h.kernel == "linear":
        return t.A, t.B, t.U, None
    C = np.vstack([t.A, t.B])
    A = rbf_kernel_matrix(t.A, C, h.sigma)
    B = rbf_kernel_matrix(t.B, C, h.sigma)
    U = rbf_kernel_matrix(t.U, C, h.sigma) if t.U is not None else None
    return A, B, U, C


def _universum_active(t: TrainInputs, h: Hyperparams):
    return t.U is not None and t.U.shape[0] > 0 and h.cu > 0


def _dual_positive_parts(A, B, U, t, h):
    """Pieces of the positive-plane dual on already-embedded rows."""
    H = _augment(A)
    V = _augment(B)
    lin = 1.0 - t.r_minus
    upper = np.full(B.shape[0], h.c1)
    if U is not None:
        O = _augment(U)
        V = np.vstack([V, -O])
        lin = np.concatenate([lin, (h.epsilon - 1.0) - t.r_univ])
        upper = np.concatenate([upper, np.full(U.shape[0], h.cu)])
    return H, V, lin, upper


def _dual_negative_parts(A, B, U, t, h):
    """Pieces of the negative-plane dual on already-embedded rows."""
    Qm = _augment(B)
    V = _augment(A)
    lin = 1.0 - t.r_plus
    upper = np.full(A.shape[0], h.c2)
    if U is not None:
        S = _augment(U)
        V = np.vstack([V, -S])
        lin = np.concatenate([lin, (h.epsilon - 1.0) - t.r_univ])
        upper = np.concatenate([upper, np.full(U.shape[0], h.cu)])
    return Qm, V, lin, upper


def _dual_from_parts(M, V, lin, upper):
    """BoxQP min 0.5 x' [V (M'M+dI)^-1 V'] x - lin'x, 0 <= x <= upper."""
    factor = robust_gram_factor(M)
    solved = factor.solve(V.T)
    Qd = V @ solved
    Qd = 0.5 * (Qd + Qd.T)
    qp = BoxQP(Qd, -lin, np.zeros(lin.size), upper)
    return qp, factor


def assemble_dual_positive(t: TrainInputs, h: Hyperparams):
    """Dual of the positive-plane problem as a minimization BoxQP."""
    A, B, U, _ = _embed(t, h)
    if not _universum_active(t, h):
        U = None
    qp, _ = _dual_from_parts(*_dual_positive_parts(A, B, U, t, h))
    return qp


def assemble_dual_negative(t: TrainInputs, h: Hyperparams):
    """Dual of the negative-plane problem as a minimization BoxQP."""
    A, B, U, _ = _embed(t, h)
    if not _universum_active(t, h):
        U = None
    qp, _ = _dual_from_parts(*_dual_negative_parts(A, B, U, t, h))
    return qp


def _solve_dual(M, V, lin, upper, tol, max_iter, side, kind):
    qp, factor = _dual_from_parts(M, V, lin, upper)
    started = time.perf_counter()
    sol = solve_box_qp(qp, tol=tol, max_iter=max_iter)
    elapsed = time.perf_counter() - started
    if not sol.converged:
        raise SolverError(
            f"{kind} {side} dual did not converge in {max_iter} iterations "
            f"(residual {sol.kkt_residual:.3e})",
            diagnostics={
                "side": side,
                "kkt_residual": sol.kkt_residual,
                "iterations": sol.iterations,
            },
        )
    theta = -factor.solve(V.T @ sol.x)
    info = {
        f"kkt_{side}": sol.kkt_residual,
        f"iterations_{side}": sol.iterations,
        f"ridge_{side}": factor.delta,
        f"solve_seconds_{side}": elapsed,
        f"objective_{side}": sol.objective,
    }
    return theta, sol.x, info


def _finish(kind, t, h, reference, pos, neg, n_univ, started):
    theta_plus, x_pos, info_pos = pos
    theta_minus, x_neg, info_neg = neg
    m2 = t.B.shape[0]
    m1 = t.A.shape[0]
    diagnostics = {"train_seconds": time.perf_counter() - started}
    diagnostics.update(info_pos)
    diagnostics.update(info_neg)
    return TrainedModel(
        kind=kind,
        params=h,
        n_features=t.n_features,
        theta_plus=theta_plus,
        theta_minus=theta_minus,
        reference=reference,
        alpha=x_pos[:m2],
        mu=x_pos[m2 : m2 + n_univ],
        lam=x_neg[:m1],
        nu=x_neg[m1 : m1 + n_univ],
        diagnostics=diagnostics,
    )


def train_tsvm(X, y, h: Hyperparams = Hyperparams(), tol=1e-8, max_iter=10000):
    """Plain twin SVM on labeled points.

    Positive dual:  max e'a - 0.5 a' G (H'H)^-1 G' a,  0 <= a <= c1,
    with H = [A e], G = [B e]; the negative dual swaps the roles. The
    planes are recovered from the regularized normal equations.
    """
    t = TrainInputs.from_points(X, y)
    started = time.perf_counter()
    A, B, _, reference = _embed(t, h)
    H, G = _augment(A), _augment(B)
    e2 = np.ones(G.shape[0])
    e1 = np.ones(H.shape[0])
    pos = _solve_dual(H, G, e2, np.full(G.shape[0], h.c1), tol, max_iter, "positive", "tsvm")
    neg = _solve_dual(G, H, e1, np.full(H.shape[0], h.c2), tol, max_iter, "negative", "tsvm")
    return _finish("tsvm", t, h, reference, pos, neg, 0, started)


def train_utsvm(X, y, universum, h: Hyperparams = Hyperparams(), tol=1e-8, max_iter=10000):
    """Twin SVM with point Universum data.

    The Universum rows enter each dual through the stacked matrix
    [G; -O] and carry the band linear term (epsilon - 1)e.
    """
    t = TrainInputs.from_points(X, y, universum)
    require(t.U is not None, "universum rows are required; use train_tsvm otherwise",
            exc=DataFormatError)
    started = time.perf_counter()
    A, B, U, reference = _embed(t, h)
    H, G, O = _augment(A), _augment(B), _augment(U)
    m1, m2, nu_ = A.shape[0], B.shape[0], U.shape[0]
    lin_pos = np.concatenate([np.ones(m2), (h.epsilon - 1.0) * np.ones(nu_)])
    lin_neg = np.concatenate([np.ones(m1), (h.epsilon - 1.0) * np.ones(nu_)])
    up_pos = np.concatenate([np.full(m2, h.c1), np.full(nu_, h.cu)])
    up_neg = np.concatenate([np.full(m1, h.c2), np.full(nu_, h.cu)])
    pos = _solve_dual(H, np.vstack([G, -O]), lin_pos, up_pos, tol, max_iter, "positive", "utsvm")
    neg = _solve_dual(G, np.vstack([H, -O]), lin_neg, up_neg, tol, max_iter, "negative", "utsvm")
    return _finish("utsvm", t, h, reference, pos, neg, nu_, started)


def train_gbutsvm(t: TrainInputs, h: Hyperparams = Hyperparams(), tol=1e-8, max_iter=10000):
    """Granular-ball twin SVM with optional Universum balls.

    Rows are ball centers; each ball's radius deepens its requirement, so
    the linear dual terms become (e - r) for class rows and
    ((epsilon - 1)e - r) for Universum rows. Zero radii and no Universum
    reduce this problem to the point trainers above.
    """
    started = time.perf_counter()
    A, B, U, reference = _embed(t, h)
    if not _universum_active(t, h):
        U = None
    n_univ = 0 if U is None else U.shape[0]
    pos = _solve_dual(*_dual_positive_parts(A, B, U, t, h), tol, max_iter, "positive", "gbutsvm")
    neg = _solve_dual(*_dual_negative_parts(A, B, U, t, h), tol, max_iter, "negative", "gbutsvm")
    return _finish("gbutsvm", t, h, reference, pos, neg, n_univ, started)


def decision_values(model: TrainedModel, Z, normalized=False):
    """|w'z + b| for each plane; columns (positive, negative).

    ``normalized=True`` divides by the Euclidean norm of each plane's
    coefficient vector (classical point-to-plane distance); the default
    keeps the literal absolute decision values.
    """
    Z = as_float_matrix(Z, "Z", allow_empty=True)
    require(
        Z.shape[1] == model.n_features,
        f"Z has {Z.shape[1]} features, model expects {model.n_features}",
    )
    rows = Z if model.reference is None else rbf_kernel_matrix(Z, model.reference, model.params.sigma)
    d_pos = np.abs(rows @ model.w_plus + model.b_plus)
    d_neg = np.abs(rows @ model.w_minus + model.b_minus)
    if normalized:
        n_pos = float(np.linalg.norm(model.w_plus))
        n_neg = float(np.linalg.norm(model.w_minus))
        d_pos = d_pos / (n_pos if n_pos > 0 else 1.0)
        d_neg = d_neg / (n_neg if n_neg > 0 else 1.0)
    return np.column_stack([d_pos, d_neg])


def classify(model: TrainedModel, Z, normalized=False):
    """+1 where the positive plane is at least as near, else -1."""
    d = decision_values(model, Z, normalized=normalized)
    return np.where(d[:, 0] <= d[:, 1], 1, -1).astype(np.int64)


def universum_hinge(f_value, radius, epsilon, side):
    """Band hinge loss of a Universum row against one plane.

    side="plus" penalizes f+ below the deepened band floor:
        max(0, -1 + epsilon - f - r)
    side="minus" is the mirrored branch:
        max(0, -1 + epsilon + f - r)
    """
    require(side in ("plus", "minus"), f"side must be plus/minus, got {side!r}", exc=ValueError)
    f = np.asarray(f_value, dtype=np.float64)
    r = np.asarray(radius, dtype=np.float64)
    require(np.all(r >= 0), "radius must be >= 0", exc=ValueError)
    require(epsilon >= 0, "epsilon must be >= 0", exc=ValueError)
    signed = -f if side == "plus" else f
    out = np.maximum(0.0, -1.0 + epsilon + signed - r)
    if np.isscalar(f_value) and np.isscalar(radius):
        return float(out)
    return out
