"""Scikit-learn style estimators wrapping the twin-hyperplane trainers.

All three classifiers follow the usual conventions: parameters are stored
verbatim in ``__init__``, ``fit`` validates and sets trailing-underscore
attributes, ``predict`` maps back to the caller's label values, and
``get_params``/``set_params`` come from ``BaseEstimator`` so the grid
tools compose. Sample weights are not supported.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .datasets import Dataset
from .errors import DataFormatError
from .granular import (
    BallGenConfig,
    BallSet,
    GranularBall,
    generate_balls,
    universum_balls_average,
    universum_balls_split,
)
from .kernels import kernel_ball_radius
from .models import (
    Hyperparams,
    TrainInputs,
    classify,
    decision_values,
    train_gbutsvm,
    train_tsvm,
    train_utsvm,
)


class _TwinPlaneClassifier(BaseEstimator, ClassifierMixin):
    """Shared fit plumbing: binary label encoding and prediction."""

    def _encode_labels(self, y):
        classes = np.unique(y)
        if classes.size != 2:
            raise ValueError(
                f"binary classification requires exactly 2 classes, got {classes.size}"
            )
        self.classes_ = classes
        return np.where(y == classes[1], 1, -1).astype(np.int64)

    def _decode_labels(self, pm1):
        return np.where(pm1 == 1, self.classes_[1], self.classes_[0])

    def _check_fit_data(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, ensure_min_samples=2)
        self.n_features_in_ = X.shape[1]
        return X, self._encode_labels(y)

    def predict(self, X):
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        return self._decode_labels(classify(self.model_, X, normalized=self.normalized))

    def hyperplane_distances(self, X):
        """Absolute decision values against (positive, negative) planes."""
        check_is_fitted(self, "model_")
        X = check_array(X, dtype=np.float64)
        return decision_values(self.model_, X, normalized=self.normalized)

    def decision_function(self, X):
        """Signed score: positive when the positive-class plane is nearer."""
        d = self.hyperplane_distances(X)
        return d[:, 1] - d[:, 0]


class TwinSVM(_TwinPlaneClassifier):
    """Twin SVM: two nonparallel planes, one per class.

    Parameters
    ----------
    c1, c2 : float
        Penalties of the two primal problems.
    kernel : "linear" or "rbf"
    sigma : float
        RBF width (ignored for the linear kernel).
    normalized : bool
        Divide decision values by ||w|| when predicting.
    tol, max_iter : solver stopping controls.
    """

    def __init__(self, c1=1.0, c2=1.0, kernel="linear", sigma=1.0,
                 normalized=False, tol=1e-8, max_iter=10000):
        self.c1 = c1
        self.c2 = c2
        self.kernel = kernel
        self.sigma = sigma
        self.normalized = normalized
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y):
        X, y_pm = self._check_fit_data(X, y)
        h = Hyperparams(c1=self.c1, c2=self.c2, kernel=self.kernel, sigma=self.sigma)
        self.model_ = train_tsvm(X, y_pm, h, tol=self.tol, max_iter=self.max_iter)
        return self


class UniversumTwinSVM(_TwinPlaneClassifier):
    """Twin SVM with Universum samples confined to an epsilon band.

    ``fit`` takes the Universum rows as a fit parameter:
    ``fit(X, y, universum=U)`` where U is an (m, n_features) array of
    unlabeled samples belonging to neither class.
    """

    def __init__(self, c1=1.0, c2=1.0, cu=1.0, epsilon=0.0, kernel="linear",
                 sigma=1.0, normalized=False, tol=1e-8, max_iter=10000):
        self.c1 = c1
        self.c2 = c2
        self.cu = cu
        self.epsilon = epsilon
        self.kernel = kernel
        self.sigma = sigma
        self.normalized = normalized
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y, universum=None):
        if universum is None:
            raise DataFormatError(
                "UniversumTwinSVM.fit requires universum=...; use TwinSVM without it"
            )
        X, y_pm = self._check_fit_data(X, y)
        universum = check_array(universum, dtype=np.float64)
        if universum.shape[1] != X.shape[1]:
            raise DataFormatError(
                f"universum has {universum.shape[1]} features, X has {X.shape[1]}"
            )
        h = Hyperparams(c1=self.c1, c2=self.c2, cu=self.cu, epsilon=self.epsilon,
                        kernel=self.kernel, sigma=self.sigma)
        self.model_ = train_utsvm(X, y_pm, universum, h,
                                  tol=self.tol, max_iter=self.max_iter)
        return self


def _with_kernel_radii(bs: BallSet, features, sigma, mode):
    """Replace stored radii by kernel-space radii for balls with members."""
    balls = []
    for b in bs.balls:
        if b.member_indices is None:
            balls.append(b)
            continue
        r = kernel_ball_radius(features[b.member_indices], sigma, mode)
        balls.append(GranularBall(b.center, r, b.label, b.purity, b.member_indices))
    return BallSet(balls, bs.source_name, bs.n_features, bs.config, bs.n_splits)


class GranularBallUniversumTSVM(_TwinPlaneClassifier):
    """Granular-ball twin SVM with Universum balls.

    The training set is covered by purity-qualified balls; ball centers
    and radii replace the raw points in both twin problems. Universum
    balls come either from splitting a labeled Universum sample
    (``universum_method="split"``, pass ``universum=`` and
    ``universum_labels=`` to fit) or from pairwise averages of the class
    balls (``universum_method="average"``, no extra data needed).

    ``kernel_space_radius=True`` recomputes ball radii in the RBF feature
    space instead of reusing the input-space radii.
    """

    def __init__(self, c1=1.0, c2=1.0, cu=1.0, epsilon=0.0, kernel="linear",
                 sigma=1.0, num_min=1, purity=1.0, radius_mode="average",
                 universum_method="split", kernel_space_radius=False,
                 normalized=False, seed=42, tol=1e-8, max_iter=10000):
        self.c1 = c1
        self.c2 = c2
        self.cu = cu
        self.epsilon = epsilon
        self.kernel = kernel
        self.sigma = sigma
        self.num_min = num_min
        self.purity = purity
        self.radius_mode = radius_mode
        self.universum_method = universum_method
        self.kernel_space_radius = kernel_space_radius
        self.normalized = normalized
        self.seed = seed
        self.tol = tol
        self.max_iter = max_iter

    def fit(self, X, y, universum=None, universum_labels=None):
        if self.universum_method not in ("split", "average"):
            raise ValueError(
                f"universum_method must be 'split' or 'average', got {self.universum_method!r}"
            )
        X, y_pm = self._check_fit_data(X, y)
        cfg = BallGenConfig(num_min=self.num_min, purity_threshold=self.purity,
                            radius_mode=self.radius_mode)
        train_data = Dataset("fit", X, y_pm)
        class_balls = generate_balls(train_data, cfg, seed=self.seed)

        univ_balls = None
        univ_data = None
        if self.universum_method == "average":
            univ_balls = universum_balls_average(class_balls)
        elif universum is not None:
            if universum_labels is None:
                raise DataFormatError(
                    "universum_method='split' needs universum_labels to drive purity"
                )
            universum = check_array(universum, dtype=np.float64)
            univ_data = Dataset("fit/universum", universum,
                                np.asarray(universum_labels))
            univ_balls = universum_balls_split(univ_data, cfg, seed=self.seed)

        if self.kernel_space_radius:
            if self.kernel != "rbf":
                raise ValueError("kernel_space_radius requires kernel='rbf'")
            class_balls = _with_kernel_radii(class_balls, X, self.sigma, self.radius_mode)
            if univ_balls is not None and self.universum_method == "average":
                univ_balls = universum_balls_average(class_balls)
            elif univ_balls is not None:
                univ_balls = _with_kernel_radii(univ_balls, univ_data.features,
                                                self.sigma, self.radius_mode)

        self.ball_set_ = class_balls
        self.universum_balls_ = univ_balls
        t = TrainInputs.from_balls(class_balls, univ_balls)
        h = Hyperparams(c1=self.c1, c2=self.c2, cu=self.cu, epsilon=self.epsilon,
                        kernel=self.kernel, sigma=self.sigma)
        self.model_ = train_gbutsvm(t, h, tol=self.tol, max_iter=self.max_iter)
        return self
