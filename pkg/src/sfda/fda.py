"""Regularized Fisher discriminant analysis with an adaptive shrinkage strength.

The within-class scatter is shrunk towards the identity,
``(1 - lam) * S_W + lam * I``, with ``lam = exp(-a * sigma(S_W))`` where
``sigma`` is the largest eigenvalue of ``S_W``.  Class posteriors come from
the linear Gaussian discriminant in the projected space (unit covariance,
empirical class priors).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyClass
from .linalg import (
    generalized_symmetric_eig,
    log_softmax,
    power_iteration_largest,
    scatter_matrices,
    softmax,
)

LAMBDA_VARIANTS = ("main_text", "algorithm1")
DEGENERATE_EIGENVALUE = 1e-12


class DegenerateProjection(UserWarning):
    """No between-class signal: every generalized eigenvalue is ~0."""


def _readonly(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class FeatureSet:
    """Features extracted by one model on the target dataset.

    ``features`` is promoted to float64 and ``labels`` to int64; both arrays
    are made read-only.
    """

    model_id: str
    features: np.ndarray
    labels: np.ndarray
    num_classes: int

    def __post_init__(self):
        X = np.array(self.features, dtype=np.float64)
        y = np.array(self.labels)
        if X.ndim != 2:
            raise DimensionMismatch(f"features must be N x D, got shape {X.shape}")
        n, d = X.shape
        if d < 1:
            raise DimensionMismatch("feature dimension must be >= 1")
        if y.ndim != 1 or y.shape[0] != n:
            raise DimensionMismatch(f"{y.shape[0] if y.ndim else 0} labels for {n} samples")
        if y.size and not np.issubdtype(y.dtype, np.integer):
            if not np.all(np.mod(y, 1) == 0):
                raise DimensionMismatch("labels must be integer class ids")
        y = y.astype(np.int64)
        c = int(self.num_classes)
        if c < 2:
            raise EmptyClass("need at least 2 classes")
        if n < c:
            raise EmptyClass(f"N={n} is smaller than the number of classes {c}")
        if y.min() < 0 or y.max() >= c:
            raise EmptyClass(f"labels must lie in [0, {c})")
        counts = np.bincount(y, minlength=c)
        if np.any(counts == 0):
            raise EmptyClass(f"classes without samples: {np.flatnonzero(counts == 0).tolist()}")
        if not np.all(np.isfinite(X)):
            raise DimensionMismatch("features contain NaN or Inf")
        object.__setattr__(self, "features", _readonly(X))
        object.__setattr__(self, "labels", _readonly(y))
        object.__setattr__(self, "num_classes", c)

    @property
    def n_samples(self):
        return self.features.shape[0]

    @property
    def dim(self):
        return self.features.shape[1]

    def with_features(self, features):
        return FeatureSet(self.model_id, features, self.labels, self.num_classes)


def standardize(fs):
    """Per-dimension z-scoring; constant dimensions are only centered."""
    X = fs.features
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return fs.with_features((X - X.mean(axis=0)) / scale)


@dataclass(frozen=True, eq=False)
class FdaModel:
    projection: np.ndarray  # D x D'
    projected_class_means: np.ndarray  # C x D'
    class_priors: np.ndarray
    lam: float
    a: float
    sigma_w: float
    eigenvalues: np.ndarray
    lambda_variant: str = "main_text"
    sigma_b: float | None = None
    degenerate: bool = False
    class_means: np.ndarray = field(default=None, repr=False)

    @property
    def dim(self):
        return self.projection.shape[0]

    @property
    def n_components(self):
        return self.projection.shape[1]

    @property
    def num_classes(self):
        return self.class_priors.shape[0]


def adaptive_lambda(S_W, a=4.0, steps=3):
    """Shrinkage strength ``exp(-a * sigma(S_W))`` and the eigenvalue estimate.

    ``sigma`` is obtained with :func:`power_iteration_largest`, so the value is
    the 3-step estimate by default rather than the exact eigenvalue.
    """
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    sigma_w = power_iteration_largest(S_W, steps)
    return math.exp(-a * sigma_w), sigma_w


def sigmoid_lambda(S_B, a=4.0, steps=3):
    """Alternative shrinkage ``1 / (1 + exp(-a * sigma(S_B)))``.

    Kept for comparison runs; it grows with between-class spread instead of
    shrinking with within-class spread.
    """
    if not a > 0:
        raise ValueError(f"a must be positive, got {a}")
    sigma_b = power_iteration_largest(S_B, steps)
    # exp overflow for very negative arguments is impossible here (sigma_b >= 0)
    return 1.0 / (1.0 + math.exp(-a * sigma_b)), sigma_b


def fit(fs, a=4.0, *, lambda_variant="main_text", power_steps=3):
    """Fit the regularized discriminant on a :class:`FeatureSet`.

    The projection keeps ``min(D, C - 1)`` generalized eigenvectors of
    ``(S_B, (1 - lam) S_W + lam I)``, ordered by descending eigenvalue and
    normalized so that ``u^T S~_W u = 1``.

    Raises
    ------
    NotPositiveDefinite
        If the regularized within-scatter cannot be factorized (``lam``
        underflowed to ~0 on a rank-deficient ``S_W``).
    """
    if lambda_variant not in LAMBDA_VARIANTS:
        raise ValueError(f"lambda_variant must be one of {LAMBDA_VARIANTS}")
    sc = scatter_matrices(fs.features, fs.labels, fs.num_classes)
    d = fs.dim
    c = fs.num_classes

    sigma_b = None
    if lambda_variant == "main_text":
        lam, sigma_w = adaptive_lambda(sc.within, a, power_steps)
    else:
        lam, sigma_b = sigmoid_lambda(sc.between, a, power_steps)
        sigma_w = power_iteration_largest(sc.within, power_steps)

    reg_within = (1.0 - lam) * sc.within
    reg_within[np.diag_indices(d)] += lam
    n_comp = min(d, c - 1)
    eig = generalized_symmetric_eig(sc.between, reg_within, n_comp)

    degenerate = bool(np.all(eig.eigenvalues <= DEGENERATE_EIGENVALUE))
    if degenerate:
        warnings.warn(
            f"model {fs.model_id!r}: no between-class signal in the projection",
            DegenerateProjection,
            stacklevel=2,
        )
    U = eig.eigenvectors
    priors = sc.counts / fs.n_samples
    return FdaModel(
        projection=_readonly(U),
        projected_class_means=_readonly(sc.class_means @ U),
        class_priors=_readonly(priors.astype(np.float64)),
        lam=lam,
        a=float(a),
        sigma_w=sigma_w,
        eigenvalues=_readonly(eig.eigenvalues),
        lambda_variant=lambda_variant,
        sigma_b=sigma_b,
        degenerate=degenerate,
        class_means=_readonly(sc.class_means),
    )


def project(model, features):
    X = np.asarray(features, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.dim:
        raise DimensionMismatch(
            f"features of shape {X.shape} do not match model dimension {model.dim}"
        )
    return X @ model.projection


def class_scores(model, features):
    """Linear discriminant scores, one column per class.

    ``score[n, c] = z_n . m_c - |m_c|^2 / 2 + log q_c`` with ``z_n = U^T x_n``
    and ``m_c = U^T mu_c``.
    """
    Z = project(model, features)
    M = model.projected_class_means
    with np.errstate(divide="ignore"):
        log_prior = np.log(model.class_priors)
    return Z @ M.T - 0.5 * np.einsum("cd,cd->c", M, M) + log_prior


def predict_proba(model, features):
    return softmax(class_scores(model, features), axis=1)


def predict_log_proba(model, features):
    return log_softmax(class_scores(model, features), axis=1)
