"""Dense symmetric linear algebra used by the discriminant and ensemble code.

Everything here works on float64 numpy arrays and is a pure function of its
inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DimensionMismatch, EmptyClass, NotPositiveDefinite

# relative threshold on the smallest Cholesky pivot, scaled by trace(B)/D
PD_RTOL = 1e-12


@dataclass(frozen=True)
class SymEigResult:
    """Eigenpairs sorted by descending eigenvalue.

    ``eigenvectors[:, k]`` pairs with ``eigenvalues[k]``.  Vectors from
    :func:`generalized_symmetric_eig` are B-orthonormal (``u.T @ B @ u == 1``).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class Scatter:
    between: np.ndarray
    within: np.ndarray
    mean: np.ndarray
    class_means: np.ndarray
    counts: np.ndarray


def _as_matrix(a, name="matrix"):
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got shape {a.shape}")
    return a


def scatter_matrices(features, labels, num_classes=None):
    """Between- and within-class scatter of a labelled feature matrix.

    Parameters
    ----------
    features : array_like, shape (N, D)
    labels : array_like of int, shape (N,)
        Class ids in ``[0, num_classes)``.
    num_classes : int, optional
        Defaults to ``labels.max() + 1``.

    Returns
    -------
    Scatter
        ``between = sum_c N_c (mu_c - mu)(mu_c - mu)^T`` and
        ``within = sum_c sum_{n in c} (x_n - mu_c)(x_n - mu_c)^T`` where the
        means are arithmetic means.
    """
    X = _as_matrix(features, "features")
    y = np.asarray(labels)
    n, d = X.shape
    if y.ndim != 1 or y.shape[0] != n:
        raise DimensionMismatch(f"labels length {y.shape} does not match N={n}")
    if n < 2:
        raise DimensionMismatch("need at least 2 samples")
    if not np.issubdtype(y.dtype, np.integer):
        raise DimensionMismatch("labels must be integer class ids")
    if y.size and y.min() < 0:
        raise EmptyClass("negative class id")
    c = int(y.max()) + 1 if num_classes is None else int(num_classes)
    if c < 2:
        raise EmptyClass("need at least 2 classes")
    if y.max() >= c:
        raise EmptyClass(f"class id {int(y.max())} outside [0, {c})")

    counts = np.bincount(y, minlength=c)
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise EmptyClass(f"classes without samples: {empty.tolist()}")

    onehot = np.zeros((c, n))
    onehot[y, np.arange(n)] = 1.0
    class_means = (onehot @ X) / counts[:, None]
    mean = X.mean(axis=0)

    centered = X - class_means[y]
    within = centered.T @ centered
    diff = class_means - mean
    between = (diff.T * counts) @ diff
    # exact symmetry; BLAS may leave last-bit asymmetries
    within = 0.5 * (within + within.T)
    between = 0.5 * (between + between.T)
    return Scatter(between, within, mean, class_means, counts)


def _fix_signs(vectors):
    # largest-magnitude entry of each column made positive
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def generalized_symmetric_eig(A, B, k=None):
    """Top-``k`` solutions of ``A u = v B u`` for symmetric A and SPD B.

    Uses Cholesky whitening ``B = L L^T``: the symmetric problem
    ``L^-1 A L^-T w = v w`` is solved densely and mapped back with
    ``u = L^-T w``.  Columns are sign-fixed so that their largest-magnitude
    entry is positive.

    Raises
    ------
    NotPositiveDefinite
        If the Cholesky factorization fails or its smallest pivot is below
        ``1e-12 * trace(B) / D``.
    """
    A = _as_matrix(A, "A")
    B = _as_matrix(B, "B")
    d = A.shape[0]
    if A.shape != (d, d) or B.shape != (d, d):
        raise DimensionMismatch(f"A {A.shape} and B {B.shape} must be square and equal")
    k = d if k is None else int(k)
    if not 1 <= k <= d:
        raise DimensionMismatch(f"k={k} outside [1, {d}]")

    A = 0.5 * (A + A.T)
    B = 0.5 * (B + B.T)
    try:
        L = scipy.linalg.cholesky(B, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite(f"Cholesky factorization failed: {exc}") from None
    pivots = np.diag(L) ** 2
    tol = PD_RTOL * np.trace(B) / d
    if not np.all(np.isfinite(pivots)) or pivots.min() <= tol:
        raise NotPositiveDefinite(
            f"smallest Cholesky pivot {pivots.min():.3e} <= tolerance {tol:.3e}"
        )

    half = scipy.linalg.solve_triangular(L, A, lower=True, check_finite=False)
    whitened = scipy.linalg.solve_triangular(L, half.T, lower=True, check_finite=False)
    whitened = 0.5 * (whitened + whitened.T)
    vals, vecs = scipy.linalg.eigh(
        whitened, subset_by_index=[d - k, d - 1], check_finite=False
    )
    vals = vals[::-1]
    vecs = vecs[:, ::-1]
    u = scipy.linalg.solve_triangular(L.T, vecs, lower=False, check_finite=False)
    return SymEigResult(vals.copy(), _fix_signs(u))


def power_iteration_largest(S, steps=3):
    """Largest eigenvalue of a symmetric PSD matrix by alternating power steps.

    Starting from ``u_0 = 1``, each step computes ``v = S^T u / |S^T u|`` then
    ``u = S^T v / |S^T v|``; the estimate is ``u^T S v``.  Only matrix-vector
    products are used.  Returns exactly 0.0 when an iterate collapses to zero.
    """
    S = _as_matrix(S, "S")
    if S.shape[0] != S.shape[1]:
        raise DimensionMismatch(f"S must be square, got {S.shape}")
    steps = int(steps)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    St = S.T
    u = np.ones(S.shape[0])
    v = u
    for _ in range(steps):
        v = St @ u
        nv = np.linalg.norm(v)
        if nv == 0.0:
            return 0.0
        v = v / nv
        u = St @ v
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return 0.0
        u = u / nu
    return max(float(u @ S @ v), 0.0)


def nuclear_norm(F):
    """Sum of singular values.

    Accepts a single matrix or a stack ``(..., M, D)``; stacks return one
    norm per trailing matrix.
    """
    F = np.asarray(F, dtype=np.float64)
    if F.ndim < 2:
        raise DimensionMismatch(f"need at least 2-D input, got shape {F.shape}")
    s = np.linalg.svd(F, compute_uv=False)
    out = s.sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def softmax(scores, axis=-1):
    """Softmax with max-subtraction; rows of a 2-D input are normalized independently."""
    z = np.asarray(scores, dtype=np.float64)
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(scores, axis=-1):
    z = np.asarray(scores, dtype=np.float64)
    z = z - z.max(axis=axis, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))
