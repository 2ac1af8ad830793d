"""Slow feature analysis with quadratic expansion.

Two training routes share the preprocessing, the expansion and the moment
accumulation:

* :func:`train_svd_sfa` spheres the expanded signal with an eigenvalue cutoff
  and solves an ordinary symmetric eigenproblem. It copes with a singular
  expanded covariance.
* :func:`train_gen_eig` solves the generalized problem ``C' w = lambda B w``
  directly and is only reliable when ``B`` has full rank.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .spectra import (
    DEFAULT_EPSILON,
    UNIT_ROUNDOFF,
    DegenerateCovarianceError,
    MomentAccumulator,
    as_symmetric,
    numerical_rank,
    sphering_transform,
    sym_eig,
)

SVD_SFA = "SVD_SFA"
GEN_EIG = "GEN_EIG"
METHODS = (SVD_SFA, GEN_EIG)
PREPROCESS_MODES = ("sphere", "normalize", "none")

#: Eigenvalues of C in [-LAMBDA_CLAMP, 0) are roundoff and reported as 0.
LAMBDA_CLAMP = 1e-10


@dataclass(frozen=True)
class Preprocessor:
    """Affine input map ``x = W0 (s - s0)``."""

    w0: np.ndarray
    s0: np.ndarray
    mode: str = "sphere"

    @property
    def input_dim(self) -> int:
        return int(self.w0.shape[1])

    @property
    def output_dim(self) -> int:
        return int(self.w0.shape[0])

    def transform(self, series) -> np.ndarray:
        s = _as_samples(series, self.input_dim)
        return (s - self.s0) @ self.w0.T


def _as_samples(series, dim: int | None = None) -> np.ndarray:
    s = np.asarray(series, dtype=np.float64)
    if s.ndim == 1:
        s = s[:, None] if dim in (None, 1) else s[None, :]
    if s.ndim != 2:
        raise ValueError(f"expected a sequence of vectors, got array of shape {s.shape}")
    if dim is not None and s.shape[1] != dim:
        raise ValueError(f"input dimension {s.shape[1]} does not match expected {dim}")
    return s


def preprocessor_from_moments(mean, cov, mode: str = "sphere", n: int | None = None,
                              floor: float = UNIT_ROUNDOFF) -> Preprocessor:
    """Build a :class:`Preprocessor` from the input mean and covariance.

    In ``sphere`` mode the rows of ``W0`` are ``r_k / sqrt(lambda_k)`` for the
    ``n`` largest eigenvalues of the input covariance. Eigenvalues below
    ``floor * lambda_max`` are raised to that floor so that a numerically
    singular covariance can still be sphered to full dimension; ``floor=0``
    disables this and demands ``n`` strictly positive eigenvalues.
    """
    if mode not in PREPROCESS_MODES:
        raise ValueError(f"unknown preprocessing mode {mode!r}")
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    cov = as_symmetric(cov, "Cov(s)")
    m = mean.size
    n = m if n is None else int(n)
    if not 1 <= n <= m:
        raise ValueError(f"target dimension n={n} must lie in [1, {m}]")
    if mode != "sphere" and n != m:
        raise ValueError(f"mode {mode!r} does not reduce dimension; n must equal m={m}")

    if mode == "none":
        return Preprocessor(np.eye(m), mean, mode)
    if mode == "normalize":
        var = np.diag(cov)
        if np.any(var <= 0):
            bad = np.flatnonzero(var <= 0).tolist()
            raise DegenerateCovarianceError(f"zero-variance input component(s) {bad} cannot be normalized")
        return Preprocessor(np.diag(1.0 / np.sqrt(var)), mean, mode)

    if floor > 0:
        sph = sphering_transform(cov, mean, epsilon=floor, floor=True, role="Cov(s)")
    else:
        eig = sym_eig(cov, role="Cov(s)", psd=True)
        achievable = int(np.count_nonzero(eig.eigenvalues > 0))
        if achievable < n:
            raise DegenerateCovarianceError(
                f"Cov(s) has only {achievable} positive eigenvalues; n={n} is not achievable "
                f"(use n <= {achievable})"
            )
        sph = sphering_transform(cov, mean, epsilon=float(np.finfo(float).tiny), role="Cov(s)")
    return Preprocessor(sph.s_matrix[:n].copy(), mean, mode)


def fit_preprocessor(series, mode: str = "sphere", n: int | None = None,
                     floor: float = UNIT_ROUNDOFF) -> Preprocessor:
    """Fit the input preprocessing on a full training series.

    Examples
    --------
    >>> p = fit_preprocessor([[0.0], [2.0]], mode="normalize")
    >>> p.transform([[0.0], [2.0]]).ravel().tolist()
    [-1.0, 1.0]
    """
    s = _as_samples(series)
    if s.shape[0] < 2:
        raise ValueError("need at least 2 samples to fit the preprocessor")
    mean = s.mean(axis=0)
    centered = s - mean
    cov = centered.T @ centered / s.shape[0]
    return preprocessor_from_moments(mean, cov, mode, n, floor)


def expansion_dim(n: int) -> int:
    """Size ``n + n(n+1)/2`` of the degree-1-and-2 monomial expansion."""
    if n < 1:
        raise ValueError("n must be positive")
    return n + n * (n + 1) // 2


def expand(x) -> np.ndarray:
    """All monomials of degree 1 and 2.

    The linear terms come first, followed by ``x_i * x_j`` for ``i <= j`` in
    lexicographic order. Accepts one vector or a batch of row vectors.
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x2 = np.atleast_2d(x)
    i, j = np.triu_indices(x2.shape[1])
    out = np.hstack([x2, x2[:, i] * x2[:, j]])
    return out[0] if single else out


@dataclass(frozen=True)
class TrainingMoments:
    v0: np.ndarray
    b: np.ndarray
    c_prime: np.ndarray
    count: int

    def __iter__(self):
        yield self.v0
        yield self.b
        yield self.c_prime
        yield self.count


def _chunks(series) -> list[np.ndarray]:
    # a list/tuple/iterator of ndarrays is a chunk sequence; anything else is one chunk
    if isinstance(series, np.ndarray):
        return [series]
    if not isinstance(series, (list, tuple)):
        series = list(series)
    if series and isinstance(series[0], np.ndarray):
        return [np.asarray(c, dtype=np.float64) for c in series]
    return [np.asarray(series, dtype=np.float64)]


def accumulate_training(series, preprocessor: Preprocessor) -> TrainingMoments:
    """Accumulate the expanded moments ``v0``, ``B`` and ``C'`` chunk by chunk.

    ``series`` is one array of samples or an iterable of chunks. Derivative
    pairs never straddle chunk boundaries.
    """
    acc = MomentAccumulator(expansion_dim(preprocessor.output_dim))
    for chunk in _chunks(series):
        acc.update(expand(preprocessor.transform(chunk)))
    moments = acc.finalize()
    return TrainingMoments(moments.mean, moments.b, moments.c_prime, moments.count)


@dataclass(frozen=True)
class SfaModel:
    """Trained SFA weights.

    ``weights`` has shape (P, M); row ``j`` is ``w'_j`` and belongs to
    ``eigenvalues[j]`` (ascending, so row 0 is the slowest direction).
    """

    v0: np.ndarray
    eigenvalues: np.ndarray
    weights: np.ndarray
    method: str
    epsilon: float
    rank_of_b: int
    preprocessor: Preprocessor | None = None
    rank_deficient: bool = False
    unstable: bool = False
    solver: str = ""

    @property
    def expanded_dim(self) -> int:
        return int(self.weights.shape[1])

    @property
    def n_components(self) -> int:
        return int(self.weights.shape[0])

    def project(self, v, k: int | None = None) -> np.ndarray:
        """Outputs ``y_j = w'_j^T (v - v0)`` for expanded samples ``v``."""
        k = self._check_k(k)
        v = np.atleast_2d(np.asarray(v, dtype=np.float64))
        if v.shape[1] != self.expanded_dim:
            raise ValueError(f"expanded dimension {v.shape[1]} does not match model M={self.expanded_dim}")
        return (v - self.v0) @ self.weights[:k].T

    def _check_k(self, k):
        p = self.n_components
        if k is None:
            return p
        if not 1 <= k <= p:
            raise ValueError(f"requested k={k} components but only {p} components available")
        return int(k)


def _clamp_eigenvalues(lam: np.ndarray) -> np.ndarray:
    lam = lam.copy()
    lam[(lam < 0) & (lam >= -LAMBDA_CLAMP)] = 0.0
    return lam


def train_svd_sfa(v0, b, c_prime, epsilon: float = DEFAULT_EPSILON,
                  preprocessor: Preprocessor | None = None) -> SfaModel:
    """Train via sphering of ``B`` followed by a standard eigenproblem.

    ``S`` drops every direction of ``B`` with ``lambda/lambda_max <= epsilon``,
    so the model has ``P = rank(B, epsilon)`` components.
    """
    b = as_symmetric(b, "B")
    c_prime = as_symmetric(c_prime, "C'")
    sph = sphering_transform(b, v0, epsilon)
    s = sph.s_matrix
    c = s @ c_prime @ s.T
    eig = sym_eig(c, role="C")
    weights = (s.T @ eig.eigenvectors).T
    return SfaModel(
        v0=np.asarray(v0, dtype=np.float64).copy(),
        eigenvalues=_clamp_eigenvalues(eig.eigenvalues),
        weights=weights,
        method=SVD_SFA,
        epsilon=float(epsilon),
        rank_of_b=sph.n_kept,
        preprocessor=preprocessor,
        rank_deficient=sph.n_kept < b.shape[0],
        unstable=False,
        solver="svd-sphering",
    )


def train_gen_eig(v0, b, c_prime, epsilon: float = DEFAULT_EPSILON,
                  preprocessor: Preprocessor | None = None) -> SfaModel:
    """Train by solving ``C' w' = lambda B w'`` for all M eigenpairs.

    The symmetric-definite reduction through ``B = L L^T`` is used. If the
    Cholesky factorization fails, ``B`` is whitened through its full
    eigendecomposition with ``1/sqrt(|lambda|)`` and no cutoff, which is the
    naive path that breaks on rank-deficient data; such models are flagged
    ``unstable``. ``epsilon`` only sets the rank diagnostic.
    """
    b = as_symmetric(b, "B")
    c_prime = as_symmetric(c_prime, "C'")
    dim = b.shape[0]
    unstable = False
    try:
        lower = np.linalg.cholesky(b)
        if not np.all(np.isfinite(lower)):
            raise np.linalg.LinAlgError("non-finite Cholesky factor")
        inv_l = scipy.linalg.solve_triangular(lower, np.eye(dim), lower=True)
        eig = sym_eig(inv_l @ c_prime @ inv_l.T, role="L^-1 C' L^-T")
        weights = scipy.linalg.solve_triangular(lower.T, eig.eigenvectors, lower=False)
        solver = "cholesky"
    except np.linalg.LinAlgError:
        lam_b, r = sym_eig(b, role="B")
        scale = np.abs(lam_b)
        scale[scale == 0] = np.finfo(float).tiny
        whiten = r / np.sqrt(scale)
        eig = sym_eig(whiten.T @ c_prime @ whiten, role="whitened C'")
        weights = whiten @ eig.eigenvectors
        solver = "eigh-fallback"
        unstable = True

    # unit variance w'^T B w' = 1, then sign: largest-magnitude entry positive
    norms = np.einsum("ij,ik,kj->j", weights, b, weights)
    good = np.isfinite(norms) & (np.abs(norms) > 0)
    weights[:, good] = weights[:, good] / np.sqrt(np.abs(norms[good]))
    idx = np.argmax(np.abs(weights), axis=0)
    signs = np.sign(weights[idx, np.arange(dim)])
    signs[signs == 0] = 1.0
    weights = weights * signs

    lam = _clamp_eigenvalues(eig.eigenvalues)
    if np.any(lam < 0) or not np.all(np.isfinite(weights)):
        unstable = True
    try:
        rank = numerical_rank(b, epsilon)
    except DegenerateCovarianceError:
        rank = 0
    return SfaModel(
        v0=np.asarray(v0, dtype=np.float64).copy(),
        eigenvalues=lam,
        weights=weights.T.copy(),
        method=GEN_EIG,
        epsilon=float(epsilon),
        rank_of_b=rank,
        preprocessor=preprocessor,
        rank_deficient=rank < dim,
        unstable=unstable,
        solver=solver,
    )


def train(series, method: str = SVD_SFA, epsilon: float = DEFAULT_EPSILON,
          mode: str = "sphere", n: int | None = None,
          floor: float = UNIT_ROUNDOFF) -> SfaModel:
    """Fit preprocessing and train in two passes over ``series``.

    ``series`` is an array of m-vectors or a re-iterable sequence of chunks.
    """
    method = _method_name(method)
    chunks = _chunks(series)
    first = _as_samples(chunks[0])
    acc = MomentAccumulator(first.shape[1])
    for chunk in chunks:
        acc.update(_as_samples(chunk, first.shape[1]))
    raw = acc.finalize()
    pre = preprocessor_from_moments(raw.mean, raw.b, mode, n, floor)
    moments = accumulate_training(chunks, pre)
    solve = train_svd_sfa if method == SVD_SFA else train_gen_eig
    return solve(moments.v0, moments.b, moments.c_prime, epsilon, preprocessor=pre)


def _method_name(method: str) -> str:
    key = method.upper().replace("-", "_")
    aliases = {"SVD": SVD_SFA, "SVD_SFA": SVD_SFA, "GEN": GEN_EIG, "GEN_EIG": GEN_EIG}
    if key not in aliases:
        raise ValueError(f"unknown method {method!r}; expected one of gen, svd")
    return aliases[key]


def apply_model(model: SfaModel, series, k: int | None = None) -> np.ndarray:
    """Slow signals ``y_1..y_k`` (columns, slowest first) for a raw series."""
    if model.preprocessor is None:
        raise ValueError("model has no preprocessor; use SfaModel.project on expanded data")
    k = model._check_k(k)
    x = model.preprocessor.transform(series)
    return model.project(expand(x), k)


__all__ = [
    "GEN_EIG",
    "SVD_SFA",
    "Preprocessor",
    "SfaModel",
    "TrainingMoments",
    "accumulate_training",
    "apply_model",
    "expand",
    "expansion_dim",
    "fit_preprocessor",
    "preprocessor_from_moments",
    "train",
    "train_gen_eig",
    "train_svd_sfa",
]
