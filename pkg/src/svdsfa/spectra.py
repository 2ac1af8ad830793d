"""Dense symmetric spectral routines and SVD-style sphering.

Everything here works on small dense matrices (order up to a few hundred),
so plain LAPACK through numpy is used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: Default close-to-zero cutoff, relative to the largest eigenvalue.
DEFAULT_EPSILON = 1e-7
#: Eigenvalue floor used when sphering with "floor" semantics (2**-53).
UNIT_ROUNDOFF = float(np.finfo(np.float64).eps) / 2

ORTHONORMALITY_TOL = 1e-10
RESIDUAL_TOL = 1e-9
PSD_CLAMP_TOL = 1e-12
SPHERING_TOL = 1e-8


class DegenerateCovarianceError(ValueError):
    """Raised when a covariance matrix has no eigenvalue above the cutoff."""


class SpectralError(RuntimeError):
    """Raised when an eigensolver fails to converge."""


def as_symmetric(a, role: str = "matrix") -> np.ndarray:
    """Validate a square finite matrix and return ``(a + a.T) / 2``."""
    a = np.array(a, dtype=np.float64)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValueError(f"{role} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{role} contains non-finite entries")
    return (a + a.T) / 2


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of each column made positive
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs of a symmetric matrix, eigenvalues ascending.

    Column ``k`` of ``eigenvectors`` belongs to ``eigenvalues[k]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __iter__(self):
        yield self.eigenvalues
        yield self.eigenvectors


def sym_eig(a, role: str = "matrix", psd: bool = False) -> EigenDecomposition:
    """Eigendecomposition of a real symmetric matrix.

    Parameters
    ----------
    a : array_like
        Square matrix; symmetrized before solving.
    role : str
        Name used in error messages (e.g. ``"B"``).
    psd : bool
        If True the input is known to be positive semidefinite: eigenvalues
        in ``[-1e-12 |lambda_max|, 0)`` are clamped to zero, and anything more
        negative is rejected.

    Returns
    -------
    EigenDecomposition
        Ascending eigenvalues with unit eigenvectors whose largest-magnitude
        entry is positive.
    """
    a = as_symmetric(a, role)
    try:
        w, v = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise SpectralError(f"eigendecomposition of {role} did not converge") from exc
    v = _fix_signs(v)
    if psd:
        scale = max(float(np.max(np.abs(w))), 0.0)
        negative = w < 0
        if np.any(w < -PSD_CLAMP_TOL * scale):
            raise ValueError(
                f"{role} is not positive semidefinite "
                f"(min eigenvalue {w.min():.3e}, max {w.max():.3e})"
            )
        w = np.where(negative, 0.0, w)
    return EigenDecomposition(w, v)


@dataclass(frozen=True)
class SpheringTransform:
    """Compact P x M sphering matrix for a covariance ``B``.

    Rows are ``r_k / sqrt(lambda_k)`` for the kept eigenvectors, in order of
    descending eigenvalue. ``kept_indices`` and ``dropped_indices`` index into
    ``spectrum`` (the descending eigenvalues of ``B``).
    """

    s_matrix: np.ndarray
    kept_indices: np.ndarray
    dropped_indices: np.ndarray
    spectrum: np.ndarray
    epsilon: float
    mean: np.ndarray
    floored: bool = field(default=False)

    @property
    def n_kept(self) -> int:
        return int(self.s_matrix.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.s_matrix.shape[1])

    def transform(self, v) -> np.ndarray:
        """Return ``S (v - mean)`` for one vector or a batch of row vectors."""
        v = np.asarray(v, dtype=np.float64)
        return (v - self.mean) @ self.s_matrix.T


def sphering_transform(b, mean=None, epsilon: float = DEFAULT_EPSILON,
                       *, floor: bool = False, role: str = "B") -> SpheringTransform:
    """Build the sphering matrix ``S`` with ``S B S^T = 1``.

    Eigenvalues with ``lambda / lambda_max <= epsilon`` are close to zero.
    By default their rows are removed, giving a P x M matrix. With
    ``floor=True`` every direction is kept and those eigenvalues are raised to
    ``epsilon * lambda_max`` instead; the identity then only holds on the
    rows above the floor.
    """
    if not 0.0 < epsilon < 1.0:
        raise ValueError(f"epsilon must lie in (0, 1), got {epsilon}")
    eig = sym_eig(b, role=role, psd=True)
    order = np.argsort(-eig.eigenvalues, kind="stable")
    spectrum = eig.eigenvalues[order]
    vectors = eig.eigenvectors[:, order]
    lam_max = spectrum[0]
    if not lam_max > 0:
        raise DegenerateCovarianceError(f"degenerate covariance: largest eigenvalue of {role} is {lam_max}")
    above = spectrum / lam_max > epsilon
    if floor:
        kept = np.arange(spectrum.size)
        dropped = np.flatnonzero(~above)
        scales = np.maximum(spectrum, epsilon * lam_max)
    else:
        kept = np.flatnonzero(above)
        dropped = np.flatnonzero(~above)
        scales = spectrum[kept]
    if kept.size == 0:
        raise DegenerateCovarianceError(f"degenerate covariance: no eigenvalue of {role} above cutoff {epsilon}")
    s_matrix = (vectors[:, kept] / np.sqrt(scales)).T
    dim = spectrum.size
    mean = np.zeros(dim) if mean is None else np.asarray(mean, dtype=np.float64).reshape(dim)
    return SpheringTransform(s_matrix, kept, dropped, spectrum, float(epsilon), mean, floor)


def numerical_rank(b, epsilon: float | None = DEFAULT_EPSILON) -> int:
    """Number of eigenvalues of ``b`` with ``lambda / lambda_max > epsilon``.

    ``epsilon=None`` selects the usual machine-precision rank instead:
    singular values above ``M * spacing(sigma_max)``.
    """
    if epsilon is None:
        a = as_symmetric(b, "B")
        sv = np.abs(np.linalg.eigvalsh(a))
        if not sv.max() > 0:
            raise DegenerateCovarianceError("degenerate covariance: B is the zero matrix")
        return int(np.count_nonzero(sv > a.shape[0] * np.spacing(sv.max())))
    return sphering_transform(b, epsilon=epsilon).n_kept


@dataclass(frozen=True)
class Moments:
    mean: np.ndarray
    b: np.ndarray
    c_prime: np.ndarray
    count: int
    diff_count: int

    def __iter__(self):
        yield self.mean
        yield self.b
        yield self.c_prime
        yield self.count


class MomentAccumulator:
    """Streaming first and second moments of a signal and of its differences.

    Each chunk contributes its samples to the covariance and its internal
    first differences to the derivative moment; no difference is formed
    across chunk boundaries. Sums are taken about a fixed shift (the mean of
    the first chunk), which keeps ``<vv^T> - v0 v0^T`` from cancelling badly
    when the mean is large.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError("dimension must be positive")
        self.dim = int(dim)
        self.count = 0
        self.diff_count = 0
        self.shift: np.ndarray | None = None
        self._sum = np.zeros(self.dim)
        self._outer = np.zeros((self.dim, self.dim))
        self._diff_outer = np.zeros((self.dim, self.dim))

    def update(self, chunk) -> "MomentAccumulator":
        chunk = np.asarray(chunk, dtype=np.float64)
        if chunk.ndim == 1 and self.dim == 1:
            chunk = chunk[:, None]
        if chunk.ndim != 2 or chunk.shape[1] != self.dim:
            raise ValueError(f"chunk must have shape (K, {self.dim}), got {chunk.shape}")
        if chunk.shape[0] < 2:
            raise ValueError("chunk needs at least 2 samples to form a derivative")
        if self.shift is None:
            self.shift = chunk.mean(axis=0)
        centered = chunk - self.shift
        self._sum += centered.sum(axis=0)
        self._outer += centered.T @ centered
        diff = np.diff(chunk, axis=0)
        self._diff_outer += diff.T @ diff
        self.count += chunk.shape[0]
        self.diff_count += diff.shape[0]
        return self

    def merge(self, other: "MomentAccumulator") -> "MomentAccumulator":
        """Combine two independent accumulators into a new one."""
        if other.dim != self.dim:
            raise ValueError("cannot merge accumulators of different dimension")
        out = MomentAccumulator(self.dim)
        parts = [acc for acc in (self, other) if acc.count]
        if not parts:
            return out
        out.shift = parts[0].shift.copy()
        for acc in parts:
            # move acc's sums from its shift to out.shift
            delta = acc.shift - out.shift
            out._outer += (acc._outer + np.outer(acc._sum, delta) + np.outer(delta, acc._sum)
                           + acc.count * np.outer(delta, delta))
            out._sum += acc._sum + acc.count * delta
            out._diff_outer += acc._diff_outer
            out.count += acc.count
            out.diff_count += acc.diff_count
        return out

    def finalize(self) -> Moments:
        if self.count < 2 or self.diff_count < 1:
            raise ValueError(f"insufficient samples: count={self.count}, derivative pairs={self.diff_count}")
        offset = self._sum / self.count
        mean = self.shift + offset
        b = self._outer / self.count - np.outer(offset, offset)
        c_prime = self._diff_outer / self.diff_count
        return Moments(mean, (b + b.T) / 2, (c_prime + c_prime.T) / 2, self.count, self.diff_count)
