"""Driven logistic-map experiments.

A logistic map whose growth rate is modulated by a slow sinusoid produces a
fast time series; SFA on time-delay embeddings of that series should recover
the sinusoid. This module generates the data, builds centered embeddings,
aligns extracted signals to the true force and scores them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

DRIVING_FREQUENCY = 0.0125
#: Relative thresholds used by :func:`constraint_report`.
MEAN_TOL = 1e-6
VARIANCE_TOL = 1e-3
NOT_SLOW_FACTOR = 3.0


def driving_force(t):
    """The slow driving force ``sin(0.0125 t)``."""
    return np.sin(DRIVING_FREQUENCY * np.asarray(t, dtype=np.float64))


@dataclass(frozen=True)
class TimeSeries:
    """Samples at unit spacing plus their integer time index.

    ``values`` is 1-D for a scalar series and (T, m) for vector samples.
    """

    values: np.ndarray
    t: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.values) != len(self.t):
            raise ValueError("values and t must have the same length")

    def __len__(self) -> int:
        return len(self.t)


@dataclass(frozen=True)
class LogisticConfig:
    q: float = 1.2
    length: int = 6000
    w0: float = 0.6
    burn_in: int = 1000
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.1 <= self.q <= 3.9:
            raise ValueError(f"q must lie in [0.1, 3.9], got {self.q}")
        if self.length < 1:
            raise ValueError("length must be positive")
        if not 0.0 < self.w0 < 1.0:
            raise ValueError(f"w0 must lie in (0, 1), got {self.w0}")
        if self.burn_in < 0:
            raise ValueError("burn_in must be non-negative")
        if not self.noise_sigma >= 0:
            raise ValueError("noise_sigma must be non-negative")


def gaussian_noise(sigma: float, size: int, seed: int) -> np.ndarray:
    """Zero-mean normal noise from numpy's PCG64 bit generator (ziggurat sampler)."""
    if sigma == 0:
        return np.zeros(size)
    rng = np.random.Generator(np.random.PCG64(seed))
    return sigma * rng.standard_normal(size)


def logistic_series(config: LogisticConfig,
                    force: Callable[[np.ndarray], np.ndarray] | None = driving_force) -> TimeSeries:
    """Iterate ``w(t+1) = (4 - q + 0.1 gamma(t)) w(t) (1 - w(t))``.

    The burn-in runs with ``t = 0 .. burn_in-1``; the clock then restarts at
    ``t = 0`` for the first retained sample, so the kept series starts at the
    phase of ``sin(0)``. Noise is added to the retained samples afterwards and
    never fed back into the recursion. ``force=None`` switches the drive off.
    """
    q = config.q
    total = config.length
    ts = np.arange(max(config.burn_in, total))
    gamma = np.zeros(ts.size) if force is None else np.asarray(force(ts), dtype=np.float64)
    rate = 4.0 - q + 0.1 * gamma

    w = config.w0
    for t in range(config.burn_in):
        w = rate[t] * w * (1.0 - w)
    out = np.empty(total)
    for t in range(total):
        if not 0.0 < w < 1.0:
            raise RuntimeError(f"logistic map left (0, 1) at t={t} (w={w}); check q and w0")
        out[t] = w
        w = rate[t] * w * (1.0 - w)

    out = out + gaussian_noise(config.noise_sigma, total, config.seed)
    meta = {"q": q, "noise_sigma": config.noise_sigma, "seed": config.seed,
            "w0": config.w0, "burn_in": config.burn_in}
    return TimeSeries(out, np.arange(total), meta)


@dataclass(frozen=True)
class EmbeddingSpec:
    m: int
    tau: int = 1

    def __post_init__(self):
        if self.m < 1 or self.tau < 1:
            raise ValueError(f"embedding needs m >= 1 and tau >= 1, got m={self.m}, tau={self.tau}")

    @property
    def offsets(self) -> np.ndarray:
        # odd m: symmetric; even m: shifted by floor(tau/2) toward the past
        return np.arange(self.m) * self.tau - (self.tau * (self.m - 1)) // 2

    @property
    def span(self) -> int:
        return self.tau * (self.m - 1)


def embed(series, spec: EmbeddingSpec) -> TimeSeries:
    """Time-delay embedding centered at each time index.

    The result has ``T - tau (m-1)`` rows; ``t`` holds the center index of
    each vector.
    """
    if isinstance(series, TimeSeries):
        values, t = np.asarray(series.values, dtype=np.float64), series.t
        meta = dict(series.meta)
    else:
        values = np.asarray(series, dtype=np.float64)
        t, meta = np.arange(values.shape[0]), {}
    if values.ndim != 1:
        raise ValueError("embedding expects a scalar series")
    need = spec.span + 1
    if values.size < need:
        raise ValueError(f"series of length {values.size} is too short; need at least {need} samples")
    offsets = spec.offsets
    first = -offsets[0]
    count = values.size - spec.span
    centers = np.arange(first, first + count)
    vectors = values[centers[:, None] + offsets[None, :]]
    meta.update({"m": spec.m, "tau": spec.tau})
    return TimeSeries(vectors, np.asarray(t)[centers], meta)


@dataclass(frozen=True)
class Alignment:
    a: float
    b: float
    aligned: np.ndarray
    mse: float


def align(force, y) -> Alignment:
    """Least-squares affine fit ``a * force + b`` of the force to ``y``."""
    g = np.asarray(force, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if g.size != y.size or g.size < 2:
        raise ValueError("force and y need equal lengths of at least 2")
    gc = g - g.mean()
    var = np.mean(gc * gc)
    if not var > 0:
        raise ValueError("force has zero variance; alignment is undefined")
    a = np.mean(gc * (y - y.mean())) / var
    b = y.mean() - a * g.mean()
    aligned = a * g + b
    return Alignment(float(a), float(b), aligned, float(np.mean((aligned - y) ** 2)))


def slowness_eta(y) -> float:
    """Slowness indicator ``(T / 2 pi) sqrt(<ydot^2> / <y^2>)``.

    ``y`` is mean-removed first and derivatives are first differences, so a
    pure sinusoid scores roughly its number of periods in the window.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    if y.size < 2:
        raise ValueError("need at least 2 samples")
    yc = y - y.mean()
    var = np.mean(yc * yc)
    if not var > 0:
        raise ValueError("signal has zero variance")
    return float(y.size / (2 * np.pi) * np.sqrt(np.mean(np.diff(yc) ** 2) / var))


@dataclass(frozen=True)
class SlownessReport:
    """Constraint and slowness summary for extracted signals.

    ``variance`` is the second moment ``<y_j^2>`` (the unit-variance
    constraint), not the mean-removed variance.
    """

    mean: np.ndarray
    variance: np.ndarray
    eta: np.ndarray
    decorrelation: np.ndarray
    mean_violation: np.ndarray
    variance_violation: np.ndarray
    not_slow: bool
    eta_reference: float | None = None

    @property
    def flags(self) -> set[str]:
        out = set()
        if self.mean_violation.any():
            out.add("mean_violation")
        if self.variance_violation.any():
            out.add("variance_violation")
        if self.not_slow:
            out.add("not_slow")
        return out


def constraint_report(y, force=None) -> SlownessReport:
    """Check the output constraints of ``y`` and measure its slowness.

    ``y`` is (T, k) with the slowest signal first. Violations are reported,
    never raised.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.ndim == 1:
        y = y[:, None]
    if y.shape[0] < 2 or y.shape[1] < 1:
        raise ValueError("need at least 2 samples of at least 1 component")
    mean = y.mean(axis=0)
    second = np.mean(y * y, axis=0)
    decor = y.T @ y / y.shape[0]
    eta = np.array([slowness_eta(col) if np.var(col) > 0 else np.inf for col in y.T])
    eta_ref = None
    not_slow = False
    if force is not None:
        eta_ref = slowness_eta(force)
        not_slow = bool(eta[0] > NOT_SLOW_FACTOR * eta_ref)
    return SlownessReport(
        mean=mean,
        variance=second,
        eta=eta,
        decorrelation=(decor + decor.T) / 2,
        mean_violation=np.abs(mean) > MEAN_TOL,
        variance_violation=np.abs(second - 1.0) > VARIANCE_TOL,
        not_slow=not_slow,
        eta_reference=eta_ref,
    )
