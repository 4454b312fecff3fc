"""Approximate entropy of scalar series.

apen reports ApEn(m, r, N) = Phi^m - Phi^(m+1) in bits, where Phi^m averages
the log2 frequency of blocks staying within Chebyshev distance r of each
block. Self-matches are counted, so every frequency is at least 1/(N-m+1)
and the result is always finite. ApEn(0, r, N) is defined as -Phi^1.

apen_conditional reports the correlation-integral variant in nats: the log
of the AVERAGE match frequency at block length m minus the same at m+1,
i.e. -ln of the aggregate probability that blocks close for m steps stay
close one step later. Same match counts, different aggregation; the two
forms agree only asymptotically on iid data.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import quad

DEFAULT_M = 1
DEFAULT_R_FRACTION = 0.2
DEFAULT_WINDOW = 60

# Elements per tile in the pairwise distance pass; bounds peak memory.
_TILE_ELEMS = 1 << 22


@dataclass(frozen=True)
class Absolute:
    """Tolerance r given directly in the units of the series."""


@dataclass(frozen=True)
class FractionOfSd:
    """Tolerance r derived as fraction * sample sd of the window."""

    fraction: float

    def __post_init__(self):
        if self.fraction <= 0.0:
            raise ValueError("fraction must be positive")


RSource = Union[Absolute, FractionOfSd]


@dataclass(frozen=True)
class ApEnParams:
    """Block length m, tolerance r, and window length n of one estimate.

    r == 0.0 appears only in rolling results for zero-variance windows,
    where the output is pinned to 0 bits; apen itself requires r > 0.
    """

    m: int
    r: float
    n: int

    def __post_init__(self):
        if self.m < 0:
            raise ValueError("m must be nonnegative")
        if self.m >= self.n:
            raise ValueError("m must be smaller than the window length")
        if self.r < 0.0 or not np.isfinite(self.r):
            raise ValueError("r must be finite and nonnegative")


@dataclass(frozen=True)
class ApEnResult:
    """ApEn value in bits plus the parameters that produced it.

    Bootstrap fields hold block-resampling statistics when that step was
    run; they are present together or absent together. bootstrap_stderr is
    the sample standard deviation of the replicate values.
    """

    bits: float
    params: ApEnParams
    r_source: RSource
    bootstrap_mean: Optional[float] = None
    bootstrap_stderr: Optional[float] = None

    def __post_init__(self):
        if not np.isfinite(self.bits) or self.bits < 0.0:
            raise ValueError("bits must be finite and nonnegative")
        if (self.bootstrap_mean is None) != (self.bootstrap_stderr is None):
            raise ValueError("bootstrap fields must be set together")


def _match_counts(u: np.ndarray, m: int, r: float) -> np.ndarray:
    """Number of length-m blocks within Chebyshev distance r of each block.

    Row tiles keep memory bounded; the boolean match matrix is built one
    coordinate shift at a time, so cost is O(m * K^2 / tile) per pass.
    """
    k = u.size - m + 1
    counts = np.empty(k, dtype=np.int64)
    rows = max(1, min(k, _TILE_ELEMS // k))
    for start in range(0, k, rows):
        stop = min(start + rows, k)
        within = np.abs(u[start:stop, None] - u[None, :k]) <= r
        for shift in range(1, m):
            within &= np.abs(u[start + shift:stop + shift, None] - u[None, shift:shift + k]) <= r
        counts[start:stop] = within.sum(axis=1)
    return counts


def _single_counts(u: np.ndarray, r: float) -> np.ndarray:
    """Match counts for length-1 blocks via sorted range queries, O(N log N)."""
    mirror = np.sort(u)
    lo = np.searchsorted(mirror, u - r, side="left")
    hi = np.searchsorted(mirror, u + r, side="right")
    return hi - lo


def _phi(counts: np.ndarray) -> float:
    k = counts.size
    return float(np.mean(np.log2(counts)) - np.log2(k))


def apen(u: Sequence[float], m: int, r: float) -> ApEnResult:
    """ApEn(m, r, N) of a scalar series, self-matches included.

    A match means Chebyshev block distance <= r. The raw difference
    Phi^m - Phi^(m+1) can land a hair below zero on near-deterministic
    series because the two averages run over block ranges that differ by
    one; such edge artifacts are clipped to 0.
    """
    x = np.asarray(u, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if r <= 0.0 or not np.isfinite(r):
        raise ValueError("r must be positive")
    if m < 0:
        raise ValueError("m must be nonnegative")
    if x.size < m + 2:
        raise ValueError("series too short: need at least m + 2 observations")

    if m == 0:
        bits = -_phi(_single_counts(x, r))
    else:
        c_m = _single_counts(x, r) if m == 1 else _match_counts(x, m, r)
        bits = _phi(c_m) - _phi(_match_counts(x, m + 1, r))
    return ApEnResult(
        bits=max(0.0, bits),
        params=ApEnParams(m=m, r=float(r), n=int(x.size)),
        r_source=Absolute(),
    )


def apen_rolling(
    series: Sequence[float], window: int, m: int = DEFAULT_M,
    r_fraction: float = DEFAULT_R_FRACTION,
) -> List[ApEnResult]:
    """ApEn over every length-`window` slice, one result per end index.

    The tolerance is recomputed per window as r_fraction * sample sd of
    that window, making the measure invariant to scaling and translation
    of the series. A zero-variance window is perfectly regular and scores
    0 bits by definition.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if window > x.size:
        raise ValueError("window exceeds series length")
    if window < m + 2:
        raise ValueError("window too short: need at least m + 2 observations")
    if r_fraction <= 0.0:
        raise ValueError("r_fraction must be positive")

    source = FractionOfSd(fraction=float(r_fraction))
    out: List[ApEnResult] = []
    for end in range(window, x.size + 1):
        w = x[end - window:end]
        sd = float(w.std(ddof=1))
        if sd == 0.0:
            out.append(ApEnResult(
                bits=0.0,
                params=ApEnParams(m=m, r=0.0, n=window),
                r_source=source,
            ))
            continue
        base = apen(w, m, r_fraction * sd)
        out.append(ApEnResult(bits=base.bits, params=base.params, r_source=source))
    return out


def _phi_log_mean(counts: np.ndarray) -> float:
    k = counts.size
    return float(np.log(counts.mean() / k))


def apen_conditional(u: Sequence[float], m: int, r: float) -> float:
    """Correlation-integral form of ApEn(m, r, N), in nats.

    Aggregates match frequencies before taking logs: the value is
    ln(mean C^m) - ln(mean C^(m+1)), the negative log of the pooled
    conditional probability that two blocks within r over m coordinates
    stay within r at the next one. Self-matches are included. Requires
    m >= 1; tiny negative edge artifacts are clipped to 0 as in apen.
    """
    x = np.asarray(u, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if r <= 0.0 or not np.isfinite(r):
        raise ValueError("r must be positive")
    if m < 1:
        raise ValueError("m must be at least 1")
    if x.size < m + 2:
        raise ValueError("series too short: need at least m + 2 observations")

    c_m = _single_counts(x, r) if m == 1 else _match_counts(x, m, r)
    value = _phi_log_mean(c_m) - _phi_log_mean(_match_counts(x, m + 1, r))
    return max(0.0, value)


def apen_conditional_rolling(
    series: Sequence[float], window: int, m: int = DEFAULT_M,
    r_fraction: float = DEFAULT_R_FRACTION,
) -> np.ndarray:
    """apen_conditional over every length-`window` slice, in nats.

    Mirrors apen_rolling: the tolerance is r_fraction * sample sd of each
    window, and a zero-variance window scores 0. Returns one value per
    window end index.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if window > x.size:
        raise ValueError("window exceeds series length")
    if window < m + 2:
        raise ValueError("window too short: need at least m + 2 observations")
    if r_fraction <= 0.0:
        raise ValueError("r_fraction must be positive")

    out = np.empty(x.size - window + 1)
    for end in range(window, x.size + 1):
        w = x[end - window:end]
        sd = float(w.std(ddof=1))
        if sd == 0.0:
            out[end - window] = 0.0
        else:
            out[end - window] = apen_conditional(w, m, r_fraction * sd)
    return out


def apen_iid_analytic(
    density: Callable[[float], float], r: float, support: Tuple[float, float],
) -> float:
    """Large-N ApEn limit for an iid process with the given density.

    Evaluates -integral of f(y) * log2(integral of f over [y-r, y+r]) dy by
    adaptive quadrature, splitting the outer integral at the kinks a+r and
    b-r where the inner window starts clipping against the support.
    """
    a, b = float(support[0]), float(support[1])
    if not a < b:
        raise ValueError("support bounds must satisfy a < b")
    if r <= 0.0:
        raise ValueError("r must be positive")
    total, _ = quad(density, a, b, limit=200)
    if abs(total - 1.0) > 1e-6:
        raise ValueError("density must integrate to 1 over the support")

    def integrand(y: float) -> float:
        mass, _ = quad(density, max(a, y - r), min(b, y + r), limit=100)
        if mass <= 0.0:
            return 0.0
        return density(y) * np.log2(mass)

    kinks = [p for p in (a + r, b - r) if a < p < b]
    value, _ = quad(integrand, a, b, points=sorted(set(kinks)) or None,
                    limit=400, epsabs=1e-9, epsrel=1e-9)
    # the integrand is <= 0 pointwise; clip quadrature noise (and -0.0)
    return max(0.0, -float(value))


def apen_block_bootstrap(
    series: Sequence[float], params: ApEnParams, block_len: int,
    n_boot: int, seed: int = 0,
) -> Tuple[float, float]:
    """Block-bootstrap mean and stderr of ApEn at fixed (m, r).

    Each replicate pastes contiguous blocks drawn with replacement until
    the original length is reached, then recomputes apen with the absolute
    tolerance from params. Replicate k draws from stream (seed, k), so
    results do not depend on evaluation order. The stderr is the sample
    standard deviation of the replicate values.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim != 1:
        raise ValueError("series must be one-dimensional")
    if params.n != x.size:
        raise ValueError("params.n must equal the series length")
    if block_len < 2:
        raise ValueError("block_len must be at least 2")
    if block_len > x.size:
        raise ValueError("block_len exceeds series length")
    if n_boot < 50:
        raise ValueError("n_boot must be at least 50")

    n = x.size
    n_blocks = -(-n // block_len)
    values = np.empty(n_boot)
    for k in range(n_boot):
        rng = np.random.default_rng([seed, k])
        starts = rng.integers(0, n - block_len + 1, size=n_blocks)
        pieces = [x[s:s + block_len] for s in starts]
        resampled = np.concatenate(pieces)[:n]
        values[k] = apen(resampled, params.m, params.r).bits
    return float(values.mean()), float(values.std(ddof=1))
