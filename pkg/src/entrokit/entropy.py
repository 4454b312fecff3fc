"""Discrete entropy estimators and Markov-chain information quantities.

All entropies are reported in bits (log base 2). The 0*log(0) convention is
enforced structurally: histograms never hold zero-count bins.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Hashable, Optional, Sequence

import numpy as np
from scipy.special import digamma

NAIVE = "naive"
GRASSBERGER = "grassberger"

_LN2 = float(np.log(2.0))


@dataclass(frozen=True)
class Histogram:
    """Counts of observed symbols or symbol blocks; zero-count bins are absent."""

    counts: Dict[Hashable, int]
    total: int

    def __post_init__(self):
        if not self.counts:
            raise ValueError("histogram is empty")
        if any(c <= 0 for c in self.counts.values()):
            raise ValueError("histogram counts must be positive")
        if self.total != sum(self.counts.values()):
            raise ValueError("histogram total does not match counts")

    @classmethod
    def from_counts(cls, counts: Dict[Hashable, int]) -> "Histogram":
        kept = {k: int(v) for k, v in counts.items() if v != 0}
        return cls(counts=kept, total=sum(kept.values()))

    @classmethod
    def from_observations(cls, obs: Sequence[Hashable]) -> "Histogram":
        counts: Dict[Hashable, int] = {}
        for o in obs:
            counts[o] = counts.get(o, 0) + 1
        return cls(counts=counts, total=len(obs))


@dataclass(frozen=True)
class EntropyEstimate:
    """Entropy value in bits plus the estimator that produced it.

    Surrogate fields hold shuffle-ensemble noise-floor statistics when a
    resampling step was run; they are present together or absent together.
    surrogate_stderr is the sample standard deviation of the surrogate
    replicates (the width of the noise band, not the std of their mean).
    """

    bits: float
    estimator: str
    surrogate_mean: Optional[float] = None
    surrogate_stderr: Optional[float] = None
    surrogate_q99: Optional[float] = None

    def __post_init__(self):
        fields = (self.surrogate_mean, self.surrogate_stderr, self.surrogate_q99)
        if any(f is not None for f in fields) and any(f is None for f in fields):
            raise ValueError("surrogate fields must be set together")


@dataclass(frozen=True)
class TransitionMatrix:
    """Row-stochastic transition matrix; row index is the source state."""

    p: np.ndarray = field(repr=False)

    def __post_init__(self):
        p = np.asarray(self.p, dtype=float)
        if p.ndim != 2 or p.shape[0] != p.shape[1]:
            raise ValueError("transition matrix must be square")
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise ValueError("transition probabilities must lie in [0, 1]")
        if np.max(np.abs(p.sum(axis=1) - 1.0)) > 1e-12:
            raise ValueError("transition matrix rows must sum to 1 within 1e-12")
        object.__setattr__(self, "p", p)

    @property
    def n_states(self) -> int:
        return self.p.shape[0]


def _count_array(h: Histogram) -> np.ndarray:
    return np.fromiter(h.counts.values(), dtype=float, count=len(h.counts))


def naive_entropy(h: Histogram) -> EntropyEstimate:
    """Plug-in estimator -sum (n_i/N) log2 (n_i/N).

    Evaluated literally in probability form: every term is nonnegative and
    dyadic distributions (fair coin, degenerate) come out exact.
    """
    p = _count_array(h) / float(h.total)
    bits = float(-np.dot(p, np.log2(p)))
    return EntropyEstimate(bits=bits, estimator=NAIVE)


def grassberger_entropy(h: Histogram) -> EntropyEstimate:
    """Digamma-corrected estimator ln N - (1/N) sum n_i psi(n_i), in bits.

    Corrects the downward small-sample bias of the plug-in estimator; agrees
    with it in the limit of large counts.
    """
    n = _count_array(h)
    total = float(h.total)
    nats = np.log(total) - np.dot(n, digamma(n)) / total
    return EntropyEstimate(bits=float(nats / _LN2), estimator=GRASSBERGER)


_ESTIMATORS = {NAIVE: naive_entropy, GRASSBERGER: grassberger_entropy}


def entropy_from_histogram(h: Histogram, estimator: str = NAIVE) -> EntropyEstimate:
    try:
        return _ESTIMATORS[estimator](h)
    except KeyError:
        raise ValueError(f"unknown estimator {estimator!r}") from None


def _symbol_array(s) -> np.ndarray:
    symbols = getattr(s, "symbols", s)
    arr = np.asarray(symbols)
    if arr.ndim != 1:
        raise ValueError("symbol input must be one-dimensional")
    return arr.astype(np.int64, copy=False)


def block_histogram(s, block_len: int) -> Histogram:
    """Histogram of all overlapping blocks of block_len consecutive symbols."""
    arr = _symbol_array(s)
    if block_len < 1:
        raise ValueError("block_len must be positive")
    if block_len > arr.size:
        raise ValueError(f"block_len {block_len} exceeds series length {arr.size}")
    n_blocks = arr.size - block_len + 1
    if block_len == 1:
        keys, counts = np.unique(arr, return_counts=True)
        mapping = {(int(k),): int(c) for k, c in zip(keys, counts)}
    else:
        blocks = np.lib.stride_tricks.sliding_window_view(arr, block_len)
        keys, counts = np.unique(blocks, axis=0, return_counts=True)
        mapping = {tuple(int(v) for v in row): int(c) for row, c in zip(keys, counts)}
    return Histogram(counts=mapping, total=n_blocks)


def conditional_block_entropy(s, m: int, estimator: str = NAIVE) -> float:
    """H(X_0 | X_-1 .. X_-m) = H(blocks of m+1) - H(blocks of m), in bits.

    The m-block histogram is restricted to the starts that extend to a full
    (m+1)-block, so it is the exact marginal of the joint histogram and the
    difference is a true conditional entropy (0 for periodic series).
    """
    arr = _symbol_array(s)
    if m < 1:
        raise ValueError("m must be positive")
    if m + 1 > arr.size:
        raise ValueError("series too short for conditioning depth m")
    h_long = entropy_from_histogram(block_histogram(arr, m + 1), estimator).bits
    h_short = entropy_from_histogram(block_histogram(arr[:-1], m), estimator).bits
    return h_long - h_short


def stationary_distribution(t: TransitionMatrix, tol: float = 1e-12,
                            max_squarings: int = 64) -> np.ndarray:
    """Stationary distribution pi with pi = pi P, by power convergence.

    Squares the half-lazy chain (I+P)/2, which shares P's stationary
    distribution exactly and converges for every irreducible chain, periodic
    ones included. Non-convergence within the cap signals a reducible chain.
    """
    p = t.p
    q = 0.5 * (np.eye(p.shape[0]) + p)
    for _ in range(max_squarings):
        q = q @ q
        q /= q.sum(axis=1, keepdims=True)
        if np.max(q.max(axis=0) - q.min(axis=0)) <= tol:
            pi = q.mean(axis=0)
            return pi / pi.sum()
    raise ValueError("power iteration did not converge: chain appears reducible")


def markov_entropy_rate(t: TransitionMatrix) -> float:
    """Entropy rate h_inf = sum_i pi_i * (sum_j -P_ij log2 P_ij), in bits."""
    pi = stationary_distribution(t)
    p = t.p
    row_bits = np.zeros(p.shape[0])
    for i in range(p.shape[0]):
        row = p[i][p[i] > 0.0]
        row_bits[i] = -np.dot(row, np.log2(row))
    return float(np.dot(pi, row_bits))


def expected_state_duration(t: TransitionMatrix, i: int) -> float:
    """Mean sojourn time 1/(1 - a_ii) of state i, in periods."""
    a_ii = float(t.p[i, i])
    if a_ii >= 1.0:
        raise ValueError(f"state {i} is absorbing; expected duration is infinite")
    return 1.0 / (1.0 - a_ii)


def state_duration_pmf(a_ii: float, n: int) -> float:
    """P(sojourn length = n) = a_ii^(n-1) * (1 - a_ii) for a Markov state."""
    if not 0.0 <= a_ii < 1.0:
        raise ValueError("self-transition probability must lie in [0, 1)")
    if n < 1:
        raise ValueError("duration must be a positive integer")
    return float(a_ii ** (n - 1) * (1.0 - a_ii))


def renyi_entropy(p: Sequence[float], q: float) -> float:
    """Renyi entropy (1/(1-q)) log2 sum p_i^q, in bits; q > 0, q != 1."""
    if q == 1.0:
        raise ValueError("q=1 is the Shannon limit; use naive_entropy")
    if q <= 0.0:
        raise ValueError("q must be positive")
    arr = np.asarray(p, dtype=float)
    if np.any(arr < 0.0):
        raise ValueError("probabilities must be nonnegative")
    if abs(arr.sum() - 1.0) > 1e-9:
        raise ValueError("probabilities must sum to 1")
    nonzero = arr[arr > 0.0]
    return float(np.log2(np.sum(nonzero ** q)) / (1.0 - q))
