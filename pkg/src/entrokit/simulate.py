"""Seeded stochastic process generators and the numbered simulation suites.

Every generator is deterministic given its seed. Seeds may be a single
integer or a sequence of integers; suite replicates derive per-path streams
as (seed, path_index), so results do not depend on evaluation order.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .apen import apen_conditional, apen_conditional_rolling
from .entropy import Histogram, grassberger_entropy, naive_entropy


@dataclass(frozen=True)
class CorrelatedGaussian:
    """Pair of standard normal series with population correlation rho."""

    rho: float

    def __post_init__(self):
        if not -1.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (-1, 1)")

    def sample(self, n: int, rng: np.random.Generator):
        e1 = rng.standard_normal(n)
        e2 = rng.standard_normal(n)
        # Cholesky factor of [[1, rho], [rho, 1]] applied to (e1, e2).
        return e1, self.rho * e1 + np.sqrt(1.0 - self.rho ** 2) * e2


@dataclass(frozen=True)
class Ar1:
    """AR(1) with unit-variance Gaussian innovations, stationary start."""

    rho: float

    def __post_init__(self):
        if not -1.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (-1, 1)")

    def sample(self, n: int, rng: np.random.Generator):
        eps = rng.standard_normal(n).tolist()
        x = np.empty(n)
        prev = eps[0] / math.sqrt(1.0 - self.rho ** 2)
        x[0] = prev
        for t in range(1, n):
            prev = self.rho * prev + eps[t]
            x[t] = prev
        return x


@dataclass(frozen=True)
class Garch11:
    """GARCH(1,1) return innovations a_t = sigma_t * eps_t.

    sigma2_t = alpha0 + alpha1 * a_{t-1}^2 + beta1 * sigma2_{t-1}, started at
    the unconditional variance alpha0 / (1 - alpha1 - beta1); the first 1000
    steps are discarded as burn-in.
    """

    alpha0: float
    alpha1: float
    beta1: float
    burn_in: int = 1000

    def __post_init__(self):
        if self.alpha0 <= 0.0:
            raise ValueError("alpha0 must be positive")
        if self.alpha1 < 0.0 or self.beta1 < 0.0:
            raise ValueError("alpha1 and beta1 must be nonnegative")
        if self.alpha1 + self.beta1 >= 1.0:
            raise ValueError("stationarity requires alpha1 + beta1 < 1")

    def sample(self, n: int, rng: np.random.Generator):
        total = n + self.burn_in
        eps = rng.standard_normal(total).tolist()
        a = np.empty(total)
        sigma2 = self.alpha0 / (1.0 - self.alpha1 - self.beta1)
        for t in range(total):
            a_t = math.sqrt(sigma2) * eps[t]
            a[t] = a_t
            sigma2 = self.alpha0 + self.alpha1 * a_t * a_t + self.beta1 * sigma2
        return a[self.burn_in:]


@dataclass(frozen=True)
class MarkovSwitch:
    """Two-state Markov-switching volatility; returns (series, state path).

    State 0 has volatility sigma1 and self-transition probability p; state 1
    has sigma2 and self-transition probability q. The initial state is drawn
    from the stationary distribution of the chain.
    """

    p: float
    q: float
    sigma1: float
    sigma2: float

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie in (0, 1)")
        if self.sigma1 <= 0.0 or self.sigma2 <= 0.0:
            raise ValueError("volatilities must be positive")

    def sample(self, n: int, rng: np.random.Generator):
        stay = (self.p, self.q)
        pi1 = (1.0 - self.p) / ((1.0 - self.p) + (1.0 - self.q))
        u = rng.random(n).tolist()
        states = np.empty(n, dtype=np.int64)
        s = 1 if u[0] < pi1 else 0
        states[0] = s
        for t in range(1, n):
            if u[t] >= stay[s]:
                s = 1 - s
            states[t] = s
        sigma = np.where(states == 0, self.sigma1, self.sigma2)
        return sigma * rng.standard_normal(n), states


@dataclass(frozen=True)
class VolJump:
    """Gaussian noise with a deterministic volatility jump after t_switch."""

    sigma1: float
    sigma2: float
    t_switch: int

    def __post_init__(self):
        if self.sigma1 <= 0.0 or self.sigma2 <= 0.0:
            raise ValueError("volatilities must be positive")
        if self.t_switch < 1:
            raise ValueError("t_switch must be positive")

    def sample(self, n: int, rng: np.random.Generator):
        sigma = np.where(np.arange(n) < self.t_switch, self.sigma1, self.sigma2)
        return sigma * rng.standard_normal(n)


@dataclass(frozen=True)
class MixtureNormal:
    """iid draws from w1 * N(0, sigma1^2) + (1 - w1) * N(0, sigma2^2)."""

    w1: float
    sigma1: float
    sigma2: float

    def __post_init__(self):
        if not 0.0 <= self.w1 <= 1.0:
            raise ValueError("w1 must lie in [0, 1]")
        if self.sigma1 <= 0.0 or self.sigma2 <= 0.0:
            raise ValueError("volatilities must be positive")

    def sample(self, n: int, rng: np.random.Generator):
        pick_low = rng.random(n) < self.w1
        sigma = np.where(pick_low, self.sigma1, self.sigma2)
        return sigma * rng.standard_normal(n)


def simulate(spec, n: int, seed):
    """Draws one realization of the given process spec.

    Returns an array for single-series specs, a pair of arrays for
    CorrelatedGaussian, and (series, states) for MarkovSwitch.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    return spec.sample(n, rng)


def _path_seed(seed, k: int):
    if isinstance(seed, (list, tuple)):
        return [*seed, k]
    return [seed, k]


# Replicate counts used by the simulation suites.
SUITE_PATHS = 1000
COIN_REPS = 5000


def _coin_entropy_rows():
    rows = []
    for p in np.round(np.arange(0.0, 1.0001, 0.1), 10):
        if p in (0.0, 1.0):
            h = 0.0
        else:
            h = float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))
        rows.append({"p": float(p), "entropy_bits": h})
    return rows


def _estimator_bias_rows(seed):
    lengths = [50, 100, 200, 300, 500, 700, 1000]
    rows = []
    for n in lengths:
        naive = np.empty(COIN_REPS)
        grass = np.empty(COIN_REPS)
        for k in range(COIN_REPS):
            rng = np.random.default_rng(_path_seed([seed, n], k))
            h = Histogram.from_observations(rng.integers(0, 2, n).tolist())
            naive[k] = naive_entropy(h).bits
            grass[k] = grassberger_entropy(h).bits
        rows.append({
            "n": n,
            "naive_mean_bits": float(naive.mean()),
            "naive_stderr_bits": float(naive.std(ddof=1)),
            "grassberger_mean_bits": float(grass.mean()),
            "grassberger_stderr_bits": float(grass.std(ddof=1)),
        })
    return rows


def _apen_over_paths(make_series, m: int, r_fraction: float, n_paths: int):
    """Mean and sd of conditional-form ApEn (nats) over seeded paths."""
    vals = np.empty(n_paths)
    for k in range(n_paths):
        u = make_series(k)
        r = r_fraction * np.std(u, ddof=1)
        vals[k] = apen_conditional(u, m, r)
    return float(vals.mean()), float(vals.std(ddof=1))


def _ar1_apen_rows(seed):
    rows = []
    for rho in np.round(np.arange(0.0, 0.9001, 0.1), 10):
        spec = Ar1(float(rho))
        mean, sd = _apen_over_paths(
            lambda k: simulate(spec, 200, _path_seed([seed, int(rho * 10)], k)),
            m=1, r_fraction=0.2, n_paths=SUITE_PATHS,
        )
        rows.append({"rho": float(rho), "apen_mean_nats": mean,
                     "apen_sd_nats": sd, "m": 1, "n": 200})
    return rows


GARCH_SUITE_ALPHA0 = 1e-5


def _garch_apen_rows(seed):
    grid = np.round(np.arange(0.05, 0.9001, 0.05), 10)
    rows = []
    for a1 in grid:
        for b1 in grid:
            if a1 + b1 >= 1.0:
                continue
            spec = Garch11(GARCH_SUITE_ALPHA0, float(a1), float(b1))
            tag = int(round(a1 * 100)) * 1000 + int(round(b1 * 100))
            mean, sd = _apen_over_paths(
                lambda k: simulate(spec, 400, _path_seed([seed, tag], k)) ** 2,
                m=1, r_fraction=0.2, n_paths=SUITE_PATHS,
            )
            rows.append({"alpha1": float(a1), "beta1": float(b1),
                         "apen_mean_nats": mean, "apen_sd_nats": sd,
                         "m": 1, "n": 400})
    return rows


def _vol_jump_rows(seed):
    spec = VolJump(sigma1=0.01, sigma2=0.05, t_switch=500)
    window = 100
    n = 1000
    traces = np.empty((SUITE_PATHS, n - window + 1))
    for k in range(SUITE_PATHS):
        r = simulate(spec, n, _path_seed(seed, k))
        traces[k] = apen_conditional_rolling(
            r ** 2, window, m=1, r_fraction=0.2)
    rows = []
    for j, t_end in enumerate(range(window - 1, n)):
        rows.append({"t": t_end, "apen_mean_nats": float(traces[:, j].mean()),
                     "apen_sd_nats": float(traces[:, j].std(ddof=1))})
    return rows


# Two-state suite volatilities, specified as variances: 0.1/0.5 for the
# switching grid and 0.01/0.05 for the mixture sweep.
MARKOV_SUITE_SIGMAS = (0.1 ** 0.5, 0.5 ** 0.5)
MIXTURE_SUITE_SIGMAS = (0.01 ** 0.5, 0.05 ** 0.5)


def _mixture_apen_rows(seed):
    weights = sorted(set(np.round(np.arange(0.0, 1.0001, 0.05), 10)) | {0.67})
    s1, s2 = MIXTURE_SUITE_SIGMAS
    rows = []
    for w1 in weights:
        spec = MixtureNormal(float(w1), sigma1=s1, sigma2=s2)
        tag = int(round(w1 * 100))
        mean, sd = _apen_over_paths(
            lambda k: simulate(spec, 100, _path_seed([seed, tag], k)) ** 2,
            m=1, r_fraction=0.2, n_paths=SUITE_PATHS,
        )
        rows.append({"w1": float(w1), "apen_mean_nats": mean,
                     "apen_sd_nats": sd, "m": 1, "n": 100})
    return rows


def _markov_apen_rows(seed):
    grid = np.round(np.arange(0.1, 0.9001, 0.1), 10)
    s1, s2 = MARKOV_SUITE_SIGMAS
    rows = []
    for p in grid:
        for q in grid:
            spec = MarkovSwitch(float(p), float(q), sigma1=s1, sigma2=s2)
            tag = int(round(p * 10)) * 100 + int(round(q * 10))

            def make(k, spec=spec, tag=tag):
                series, _ = simulate(spec, 400, _path_seed([seed, tag], k))
                return series ** 2

            mean, sd = _apen_over_paths(make, m=1, r_fraction=0.2,
                                        n_paths=SUITE_PATHS)
            rows.append({"p": float(p), "q": float(q),
                         "apen_mean_nats": mean, "apen_sd_nats": sd,
                         "m": 1, "n": 400})
    return rows


_SUITES = {
    "coin-entropy": lambda seed: _coin_entropy_rows(),
    "estimator-bias": _estimator_bias_rows,
    "apen-ar1": _ar1_apen_rows,
    "garch-apen": _garch_apen_rows,
    "vol-jump-apen": _vol_jump_rows,
    "mixture-apen": _mixture_apen_rows,
    "markov-apen": _markov_apen_rows,
}


def figure_suite(name: str, seed: int = 0):
    """Runs a named simulation suite and returns its rows (list of dicts)."""
    try:
        runner = _SUITES[name]
    except KeyError:
        known = ", ".join(sorted(_SUITES))
        raise ValueError(f"unknown suite {name!r}; available: {known}") from None
    return runner(seed)


def suite_names():
    return sorted(_SUITES)
