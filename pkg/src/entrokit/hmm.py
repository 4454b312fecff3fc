"""Hidden Markov models with Gaussian emissions.

Scaled forward-backward filtering, EM fitting with restarts, Viterbi
decoding, and information-theoretic reports on the decoded state sequence.
State 0 is always the state with the higher emission mean.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import chi2

from .entropy import (
    TransitionMatrix,
    conditional_block_entropy,
    expected_state_duration,
    markov_entropy_rate,
    state_duration_pmf,
    stationary_distribution,
)

EM_TOL = 1e-8
EM_MAX_ITER = 500
N_RESTARTS = 5
_PROBE_ITERS = 20
_VAR_FLOOR_FRACTION = 1e-12
_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class HmmModel:
    """Gaussian-emission HMM: chain parameters plus per-state (mu, sigma)."""

    transition: TransitionMatrix
    means: np.ndarray = field(repr=False)
    sigmas: np.ndarray = field(repr=False)
    initial: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.transition.n_states
        means = np.asarray(self.means, dtype=float)
        sigmas = np.asarray(self.sigmas, dtype=float)
        initial = np.asarray(self.initial, dtype=float)
        if means.shape != (n,) or sigmas.shape != (n,) or initial.shape != (n,):
            raise ValueError("means, sigmas, and initial must have one entry per state")
        if np.any(sigmas <= 0.0):
            raise ValueError("emission sigmas must be positive")
        if np.any(initial < 0.0) or abs(initial.sum() - 1.0) > 1e-12:
            raise ValueError("initial distribution must sum to 1")
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "sigmas", sigmas)
        object.__setattr__(self, "initial", initial)

    @property
    def n_states(self) -> int:
        return self.transition.n_states


@dataclass(frozen=True)
class DecodedStates:
    """Viterbi path, smoothed posteriors P(q_t | y_1..T), and the loglik."""

    states: np.ndarray = field(repr=False)
    smoothed: np.ndarray = field(repr=False)
    loglik: float = 0.0

    def __post_init__(self):
        states = np.asarray(self.states, dtype=np.int64)
        smoothed = np.asarray(self.smoothed, dtype=float)
        if smoothed.ndim != 2 or states.shape != (smoothed.shape[0],):
            raise ValueError("states and smoothed must cover the same steps")
        if np.any(states < 0) or np.any(states >= smoothed.shape[1]):
            raise ValueError("state labels out of range")
        if np.max(np.abs(smoothed.sum(axis=1) - 1.0)) > 1e-10:
            raise ValueError("smoothed rows must sum to 1 within 1e-10")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "smoothed", smoothed)


def _observations(y: Sequence[float]) -> np.ndarray:
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError("observations must be a nonempty 1-D sequence")
    return arr


def _log_emissions(model: HmmModel, y: np.ndarray) -> np.ndarray:
    z = (y[:, None] - model.means[None, :]) / model.sigmas[None, :]
    # extreme standardized residuals overflow to inf, which is the correct
    # -inf log density once negated; silence the benign overflow warning
    with np.errstate(over="ignore"):
        return -0.5 * z * z - np.log(model.sigmas)[None, :] - 0.5 * _LOG_2PI


def _forward_pass(p: np.ndarray, initial: np.ndarray, log_b: np.ndarray):
    """Scaled forward recursion.

    Emission rows are max-shifted before exponentiation so a step only fails
    when the observation has zero likelihood under every reachable state.
    Returns row-normalized alphas, the per-step scalers of the shifted
    recursion, the shifted emission matrix, and the exact log-likelihood.
    """
    t_len, n = log_b.shape
    shift = log_b.max(axis=1)
    dead = np.flatnonzero(~np.isfinite(shift))
    if dead.size:
        raise ValueError(
            f"observation {dead[0]} has zero likelihood under every reachable state"
        )
    b = np.exp(log_b - shift[:, None])
    alpha = np.empty((t_len, n))
    scale = np.empty(t_len)

    a = initial * b[0]
    scale[0] = a.sum()
    if scale[0] <= 0.0:
        raise ValueError("observation 0 has zero likelihood under every reachable state")
    alpha[0] = a / scale[0]
    for t in range(1, t_len):
        a = (alpha[t - 1] @ p) * b[t]
        s = a.sum()
        if s <= 0.0:
            raise ValueError(
                f"observation {t} has zero likelihood under every reachable state"
            )
        alpha[t] = a / s
        scale[t] = s
    loglik = float(np.log(scale).sum() + shift.sum())
    return alpha, scale, b, loglik


def _backward_pass(p: np.ndarray, scale: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Backward recursion scaled with the forward scalers, so that
    alpha_t(q) * beta_t(q) is exactly the smoothed posterior."""
    t_len, n = b.shape
    beta = np.empty((t_len, n))
    beta[t_len - 1] = 1.0
    for t in range(t_len - 2, -1, -1):
        beta[t] = (p @ (b[t + 1] * beta[t + 1])) / scale[t + 1]
    return beta


def forward(model: HmmModel, y: Sequence[float]) -> Tuple[np.ndarray, float]:
    """Row-normalized filtered probabilities P(q_t | y_1..t) and the loglik."""
    obs = _observations(y)
    alpha, _, _, loglik = _forward_pass(
        model.transition.p, model.initial, _log_emissions(model, obs)
    )
    return alpha, loglik


def backward(model: HmmModel, y: Sequence[float]) -> np.ndarray:
    """Scaled backward variables; alpha * beta rows are smoothed posteriors."""
    obs = _observations(y)
    _, scale, b, _ = _forward_pass(
        model.transition.p, model.initial, _log_emissions(model, obs)
    )
    return _backward_pass(model.transition.p, scale, b)


def decode(model: HmmModel, y: Sequence[float]) -> DecodedStates:
    """Viterbi path plus smoothed posteriors in one pass over the data."""
    obs = _observations(y)
    p = model.transition.p
    alpha, scale, b, loglik = _forward_pass(p, model.initial, _log_emissions(model, obs))
    beta = _backward_pass(p, scale, b)
    smoothed = alpha * beta
    smoothed /= smoothed.sum(axis=1, keepdims=True)
    return DecodedStates(states=viterbi(model, obs), smoothed=smoothed, loglik=loglik)


def viterbi(model: HmmModel, y: Sequence[float]) -> np.ndarray:
    """Most likely state path argmax P(y, q), in log space.

    Ties break toward the lower state index at every step.
    """
    obs = _observations(y)
    log_b = _log_emissions(model, obs)
    with np.errstate(divide="ignore"):
        log_p = np.log(model.transition.p)
        log_init = np.log(model.initial)
    t_len, n = log_b.shape
    back = np.empty((t_len, n), dtype=np.int64)
    delta = log_init + log_b[0]
    for t in range(1, t_len):
        cand = delta[:, None] + log_p
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(n)] + log_b[t]
    if not np.isfinite(delta.max()):
        raise ValueError("observations have zero likelihood under every state path")
    states = np.empty(t_len, dtype=np.int64)
    states[t_len - 1] = int(np.argmax(delta))
    for t in range(t_len - 1, 0, -1):
        states[t - 1] = back[t, states[t]]
    return states


class _EmCollapse(Exception):
    """A run drove an emission variance below the floor or emptied a state."""


def _em_run(y: np.ndarray, model: HmmModel, max_iter: int, tol: float,
            var_floor: float):
    """EM iterations from one starting model; loglik trace is nondecreasing.

    Stops when the relative loglik gain drops below tol. The returned model
    is the one whose loglik closes the trace.
    """
    p = model.transition.p.copy()
    means = model.means.copy()
    sigmas = model.sigmas.copy()
    initial = model.initial.copy()
    trace: List[float] = []
    prev = None
    for _ in range(max_iter):
        current = HmmModel(TransitionMatrix(p), means, sigmas, initial)
        log_b = _log_emissions(current, y)
        alpha, scale, b, loglik = _forward_pass(p, initial, log_b)
        trace.append(loglik)
        if prev is not None and abs(loglik - prev) <= tol * (1.0 + abs(loglik)):
            return current, np.asarray(trace)
        prev = loglik

        beta = _backward_pass(p, scale, b)
        gamma = alpha * beta
        gamma /= gamma.sum(axis=1, keepdims=True)
        w = b[1:] * beta[1:] / scale[1:, None]
        xi_sum = p * (alpha[:-1].T @ w)

        occupancy = gamma.sum(axis=0)
        row_totals = xi_sum.sum(axis=1)
        if np.any(occupancy <= 0.0) or np.any(row_totals <= 0.0):
            raise _EmCollapse("a state lost all posterior mass")
        p = xi_sum / row_totals[:, None]
        means = gamma.T @ y / occupancy
        variances = (gamma * (y[:, None] - means[None, :]) ** 2).sum(axis=0) / occupancy
        # <= so that exactly-zero variance (constant data) counts as collapsed
        # even when the floor itself is zero
        if np.any(variances <= var_floor):
            raise _EmCollapse("emission variance fell below the floor")
        sigmas = np.sqrt(variances)
        initial = gamma[0] / gamma[0].sum()
    # iteration budget exhausted: close the trace with the final model's loglik
    final = HmmModel(TransitionMatrix(p), means, sigmas, initial)
    trace.append(_forward_pass(p, initial, _log_emissions(final, y))[3])
    return final, np.asarray(trace)


def _quantile_init(y: np.ndarray, n_states: int) -> HmmModel:
    """Deterministic start: split observations into n_states quantile groups
    and take per-group moments; persistent chain, uniform initial."""
    edges = np.quantile(y, np.linspace(0.0, 1.0, n_states + 1))
    sd_all = max(float(y.std(ddof=1)), 1e-12)
    means = np.empty(n_states)
    sigmas = np.empty(n_states)
    for g in range(n_states):
        lo, hi = edges[g], edges[g + 1]
        member = (y >= lo) & (y <= hi) if g == n_states - 1 else (y >= lo) & (y < hi)
        group = y[member]
        means[g] = group.mean() if group.size else float(y.mean())
        spread = group.std(ddof=1) if group.size > 1 else 0.0
        sigmas[g] = max(spread, 0.05 * sd_all)
    order = np.argsort(-means, kind="stable")
    p = np.full((n_states, n_states), 0.1 / (n_states - 1))
    np.fill_diagonal(p, 0.9)
    initial = np.full(n_states, 1.0 / n_states)
    return HmmModel(TransitionMatrix(p), means[order], sigmas[order], initial)


def _jittered(base: HmmModel, rng: np.random.Generator) -> HmmModel:
    means = base.means * np.exp(0.3 * rng.standard_normal(base.n_states))
    sigmas = base.sigmas * np.exp(0.3 * rng.standard_normal(base.n_states))
    return HmmModel(base.transition, means, sigmas, base.initial)


def _sorted_by_mean(model: HmmModel) -> HmmModel:
    """Relabel so state 0 carries the higher emission mean."""
    order = np.argsort(-model.means, kind="stable")
    p = model.transition.p[np.ix_(order, order)]
    return HmmModel(
        TransitionMatrix(p), model.means[order], model.sigmas[order],
        model.initial[order],
    )


def fit_em(y: Sequence[float], n_states: int = 2, init: Optional[HmmModel] = None,
           max_iter: int = EM_MAX_ITER, tol: float = EM_TOL,
           seed: int = 0) -> Tuple[HmmModel, np.ndarray]:
    """Maximum-likelihood fit by EM; returns (model, loglik trace).

    With no explicit init, the deterministic quantile start runs to
    convergence, then N_RESTARTS jittered starts run short probe
    segments and the best probe is polished to convergence; the overall
    best final loglik wins. A run whose emission variance collapses below
    1e-12 x sample variance is abandoned; if every start collapses the fit
    fails. The winning trace is nondecreasing and its last entry is the
    loglik of the returned model.
    """
    obs = _observations(y)
    if obs.size < 10 * n_states:
        raise ValueError("need at least 10 observations per state")
    if n_states < 2:
        raise ValueError("n_states must be at least 2")
    var_floor = _VAR_FLOOR_FRACTION * float(obs.var())

    if init is not None:
        try:
            model, trace = _em_run(obs, init, max_iter, tol, var_floor)
        except _EmCollapse as exc:
            raise RuntimeError(f"fit collapsed: {exc}") from None
        return _sorted_by_mean(model), trace

    candidates = []
    base = _quantile_init(obs, n_states)
    try:
        candidates.append(_em_run(obs, base, max_iter, tol, var_floor))
    except _EmCollapse:
        pass

    probes = []
    for k in range(N_RESTARTS):
        rng = np.random.default_rng([seed, k])
        try:
            probes.append(_em_run(obs, _jittered(base, rng), _PROBE_ITERS, tol, var_floor))
        except _EmCollapse:
            continue
    if probes:
        probe_model, probe_trace = max(probes, key=lambda mt: mt[1][-1])
        try:
            polished, tail = _em_run(obs, probe_model, max_iter, tol, var_floor)
            candidates.append((polished, np.concatenate([probe_trace[:-1], tail])))
        except _EmCollapse:
            candidates.append((probe_model, probe_trace))
    if not candidates:
        raise RuntimeError("all restarts collapsed: emission variance below the floor")

    model, trace = max(candidates, key=lambda mt: mt[1][-1])
    return _sorted_by_mean(model), trace


def _distribution_bits(p: np.ndarray) -> float:
    nz = p[p > 0.0]
    return float(-np.dot(nz, np.log2(nz)))


def _durations(states: np.ndarray) -> Dict[int, np.ndarray]:
    """Run lengths of each state's visits, in visit order."""
    change = np.flatnonzero(np.diff(states)) + 1
    bounds = np.concatenate([[0], change, [states.size]])
    lengths = np.diff(bounds)
    labels = states[bounds[:-1]]
    return {int(s): lengths[labels == s] for s in np.unique(labels)}


@dataclass(frozen=True)
class StateReport:
    """Chain-theoretic quantities of a fitted model next to their empirical
    counterparts from a decoded state path."""

    stationary: np.ndarray = field(repr=False)
    entropy_bits: float
    entropy_rate_bits: float
    expected_durations: np.ndarray = field(repr=False)
    empirical_frequencies: np.ndarray = field(repr=False)
    empirical_entropy_bits: float
    empirical_conditional_entropy_bits: float
    duration_histogram: Dict[int, Dict[int, int]] = field(repr=False)


def state_report(model: HmmModel, states: Sequence[int]) -> StateReport:
    """Stationary law, entropies, and duration statistics of a decoded path.

    Theoretical quantities come from the fitted transition matrix; empirical
    ones from the decoded sequence. An absorbing state reports an infinite
    expected duration. The empirical conditional entropy H(X_t | X_t-1) is 0
    for paths too short to form a transition.
    """
    arr = np.asarray(states, dtype=np.int64)
    if arr.size < 1:
        raise ValueError("states must be nonempty")
    n = model.n_states
    pi = stationary_distribution(model.transition)
    durations = np.array([
        math.inf if model.transition.p[i, i] >= 1.0
        else expected_state_duration(model.transition, i)
        for i in range(n)
    ])
    freq = np.bincount(arr, minlength=n) / arr.size
    cond = conditional_block_entropy(arr, 1) if arr.size >= 2 else 0.0
    histogram = {
        state: {int(length): int(count) for length, count in
                zip(*np.unique(runs, return_counts=True))}
        for state, runs in _durations(arr).items()
    }
    return StateReport(
        stationary=pi,
        entropy_bits=_distribution_bits(pi),
        entropy_rate_bits=markov_entropy_rate(model.transition),
        expected_durations=durations,
        empirical_frequencies=freq,
        empirical_entropy_bits=_distribution_bits(freq),
        empirical_conditional_entropy_bits=cond,
        duration_histogram=histogram,
    )


@dataclass(frozen=True)
class GofResult:
    """Chi-square goodness-of-fit outcome."""

    statistic: float
    pvalue: float
    dof: int


def geometric_duration_test(durations: Sequence[int], stay_prob: float,
                            min_expected: float = 5.0) -> GofResult:
    """Chi-square test of sojourn lengths against the geometric law
    a^(n-1) (1-a) with known stay probability a.

    Bins are single lengths 1..L-1 plus a merged tail >= L, with L chosen
    as the largest length whose expected count still reaches min_expected
    (the geometric pmf is decreasing, so no interior bin falls short).
    """
    d = np.asarray(durations, dtype=np.int64)
    if d.size == 0 or np.any(d < 1):
        raise ValueError("durations must be positive integers")
    if not 0.0 <= stay_prob < 1.0:
        raise ValueError("stay probability must lie in [0, 1)")
    n = d.size
    cut = 1
    while n * state_duration_pmf(stay_prob, cut + 1) >= min_expected:
        cut += 1
    if cut < 2:
        raise ValueError("too few durations for a chi-square test")
    observed = np.array([np.count_nonzero(d == k) for k in range(1, cut)]
                        + [np.count_nonzero(d >= cut)], dtype=float)
    expected = np.array([n * state_duration_pmf(stay_prob, k) for k in range(1, cut)]
                        + [n * stay_prob ** (cut - 1)])
    statistic = float(np.sum((observed - expected) ** 2 / expected))
    dof = observed.size - 1
    return GofResult(statistic=statistic, pvalue=float(chi2.sf(statistic, dof)), dof=dof)


def parameter_stderrs(model: HmmModel, y: Sequence[float],
                      step: float = 1e-4) -> Dict[str, float]:
    """Standard errors from a finite-difference Hessian of the loglik.

    Free parameters are the off-diagonal transition entries (diagonals
    absorb the row constraint), the emission means, and the sigmas; the
    initial distribution is not identified from one sequence and is left
    out. Entries whose curvature is not positive definite come back NaN.
    """
    obs = _observations(y)
    n = model.n_states
    names = [f"transition[{i},{j}]" for i in range(n) for j in range(n) if j != i]
    names += [f"mu[{i}]" for i in range(n)] + [f"sigma[{i}]" for i in range(n)]
    theta0 = np.concatenate([
        [model.transition.p[i, j] for i in range(n) for j in range(n) if j != i],
        model.means, model.sigmas,
    ])

    def loglik_at(theta: np.ndarray) -> float:
        p = np.zeros((n, n))
        pos = 0
        for i in range(n):
            for j in range(n):
                if j != i:
                    p[i, j] = theta[pos]
                    pos += 1
            p[i, i] = 1.0 - p[i].sum()
        means = theta[pos:pos + n]
        sigmas = theta[pos + n:pos + 2 * n]
        trial = HmmModel(TransitionMatrix(p), means, sigmas, model.initial)
        return forward(trial, obs)[1]

    k = theta0.size
    h = step * np.maximum(1.0, np.abs(theta0))
    # keep perturbed transition entries (and the implied diagonals) inside
    # (0, 1) and sigmas positive; parameters pinned to a boundary get no step
    pos = 0
    for i in range(n):
        for j in range(n):
            if j != i:
                h[pos] = min(h[pos], 0.45 * theta0[pos], 0.45 * model.transition.p[i, i])
                pos += 1
    for i in range(n):
        sig_idx = pos + n + i
        h[sig_idx] = min(h[sig_idx], 0.45 * theta0[sig_idx])
    free = np.flatnonzero(h > 0.0)

    hessian = np.empty((free.size, free.size))
    f0 = loglik_at(theta0)
    for ai, a in enumerate(free):
        ea = np.zeros(k)
        ea[a] = h[a]
        hessian[ai, ai] = (loglik_at(theta0 + ea) - 2.0 * f0 + loglik_at(theta0 - ea)) / h[a] ** 2
        for bi, b_idx in enumerate(free[ai + 1:], start=ai + 1):
            eb = np.zeros(k)
            eb[b_idx] = h[b_idx]
            mixed = (
                loglik_at(theta0 + ea + eb) - loglik_at(theta0 + ea - eb)
                - loglik_at(theta0 - ea + eb) + loglik_at(theta0 - ea - eb)
            ) / (4.0 * h[a] * h[b_idx])
            hessian[ai, bi] = hessian[bi, ai] = mixed

    variances = np.full(k, np.nan)
    try:
        cov = np.linalg.inv(-hessian)
        variances[free] = np.diag(cov)
    except np.linalg.LinAlgError:
        pass
    return {name: float(np.sqrt(v)) if v > 0.0 else float("nan")
            for name, v in zip(names, variances)}
