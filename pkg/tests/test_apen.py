"""Tests for approximate entropy: contract form (bits), conditional form
(nats), rolling estimation, the iid analytic oracle, and block bootstrap."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from entrokit.apen import (
    Absolute,
    ApEnParams,
    ApEnResult,
    FractionOfSd,
    apen,
    apen_block_bootstrap,
    apen_conditional,
    apen_conditional_rolling,
    apen_iid_analytic,
    apen_rolling,
)
from entrokit.simulate import Ar1, Garch11, MarkovSwitch, MixtureNormal, VolJump, simulate


def brute_counts(x, m, r):
    """O(K^2) pure-python reference for self-inclusive block match counts."""
    k = len(x) - m + 1
    counts = []
    for i in range(k):
        c = 0
        for j in range(k):
            if max(abs(x[i + t] - x[j + t]) for t in range(m)) <= r:
                c += 1
        counts.append(c)
    return counts


def brute_apen_bits(x, m, r):
    out = []
    for mm in (m, m + 1):
        c = brute_counts(x, mm, r)
        k = len(c)
        out.append(sum(math.log2(v / k) for v in c) / k)
    return max(0.0, out[0] - out[1])


def brute_conditional_nats(x, m, r):
    out = []
    for mm in (m, m + 1):
        c = brute_counts(x, mm, r)
        k = len(c)
        out.append(math.log(sum(c) / k / k))
    return max(0.0, out[0] - out[1])


def std_r(x, fraction=0.2):
    return fraction * float(np.std(x, ddof=1))


class TestApenContract:
    def test_constant_series_is_zero(self):
        for m in (0, 1, 2):
            assert apen(np.full(60, 1.3), m, 0.5).bits == pytest.approx(
                0.0, abs=1e-12)

    def test_strict_alternation_near_zero(self):
        alt = np.array([0.0, 1.0] * 100)
        assert apen(alt, 1, 0.5).bits < 0.02

    def test_matches_bruteforce(self):
        rng = np.random.default_rng(21)
        for _ in range(3):
            x = rng.standard_normal(40) * rng.uniform(0.5, 2.0)
            r = std_r(x)
            for m in (1, 2):
                assert apen(x, m, r).bits == pytest.approx(
                    brute_apen_bits(x.tolist(), m, r), abs=1e-12)

    def test_m_zero_is_minus_phi1(self):
        x = np.random.default_rng(22).standard_normal(50)
        r = std_r(x)
        c = brute_counts(x.tolist(), 1, r)
        expected = -sum(math.log2(v / len(c)) for v in c) / len(c)
        assert apen(x, 0, r).bits == pytest.approx(expected, abs=1e-12)

    def test_result_metadata(self):
        x = np.random.default_rng(23).standard_normal(30)
        res = apen(x, 1, 0.4)
        assert res.params == ApEnParams(m=1, r=0.4, n=30)
        assert res.r_source == Absolute()
        assert res.bootstrap_mean is None and res.bootstrap_stderr is None

    def test_determinism(self):
        x = np.random.default_rng(24).standard_normal(80)
        assert apen(x, 2, 0.3).bits == apen(x, 2, 0.3).bits

    def test_validation(self):
        x = np.random.default_rng(25).standard_normal(30)
        with pytest.raises(ValueError, match="too short"):
            apen(x[:3], 2, 0.2)
        with pytest.raises(ValueError, match="r must be positive"):
            apen(x, 1, 0.0)
        with pytest.raises(ValueError, match="r must be positive"):
            apen(x, 1, float("nan"))
        with pytest.raises(ValueError, match="m must be nonnegative"):
            apen(x, -1, 0.2)
        with pytest.raises(ValueError, match="one-dimensional"):
            apen(x.reshape(5, 6), 1, 0.2)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=6, max_size=40))
    def test_finite_and_nonnegative(self, values):
        x = np.asarray(values)
        bits = apen(x, 1, 0.5).bits
        assert np.isfinite(bits) and 0.0 <= bits < 64.0


class TestApenInvariants:
    def test_small_sample_bias_increasing(self):
        means = []
        for n in (20, 100, 500):
            vals = []
            for k in range(150):
                x = np.random.default_rng([303, n, k]).standard_normal(n)
                vals.append(apen(x, 2, std_r(x)).bits)
            means.append(np.mean(vals))
        assert means[0] < means[1] < means[2]
        assert 0.0 < means[0] < 0.3
        assert 0.6 < means[1] < 0.9
        assert 1.8 < means[2] < 2.05

    def test_nonincreasing_in_r(self):
        # holds from the default tolerance up; below ~0.15 sd matches
        # degenerate toward self-matches only and the estimate collapses
        for seed in (31, 32):
            x = np.random.default_rng(seed).standard_normal(150)
            sd = float(np.std(x, ddof=1))
            bits = [apen(x, 1, mult * sd).bits
                    for mult in (0.2, 0.3, 0.4, 0.6, 1.0, 2.0)]
            assert all(b - a >= -1e-9 for a, b in zip(bits[1:], bits))

    def test_ar1_decreasing_in_rho(self):
        means = []
        for rho in (0.0, 0.3, 0.6, 0.9):
            vals = []
            for k in range(150):
                x = simulate(Ar1(rho), 200, [304, int(rho * 10), k])
                vals.append(apen(x, 1, std_r(x)).bits)
            means.append(np.mean(vals))
        assert means[0] > means[1] > means[2] > means[3]

    def test_garch_decreasing_in_alpha1(self):
        means = []
        for a1 in (0.05, 0.3, 0.6):
            vals = []
            for k in range(100):
                x = simulate(Garch11(1e-5, a1, 0.3), 400,
                             [305, int(a1 * 100), k]) ** 2
                vals.append(apen(x, 1, std_r(x)).bits)
            means.append(np.mean(vals))
        assert means[0] > means[1] > means[2]


class TestApenConditional:
    def test_matches_bruteforce(self):
        rng = np.random.default_rng(41)
        for _ in range(3):
            x = rng.standard_normal(40) * rng.uniform(0.5, 2.0)
            r = std_r(x)
            for m in (1, 2):
                assert apen_conditional(x, m, r) == pytest.approx(
                    brute_conditional_nats(x.tolist(), m, r), abs=1e-12)

    def test_uniform_closed_form(self):
        # pooled match probability for U(0,1) at tolerance r is 2r - r^2,
        # so the large-N conditional value is -ln(2r - r^2)
        u = np.random.default_rng(101).random(20000)
        assert apen_conditional(u, 1, 0.25) == pytest.approx(
            -math.log(0.4375), abs=0.02)

    def test_normal_closed_form(self):
        # match probability P(|X - Y| <= r) with X - Y ~ N(0, 2)
        g = np.random.default_rng(102).standard_normal(20000)
        expected = -math.log(2 * norm.cdf(0.2 / math.sqrt(2)) - 1)
        assert apen_conditional(g, 1, 0.2) == pytest.approx(expected, abs=0.03)

    def test_constant_series_is_zero(self):
        assert apen_conditional(np.full(50, 2.0), 1, 0.3) == 0.0

    def test_markov_switch_level(self):
        vals = []
        for k in range(100):
            s, _ = simulate(MarkovSwitch(0.9, 0.8, 0.1 ** 0.5, 0.5 ** 0.5),
                            400, [307, k])
            x = s * s
            vals.append(apen_conditional(x, 1, std_r(x)))
        assert np.mean(vals) == pytest.approx(0.818677, abs=1e-6)

    def test_mixture_level(self):
        vals = []
        for k in range(100):
            x = simulate(MixtureNormal(0.67, 0.01 ** 0.5, 0.05 ** 0.5), 100,
                         [308, k]) ** 2
            vals.append(apen_conditional(x, 1, std_r(x)))
        assert np.mean(vals) == pytest.approx(0.901066, abs=1e-6)

    def test_validation(self):
        x = np.random.default_rng(42).standard_normal(30)
        with pytest.raises(ValueError, match="m must be at least 1"):
            apen_conditional(x, 0, 0.2)
        with pytest.raises(ValueError, match="r must be positive"):
            apen_conditional(x, 1, -0.1)
        with pytest.raises(ValueError, match="too short"):
            apen_conditional(x[:3], 2, 0.2)

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.floats(-10, 10), min_size=6, max_size=40))
    def test_finite_and_nonnegative(self, values):
        x = np.asarray(values)
        v = apen_conditional(x, 1, 0.5)
        assert np.isfinite(v) and 0.0 <= v < 64.0


class TestApenRolling:
    def test_output_length_and_alignment(self):
        x = np.random.default_rng(51).standard_normal(70)
        out = apen_rolling(x, 30, m=1, r_fraction=0.2)
        assert len(out) == 41
        assert all(res.params.n == 30 for res in out)
        assert all(res.r_source == FractionOfSd(fraction=0.2) for res in out)
        # each window value equals a direct apen call on that slice
        direct = apen(x[5:35], 1, std_r(x[5:35]))
        assert out[5].bits == pytest.approx(direct.bits, abs=1e-12)

    def test_constant_series_all_zero(self):
        out = apen_rolling(np.ones(50), 10)
        assert all(res.bits == 0.0 and res.params.r == 0.0 for res in out)

    def test_scale_invariance(self):
        x = np.random.default_rng(52).standard_normal(90)
        a = [res.bits for res in apen_rolling(x, 40)]
        b = [res.bits for res in apen_rolling(10.0 * x, 40)]
        assert a == pytest.approx(b, abs=1e-12)

    def test_validation(self):
        x = np.random.default_rng(53).standard_normal(30)
        with pytest.raises(ValueError, match="window exceeds"):
            apen_rolling(x, 31)
        with pytest.raises(ValueError, match="window too short"):
            apen_rolling(x, 2, m=1)
        with pytest.raises(ValueError, match="r_fraction"):
            apen_rolling(x, 10, r_fraction=0.0)

    def test_conditional_rolling_mirrors_windows(self):
        x = np.random.default_rng(54).standard_normal(60)
        out = apen_conditional_rolling(x, 25, m=1, r_fraction=0.2)
        assert out.shape == (36,)
        direct = apen_conditional(x[4:29], 1, std_r(x[4:29]))
        assert out[4] == pytest.approx(direct, abs=1e-12)

    def test_conditional_rolling_trivials(self):
        assert np.all(apen_conditional_rolling(np.ones(40), 10) == 0.0)
        x = np.random.default_rng(55).standard_normal(80)
        assert apen_conditional_rolling(x, 30) == pytest.approx(
            apen_conditional_rolling(10.0 * x, 30), abs=1e-12)

    def test_volatility_jump_trace(self):
        """A variance jump shows a stable plateau, then a sharp trough while
        the window straddles the jump, then recovery to the plateau."""
        n, window = 1000, 100
        curves = np.empty((80, n - window + 1))
        for k in range(80):
            x = simulate(VolJump(0.01, 0.05, 500), n, [306, k])
            curves[k] = apen_conditional_rolling(x * x, window)
        mean_curve = curves.mean(axis=0)
        ends = np.arange(window - 1, n)
        plateau = mean_curve[(ends >= 299) & (ends <= 499)].mean()
        tail = mean_curve[ends >= 700].mean()
        straddle = mean_curve[(ends >= 500) & (ends <= 599)]
        trough = straddle.min()
        t_trough = ends[(ends >= 500) & (ends <= 599)][np.argmin(straddle)]
        assert 1.19 < plateau < 1.27
        assert 1.19 < tail < 1.27
        assert 0.15 < trough < 0.28
        assert 505 <= t_trough <= 535


class TestApenAnalytic:
    @staticmethod
    def uniform_density(y):
        return 1.0 if 0.0 <= y <= 1.0 else 0.0

    def test_uniform_wide_tolerance_zero(self):
        assert apen_iid_analytic(self.uniform_density, 1.0, (0.0, 1.0)) == 0.0

    def test_uniform_quarter_closed_form(self):
        # -integral of log2(min(y+r,1) - max(y-r,0)) dy at r = 1/4
        # evaluates to 0.5 + 0.5 * log2(e)
        value = apen_iid_analytic(self.uniform_density, 0.25, (0.0, 1.0))
        assert value == pytest.approx(0.5 + 0.5 * math.log2(math.e), abs=1e-9)

    def test_uniform_quarter_vs_empirical(self):
        value = apen_iid_analytic(self.uniform_density, 0.25, (0.0, 1.0))
        u = np.random.default_rng(61).random(1_000_000)
        assert apen(u, 0, 0.25).bits == pytest.approx(value, abs=0.02)

    def test_normal_vs_empirical(self):
        value = apen_iid_analytic(norm.pdf, 0.2, (-12.0, 12.0))
        assert value == pytest.approx(3.369086685, abs=1e-6)
        g = np.random.default_rng(62).standard_normal(1_000_000)
        assert apen(g, 0, 0.2).bits == pytest.approx(value, abs=0.02)

    def test_validation(self):
        with pytest.raises(ValueError, match="integrate to 1"):
            apen_iid_analytic(lambda y: 2.0, 0.2, (0.0, 1.0))
        with pytest.raises(ValueError, match="support bounds"):
            apen_iid_analytic(self.uniform_density, 0.2, (1.0, 0.0))
        with pytest.raises(ValueError, match="r must be positive"):
            apen_iid_analytic(self.uniform_density, 0.0, (0.0, 1.0))


class TestApenBlockBootstrap:
    def test_stderr_decreases_with_length(self):
        x50 = np.random.default_rng(309).standard_normal(50)
        x500 = np.random.default_rng(310).standard_normal(500)
        _, se50 = apen_block_bootstrap(
            x50, ApEnParams(m=1, r=std_r(x50), n=50), 5, 60, seed=11)
        _, se500 = apen_block_bootstrap(
            x500, ApEnParams(m=1, r=std_r(x500), n=500), 5, 60, seed=11)
        assert se50 > se500 > 0.0

    def test_constant_series(self):
        c = np.full(60, 3.0)
        mean, se = apen_block_bootstrap(
            c, ApEnParams(m=1, r=0.5, n=60), 5, 60, seed=1)
        assert mean == 0.0 and se == 0.0

    def test_seed_determinism(self):
        x = np.random.default_rng(63).standard_normal(80)
        params = ApEnParams(m=1, r=std_r(x), n=80)
        assert apen_block_bootstrap(x, params, 8, 60, seed=5) == \
            apen_block_bootstrap(x, params, 8, 60, seed=5)

    def test_validation(self):
        x = np.random.default_rng(64).standard_normal(40)
        params = ApEnParams(m=1, r=0.2, n=40)
        with pytest.raises(ValueError, match="block_len must be at least 2"):
            apen_block_bootstrap(x, params, 1, 60)
        with pytest.raises(ValueError, match="block_len exceeds"):
            apen_block_bootstrap(x, params, 41, 60)
        with pytest.raises(ValueError, match="n_boot"):
            apen_block_bootstrap(x, params, 5, 49)
        with pytest.raises(ValueError, match="params.n"):
            apen_block_bootstrap(x, ApEnParams(m=1, r=0.2, n=39), 5, 60)


class TestResultTypes:
    def test_params_validation(self):
        with pytest.raises(ValueError, match="m must be nonnegative"):
            ApEnParams(m=-1, r=0.2, n=10)
        with pytest.raises(ValueError, match="smaller than the window"):
            ApEnParams(m=10, r=0.2, n=10)
        with pytest.raises(ValueError, match="finite and nonnegative"):
            ApEnParams(m=1, r=-0.5, n=10)

    def test_result_validation(self):
        params = ApEnParams(m=1, r=0.2, n=10)
        with pytest.raises(ValueError, match="finite and nonnegative"):
            ApEnResult(bits=-0.1, params=params, r_source=Absolute())
        with pytest.raises(ValueError, match="set together"):
            ApEnResult(bits=0.5, params=params, r_source=Absolute(),
                       bootstrap_mean=0.4)

    def test_fraction_validation(self):
        with pytest.raises(ValueError, match="fraction must be positive"):
            FractionOfSd(fraction=0.0)
