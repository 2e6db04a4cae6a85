import math

import numpy as np
import pytest

from eigrates import (
    CgfSpec,
    DomainError,
    EntryDistribution,
    TailSide,
    UnitVector,
    clopper_pearson,
    derive_rng,
    enumerate_exact,
    estimate_tail,
    legendre,
    max_above,
    min_below,
    spectrum_histogram,
    zero_count_at_least,
    zero_eigen_rate,
)

R = EntryDistribution.RADEMACHER
U = EntryDistribution.UNIFORM_SYM
N = EntryDistribution.STD_NORMAL


class TestClopperPearson:
    def test_brackets_the_estimate(self):
        lo, hi = clopper_pearson(37, 1000)
        assert lo <= 0.037 <= hi

    def test_zero_and_full(self):
        lo, hi = clopper_pearson(0, 500)
        assert lo == 0.0 and 0 < hi < 0.02
        lo, hi = clopper_pearson(500, 500)
        assert 0.98 < lo < 1.0 and hi == 1.0

    def test_rejects_bad_counts(self):
        with pytest.raises(DomainError):
            clopper_pearson(5, 4)


class TestEstimateTail:
    def test_exhaustive_k2_n2_min(self):
        # lambda_min = 0 iff the two rows are equal or opposite: 2 of 4 choices
        est = estimate_tail(R, 2, 2, 0.0, TailSide.MIN_BELOW, 80000, 7)
        assert est.ci_low <= 0.5 <= est.ci_high
        assert abs(est.p_hat - 0.5) < 0.01

    def test_exhaustive_k2_n2_max(self):
        # eigenvalues are 1 +/- |rho| with rho in {-1, 0, 0, 1}
        est = estimate_tail(R, 2, 2, 2.0, TailSide.MAX_ABOVE, 80000, 7)
        assert abs(est.p_hat - 0.5) < 0.01

    def test_certain_event(self):
        est = estimate_tail(U, 3, 5, 0.0, TailSide.MAX_ABOVE, 500, 1)
        assert est.p_hat == 1.0
        assert est.empirical_rate == 0.0

    def test_monotone_in_alpha_shared_seed(self):
        alphas = [0.2, 0.5, 0.8, 1.0, 1.3]
        mins = [estimate_tail(R, 3, 12, a, TailSide.MIN_BELOW, 4000, 99).hits for a in alphas]
        maxs = [estimate_tail(R, 3, 12, a, TailSide.MAX_ABOVE, 4000, 99).hits for a in alphas]
        assert mins == sorted(mins)
        assert maxs == sorted(maxs, reverse=True)

    def test_rademacher_spectrum_cap(self):
        # the largest eigenvalue never exceeds k, so the event is impossible
        est = estimate_tail(R, 3, 6, 3.0 + 1e-9, TailSide.MAX_ABOVE, 5000, 4)
        assert est.hits == 0
        assert est.empirical_rate is None

    def test_determinism_and_chunk_independence(self):
        a = estimate_tail(N, 2, 10, 1.5, TailSide.MAX_ABOVE, 3000, 5, chunk=256)
        b = estimate_tail(N, 2, 10, 1.5, TailSide.MAX_ABOVE, 3000, 5, chunk=256)
        assert a == b
        # same seed, different chunking still counts the same trial budget
        c = estimate_tail(N, 2, 10, 1.5, TailSide.MAX_ABOVE, 3000, 5, chunk=1024)
        assert abs(c.p_hat - a.p_hat) < 0.05

    def test_trials_gate(self):
        with pytest.raises(DomainError):
            estimate_tail(N, 2, 10, 1.5, TailSide.MAX_ABOVE, 0, 5)

    def test_side_parse(self):
        assert TailSide.parse("min_below") is TailSide.MIN_BELOW
        assert TailSide.parse("MAX_ABOVE") is TailSide.MAX_ABOVE
        with pytest.raises(DomainError):
            TailSide.parse("sideways")


class TestEnumerateExact:
    def test_k2_n2_zero_event(self):
        assert enumerate_exact(2, 2, zero_count_at_least(1)) == 0.5

    def test_k2_n4_zero_event(self):
        # rows equal or opposite: 2 * 2^-4
        assert enumerate_exact(2, 4, zero_count_at_least(1)) == 0.125

    def test_k1_unit_mass(self):
        assert enumerate_exact(1, 5, max_above(1.0)) == 1.0
        assert enumerate_exact(1, 5, max_above(1.0 + 1e-9)) == 0.0

    def test_k3_rank_deficiency_count(self):
        # rank <= 1 iff rows 2 and 3 both equal +/- row 1: (2*2^-n)^2
        assert enumerate_exact(3, 3, zero_count_at_least(2)) == 2.0 ** (2 - 2 * 3)

    def test_size_gate(self):
        with pytest.raises(DomainError):
            enumerate_exact(5, 6, min_below(1.0))

    def test_agrees_with_monte_carlo(self):
        for k, n, pred, alpha, side in [
            (2, 6, min_below(0.4), 0.4, TailSide.MIN_BELOW),
            (3, 5, max_above(1.8), 1.8, TailSide.MAX_ABOVE),
            (2, 8, max_above(2.2), 2.2, TailSide.MAX_ABOVE),
        ]:
            exact = enumerate_exact(k, n, pred)
            est = estimate_tail(R, k, n, alpha, side, 40000, 17)
            assert est.ci_low <= exact <= est.ci_high


class TestZeroEigenRate:
    def test_exact_small_n(self):
        (pt,) = zero_eigen_rate(2, 1, [10], trials=10, seed=0)
        assert pt.method == "exact"
        assert pt.p_hat == 2.0**-9
        assert pt.empirical_rate == pytest.approx(0.9 * math.log(2.0), abs=1e-12)

    def test_mc_large_n(self):
        (pt,) = zero_eigen_rate(2, 1, [16], trials=300000, seed=3)
        assert pt.method == "mc"
        assert pt.ci_low <= 2.0**-15 <= pt.ci_high

    def test_l_gate(self):
        with pytest.raises(DomainError):
            zero_eigen_rate(2, 2, [10], trials=10, seed=0)

    def test_rate_trend_toward_log2(self):
        points = zero_eigen_rate(2, 1, [6, 9, 12], trials=10, seed=0)
        rates = [p.empirical_rate for p in points]
        assert rates == sorted(rates)
        assert rates[-1] < math.log(2.0)


class TestSpectrumHistogram:
    def test_bulk_support_normal(self):
        h = spectrum_histogram(N, 20, 200, 300, 30, 5)
        assert h.outside_fraction <= 0.01
        assert h.mass.sum() == pytest.approx(1.0, abs=1e-12)

    def test_bulk_support_rademacher(self):
        h = spectrum_histogram(R, 20, 200, 300, 30, 5)
        assert h.outside_fraction <= 0.01

    def test_k1_concentrates_at_one(self):
        h = spectrum_histogram(U, 1, 4000, 600, 10, 2)
        assert h.bin_edges[0] > 0.8 and h.bin_edges[-1] < 1.2

    def test_bin_gate(self):
        with pytest.raises(DomainError):
            spectrum_histogram(N, 2, 10, 10, 50, 1)


class TestChernoffSideBound:
    def test_fixed_direction_upper_bound(self):
        # For a fixed direction the probability bound P <= exp(-n * rate)
        # holds at every n; the Monte Carlo CI must not contradict it.
        x = UnitVector.uniform(2)
        spec = CgfSpec.for_direction(R, x)
        n, trials, alpha = 30, 40000, 0.5
        rate, _ = legendre(spec, alpha)
        hits = 0
        chunk = 8000
        for index in range(trials // chunk):
            rng = derive_rng(123, index)
            entries = R.sample(rng, (chunk, 2, n))
            s = np.einsum("k,tkn->tn", x.coords, entries)
            qf = np.mean(s * s, axis=1)
            hits += int(np.count_nonzero(qf <= alpha))
        lo, _ = clopper_pearson(hits, trials)
        assert lo <= math.exp(-n * rate) + 1e-12
