import math

import numpy as np
import pytest

from eigrates import (
    ConvergenceError,
    CovMatrix,
    DimensionError,
    DomainError,
    EntryDistribution,
    SampleMatrix,
    UnitVector,
    covariance,
    derive_rng,
    jacobi_eigh,
    load_sample_matrix,
    make_rng,
    mp_edges,
    quadratic_form,
    sample_matrix,
    save_sample_matrix,
    spectrum,
    trace_stat,
)
from eigrates.core import covariance_batch, eigvalues_batch, sample_batch

R = EntryDistribution.RADEMACHER
U = EntryDistribution.UNIFORM_SYM
N = EntryDistribution.STD_NORMAL


class TestSampling:
    def test_rademacher_support(self):
        c = sample_matrix(R, 2, 4, 123)
        assert set(np.unique(c.entries)) <= {-1.0, 1.0}

    def test_uniform_support_and_moments(self):
        c = sample_matrix(U, 1, 10**6, 7)
        assert np.all(np.abs(c.entries) <= math.sqrt(3.0))
        assert abs(c.entries.mean()) < 0.005
        assert abs(c.entries.var() - 1.0) < 0.01

    @pytest.mark.parametrize("dist", [R, U, N])
    def test_normalization(self, dist):
        # mean 0, variance 1 for every entry law
        draws = dist.sample(make_rng(99), 1_200_000)
        assert abs(draws.mean()) < 5e-3
        assert abs(draws.var() - 1.0) < 5e-3

    @pytest.mark.parametrize("dist", [R, U, N])
    def test_scalar_mgf_dominated_by_gaussian(self, dist):
        t = np.linspace(-3.0, 3.0, 121)
        assert np.all(dist.entry_mgf(t) <= np.exp(t * t / 2.0) + 1e-12)

    def test_determinism(self):
        a = sample_matrix(N, 3, 3, 42)
        b = sample_matrix(N, 3, 3, 42)
        assert np.array_equal(a.entries, b.entries)
        assert not np.array_equal(a.entries, sample_matrix(N, 3, 3, 43).entries)

    def test_dimension_errors(self):
        with pytest.raises(DimensionError):
            sample_matrix(R, 0, 4, 1)
        with pytest.raises(DimensionError):
            sample_matrix(R, 4, 0, 1)

    def test_derived_streams(self):
        a = derive_rng(5, 0).standard_normal(4)
        b = derive_rng(5, 0).standard_normal(4)
        c = derive_rng(5, 1).standard_normal(4)
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_parse_aliases(self):
        assert EntryDistribution.parse("normal") is N
        assert EntryDistribution.parse("gaussian") is N
        with pytest.raises(DomainError):
            EntryDistribution.parse("cauchy")


class TestCovariance:
    def test_orthogonal_rows_give_identity(self):
        c = SampleMatrix(R, 2, 2, np.array([[1.0, 1.0], [1.0, -1.0]]), seed=0)
        w = covariance(c)
        assert np.allclose(w.values, np.eye(2), atol=1e-15)

    def test_equal_rows_give_zero_eigenvalue(self):
        row = sample_matrix(R, 1, 8, 3).entries[0]
        c = SampleMatrix(R, 2, 8, np.vstack([row, row]), seed=3)
        sp = spectrum(covariance(c))
        assert abs(sp.lambda_min) < 1e-12

    def test_k1(self):
        c = sample_matrix(U, 1, 50, 9)
        w = covariance(c)
        assert w.values.shape == (1, 1)
        assert w.values[0, 0] == pytest.approx(np.mean(c.entries[0] ** 2))

    def test_diagonal_is_row_mean_squares(self):
        c = sample_matrix(N, 4, 33, 11)
        w = covariance(c)
        expected = np.mean(c.entries**2, axis=1)
        assert np.max(np.abs(np.diag(w.values) - expected)) < 1e-12

    def test_symmetry(self):
        c = sample_matrix(N, 6, 40, 12)
        w = covariance(c).values
        assert np.max(np.abs(w - w.T)) <= 1e-12


class TestSpectrum:
    def test_identity(self):
        sp = spectrum(CovMatrix(np.eye(2), n=2))
        assert np.allclose(sp.eigenvalues, [1.0, 1.0])

    def test_rank_one_ones(self):
        # characteristic polynomial lambda^2 - 2 lambda
        vals, _, _ = jacobi_eigh(np.array([[1.0, 1.0], [1.0, 1.0]]))
        assert np.allclose(vals, [0.0, 2.0], atol=1e-14)

    def test_trace_invariance(self):
        c = sample_matrix(N, 5, 20, 21)
        w = covariance(c)
        sp = spectrum(w)
        assert abs(sp.eigenvalues.sum() - w.trace) < 1e-9 * 5

    @pytest.mark.parametrize("k", [1, 2, 3, 5, 8, 13])
    def test_against_lapack(self, k):
        c = sample_matrix(N, k, 3 * k, 100 + k)
        w = covariance(c)
        sp = spectrum(w)
        assert np.max(np.abs(sp.eigenvalues - np.linalg.eigvalsh(w.values))) < 1e-10

    def test_reconstruction_and_orthonormality(self):
        c = sample_matrix(R, 6, 24, 31)
        w = covariance(c)
        sp = spectrum(w)
        q = sp.eigenvectors
        assert np.max(np.abs(q.T @ q - np.eye(6))) <= 1e-9
        assert np.max(np.abs(q @ np.diag(sp.eigenvalues) @ q.T - w.values)) <= 1e-9

    def test_sorted_ascending(self):
        sp = spectrum(covariance(sample_matrix(U, 7, 25, 8)))
        assert np.all(np.diff(sp.eigenvalues) >= 0)

    def test_asymmetric_rejected(self):
        with pytest.raises(DomainError):
            jacobi_eigh(np.array([[1.0, 2.0], [0.0, 1.0]]))

    def test_convergence_error_carries_residual(self):
        with pytest.raises(ConvergenceError) as err:
            jacobi_eigh(np.array([[1.0, 0.5], [0.5, 1.0]]), max_sweeps=0)
        assert err.value.offdiag_residual > 0


class TestQuadraticForm:
    def test_basis_vector_gives_diagonal(self):
        c = sample_matrix(N, 3, 17, 5)
        e1 = UnitVector(np.array([1.0, 0.0, 0.0]))
        assert quadratic_form(c, e1) == pytest.approx(covariance(c).values[0, 0], abs=1e-12)

    def test_rademacher_upper_bound(self):
        # Cauchy-Schwarz: each column term is at most sum of squares = k
        rng = make_rng(77)
        for _ in range(50):
            c = sample_matrix(R, 5, 11, int(rng.integers(1 << 30)))
            x = UnitVector.random(5, rng)
            assert quadratic_form(c, x) <= 5.0 + 1e-12

    def test_matches_bilinear_form(self):
        rng = make_rng(13)
        worst = 0.0
        for _ in range(100):
            k = int(rng.integers(1, 9))
            c = sample_matrix(N, k, int(rng.integers(4, 40)), int(rng.integers(1 << 30)))
            x = UnitVector.random(k, rng)
            w = covariance(c).values
            worst = max(worst, abs(quadratic_form(c, x) - x.coords @ w @ x.coords))
        assert worst <= 1e-10

    def test_dimension_mismatch(self):
        c = sample_matrix(N, 3, 5, 1)
        with pytest.raises(DimensionError):
            quadratic_form(c, UnitVector.uniform(4))


class TestTraceStat:
    def test_rademacher_trace_is_k(self):
        w = covariance(sample_matrix(R, 6, 30, 2))
        assert trace_stat(w) == pytest.approx(6.0, abs=1e-12)

    def test_identity(self):
        assert trace_stat(CovMatrix(np.eye(3), n=5)) == 3.0

    def test_bounds_lambda_max(self):
        rng = make_rng(3)
        for _ in range(30):
            c = sample_matrix(N, int(rng.integers(1, 7)), 12, int(rng.integers(1 << 30)))
            w = covariance(c)
            assert spectrum(w).lambda_max <= trace_stat(w) + 1e-9


class TestMpEdges:
    def test_degenerate(self):
        assert mp_edges(0.0) == (1.0, 1.0)

    def test_square_case(self):
        assert mp_edges(1.0) == (0.0, 4.0)

    def test_sdpic_safe_ratio(self):
        # upper edge reaches 2 exactly at beta = (sqrt(2)-1)^2 ~ 0.17
        beta = (math.sqrt(2.0) - 1.0) ** 2
        lo, hi = mp_edges(beta)
        assert hi == pytest.approx(2.0, abs=1e-12)
        assert beta == pytest.approx(0.17, abs=0.005)

    def test_negative_rejected(self):
        with pytest.raises(DomainError):
            mp_edges(-0.1)


class TestUnitVector:
    def test_validates_norm(self):
        with pytest.raises(DomainError):
            UnitVector(np.array([1.0, 1.0]))

    def test_of_normalizes(self):
        x = UnitVector.of([3.0, 4.0])
        assert np.allclose(x.coords, [0.6, 0.8])

    def test_structured_directions(self):
        assert np.allclose(UnitVector.uniform(4).coords, 0.5)
        two = UnitVector.two_sparse(5).coords
        assert np.allclose(two[:2], 1.0 / math.sqrt(2.0)) and np.all(two[2:] == 0)

    def test_zero_rejected(self):
        with pytest.raises(DomainError):
            UnitVector.of([0.0, 0.0])


class TestBatchHelpers:
    # the Monte Carlo fast path must agree with the certified Jacobi solver
    @pytest.mark.parametrize("k", [1, 2, 3, 5])
    def test_eigvalues_batch_matches_jacobi(self, k):
        rng = make_rng(50 + k)
        entries = sample_batch(R, rng, 64, k, 12)
        w = covariance_batch(entries)
        lam = eigvalues_batch(w)
        for i in range(64):
            ref, _, _ = jacobi_eigh(w[i])
            assert np.max(np.abs(lam[i] - ref)) < 1e-9

    def test_batch_sampling_matches_single(self):
        # same generator state gives the same draws regardless of packing
        a = sample_batch(R, derive_rng(9, 0), 2, 3, 5)
        b = derive_rng(9, 0).integers(0, 2, size=(2, 3, 5)) * 2 - 1
        assert np.array_equal(a, b.astype(float))


class TestCsvRoundTrip:
    def test_roundtrip(self, tmp_path):
        c = sample_matrix(U, 3, 7, 123456)
        path = tmp_path / "matrix.csv"
        save_sample_matrix(c, path)
        back = load_sample_matrix(path)
        assert back.dist is U and back.k == 3 and back.n == 7 and back.seed == 123456
        assert np.array_equal(back.entries, c.entries)
        header = path.read_text().splitlines()[0]
        assert header == "k,n,seed,dist"
