import numpy as np
import pytest
from pydantic import ValidationError
from scipy import stats

from debiased_polyfit.errors import UnsupportedMeasureError
from debiased_polyfit.orthopoly import Measure, build_basis, eval_basis, gauss_rule
from debiased_polyfit.randmat import (
    RngState,
    TridiagonalMatrix,
    as_generator,
    sample_chi,
    sample_gue_dense_oracle,
    sample_gue_tridiag,
    sample_haar_unitary,
    sample_haar_unitary_batch,
    sample_haar_unitary_eigs,
    sample_jacobi_tridiag,
    sample_tridiag_batch,
)
from debiased_polyfit.trieig import eigenvalues, solve_eigenvalues


def expected_square_trace(measure, k):
    # E sum t_i^2 = sum_j E_mu[t^2 P_j(t)^2] for the projection DPP of size k
    nodes, weights = gauss_rule(measure, k + 1)
    values = eval_basis(build_basis(measure, k - 1), nodes)
    return float(weights @ (nodes**2 * np.sum(values**2, axis=1)))


class TestRngState:
    def test_reproducible(self):
        first = RngState(seed=7).generator().standard_normal(4)
        second = RngState(seed=7).generator().standard_normal(4)
        assert first.tolist() == second.tolist()

    def test_streams_are_independent(self):
        base = RngState(seed=7)
        assert (0, 3) == base.child(0, 3).stream
        draws = {
            tuple(base.child(i).generator().standard_normal(3)) for i in range(5)
        }
        assert 5 == len(draws)
        parent = base.generator().standard_normal()
        assert parent != base.child(0).generator().standard_normal()

    def test_validation(self):
        with pytest.raises(ValidationError):
            RngState(seed=-1)
        with pytest.raises(ValidationError):
            RngState(seed=2**64)
        with pytest.raises(ValidationError):
            RngState(seed=1, stream=(-3,))

    def test_as_generator(self, rng):
        assert rng is as_generator(rng)
        assert isinstance(as_generator(RngState(seed=1)), np.random.Generator)


class TestTridiagonalMatrix:
    def test_dense_and_norm(self):
        matrix = TridiagonalMatrix(diag=[1.0, 2.0, 3.0], offdiag=[0.5, -1.0])
        dense = matrix.to_dense()
        assert np.array_equal(dense, dense.T)
        assert [1.0, 0.5, 0.0] == dense[0].tolist()
        assert matrix.norm() == pytest.approx(np.linalg.norm(dense))
        assert 3 == matrix.k

    def test_validation(self):
        with pytest.raises(ValidationError):
            TridiagonalMatrix(diag=[1.0, 2.0], offdiag=[])
        with pytest.raises(ValidationError):
            TridiagonalMatrix(diag=[], offdiag=[])
        with pytest.raises(ValidationError):
            TridiagonalMatrix(diag=[1.0, np.nan], offdiag=[0.0])


class TestChi:
    def test_moments(self, rng):
        samples = sample_chi(6, 20000, rng)
        assert np.all(samples > 0.0)
        assert np.mean(samples**2) == pytest.approx(6.0, rel=0.03)

    def test_matches_scipy(self, rng):
        samples = sample_chi(3, 4000, rng)
        assert stats.kstest(samples, stats.chi(3).cdf).pvalue > 1e-3


class TestTridiagonalModels:
    def test_shapes(self, seed):
        matrix = sample_gue_tridiag(5, seed)
        assert (5,) == matrix.diag.shape
        assert np.all(matrix.offdiag > 0.0)
        diag, offdiag = sample_tridiag_batch(Measure.UNIFORM_SYMMETRIC, 4, 10, seed)
        assert (10, 4) == diag.shape
        assert (10, 3) == offdiag.shape
        single = sample_jacobi_tridiag(1, seed)
        assert (0,) == single.offdiag.shape

    def test_invalid(self, seed):
        with pytest.raises(UnsupportedMeasureError):
            sample_tridiag_batch(Measure.CIRCLE_UNIFORM, 3, 1, seed)
        with pytest.raises(ValueError):
            sample_tridiag_batch(Measure.GAUSSIAN_STD, 0, 1, seed)

    def test_jacobi_spectrum_in_interval(self, seed):
        diag, offdiag = sample_tridiag_batch(Measure.UNIFORM_SYMMETRIC, 6, 200, seed)
        for i in range(200):
            spectrum = solve_eigenvalues(diag[i], offdiag[i], "lapack")
            assert np.all(np.abs(spectrum) <= 1.0 + 1e-12)

    @pytest.mark.parametrize(
        "measure,k",
        [
            (Measure.GAUSSIAN_STD, 4),
            (Measure.UNIFORM_SYMMETRIC, 2),
            (Measure.UNIFORM_SYMMETRIC, 5),
        ],
    )
    def test_square_trace(self, measure, k):
        diag, offdiag = sample_tridiag_batch(measure, k, 20000, RngState(seed=k))
        square_trace = np.sum(diag**2, axis=1) + 2.0 * np.sum(offdiag**2, axis=1)
        stderr = np.std(square_trace) / np.sqrt(len(square_trace))
        expected = expected_square_trace(measure, k)
        assert abs(np.mean(square_trace) - expected) < 5.0 * stderr

    def test_gaussian_square_trace_is_k_squared(self):
        assert expected_square_trace(Measure.GAUSSIAN_STD, 4) == pytest.approx(16.0)
        assert expected_square_trace(Measure.UNIFORM_SYMMETRIC, 2) == pytest.approx(
            14.0 / 15.0
        )

    def test_matches_dense_oracle(self):
        k, trials = 3, 3000
        base = RngState(seed=1)
        tridiagonal = [
            eigenvalues(sample_gue_tridiag(k, base.child(0, i))) for i in range(trials)
        ]
        # the dense model has eigenvalues scaled by 1/sqrt(2)
        dense = [
            np.sqrt(2.0)
            * np.linalg.eigvalsh(sample_gue_dense_oracle(k, base.child(1, i)))
            for i in range(trials)
        ]
        for column in range(k):
            result = stats.ks_2samp(
                [values[column] for values in tridiagonal],
                [values[column] for values in dense],
            )
            assert result.pvalue > 1e-3

    def test_dense_oracle_is_hermitian(self, seed):
        matrix = sample_gue_dense_oracle(4, seed)
        assert np.allclose(matrix, matrix.conj().T)


class TestHaar:
    def test_unitary(self, seed):
        matrix = sample_haar_unitary(5, seed)
        assert np.allclose(matrix @ matrix.conj().T, np.eye(5), atol=1e-12)

    def test_eigenvalues(self, seed):
        spectrum = sample_haar_unitary_eigs(4, seed)
        assert np.allclose(np.abs(spectrum), 1.0, atol=1e-10)
        angles = np.mod(np.angle(spectrum), 2.0 * np.pi)
        assert np.all(np.diff(angles) >= 0.0)

    def test_trace_moment(self):
        # E |tr U|^2 = 1 for Haar unitaries of any size
        traces = np.array(
            [
                abs(np.trace(sample_haar_unitary(4, RngState(seed=3).child(i)))) ** 2
                for i in range(4000)
            ]
        )
        assert np.mean(traces) == pytest.approx(1.0, abs=0.1)

    def test_batch(self, seed):
        batch = sample_haar_unitary_batch(3, 50, seed)
        assert (50, 3, 3) == batch.shape
        products = batch @ np.conj(np.swapaxes(batch, 1, 2))
        assert np.allclose(products, np.eye(3), atol=1e-12)
        single = sample_haar_unitary_batch(3, 1, seed)[0]
        assert np.allclose(single, sample_haar_unitary(3, seed), atol=1e-12)

    def test_invalid(self, seed):
        with pytest.raises(ValueError):
            sample_haar_unitary(0, seed)
        with pytest.raises(ValueError):
            sample_haar_unitary_batch(0, 4, seed)
