import numpy as np
import pytest
from scipy.linalg import eigvalsh_tridiagonal

from debiased_polyfit import trieig
from debiased_polyfit.errors import EigensolverError
from debiased_polyfit.orthopoly import Measure
from debiased_polyfit.randmat import (
    RngState,
    TridiagonalMatrix,
    sample_gue_tridiag,
    sample_jacobi_tridiag,
)
from debiased_polyfit.trieig import (
    bisection_eigenvalues,
    eigenvalues,
    solve_eigenvalues,
    sturm_count,
    tridiag_eigenvalues,
)

REAL_MEASURES = [Measure.GAUSSIAN_STD, Measure.UNIFORM_SYMMETRIC]


def relative_gap(found, expected, matrix):
    return np.max(np.abs(found - expected)) / max(matrix.norm(), 1.0)


class TestQL:
    def test_known_spectrum(self):
        # second difference matrix: 2 - 2 cos(j pi / (k + 1))
        k = 6
        matrix = TridiagonalMatrix(diag=np.full(k, 2.0), offdiag=np.full(k - 1, -1.0))
        expected = 2.0 - 2.0 * np.cos(np.arange(1, k + 1) * np.pi / (k + 1))
        assert np.allclose(tridiag_eigenvalues(matrix), np.sort(expected), atol=1e-13)

    @pytest.mark.parametrize("k", [1, 2, 3, 8, 30])
    @pytest.mark.parametrize(
        "sampler", [sample_gue_tridiag, sample_jacobi_tridiag], ids=["gue", "jacobi"]
    )
    def test_matches_dense(self, k, sampler):
        for trial in range(20):
            matrix = sampler(k, RngState(seed=k).child(trial))
            found = tridiag_eigenvalues(matrix)
            expected = np.linalg.eigvalsh(matrix.to_dense())
            assert np.all(np.diff(found) >= 0.0)
            assert relative_gap(found, expected, matrix) < 1e-12

    @pytest.mark.parametrize(
        "sampler", [sample_gue_tridiag, sample_jacobi_tridiag], ids=["gue", "jacobi"]
    )
    def test_leading_submatrix_interlaces(self, sampler):
        k = 12
        for trial in range(50):
            matrix = sampler(k, RngState(seed=31).child(trial))
            leading = TridiagonalMatrix(
                diag=matrix.diag[:-1], offdiag=matrix.offdiag[:-1]
            )
            outer = tridiag_eigenvalues(matrix)
            inner = tridiag_eigenvalues(leading)
            slack = 1e-12 * max(matrix.norm(), 1.0)
            assert np.all(outer[:-1] <= inner + slack)
            assert np.all(inner <= outer[1:] + slack)

    def test_diagonal_and_repeated(self):
        matrix = TridiagonalMatrix(diag=[3.0, 1.0, 1.0, -2.0], offdiag=[0.0, 0.0, 0.0])
        assert [-2.0, 1.0, 1.0, 3.0] == tridiag_eigenvalues(matrix).tolist()

    def test_tiny_offdiagonal(self):
        matrix = TridiagonalMatrix(diag=[1.0, 1.0 + 1e-14, 2.0], offdiag=[1e-300, 1e-9])
        expected = np.linalg.eigvalsh(matrix.to_dense())
        assert np.allclose(tridiag_eigenvalues(matrix), expected, atol=1e-14)

    def test_fallback_to_bisection(self, mocker, caplog):
        mocker.patch.object(trieig, "MAX_SWEEPS", 0)
        matrix = sample_gue_tridiag(5, RngState(seed=11))
        found = solve_eigenvalues(matrix.diag, matrix.offdiag)
        expected = np.linalg.eigvalsh(matrix.to_dense())
        assert relative_gap(found, expected, matrix) < 1e-12
        assert "falling back to bisection" in caplog.text


class TestBisection:
    def test_sturm_count(self):
        matrix = TridiagonalMatrix(diag=np.full(4, 2.0), offdiag=np.full(3, -1.0))
        spectrum = np.linalg.eigvalsh(matrix.to_dense())
        assert 0 == sturm_count(matrix, spectrum[0] - 0.01)
        assert 2 == sturm_count(matrix, 0.5 * (spectrum[1] + spectrum[2]))
        assert 4 == sturm_count(matrix, spectrum[3] + 0.01)

    @pytest.mark.parametrize("measure", REAL_MEASURES)
    def test_matches_dense(self, measure):
        sampler = sample_gue_tridiag
        if measure is Measure.UNIFORM_SYMMETRIC:
            sampler = sample_jacobi_tridiag
        for trial in range(10):
            matrix = sampler(12, RngState(seed=5).child(trial))
            found = bisection_eigenvalues(matrix)
            expected = np.linalg.eigvalsh(matrix.to_dense())
            assert relative_gap(found, expected, matrix) < 1e-12

    def test_zero_eigenvalue(self):
        matrix = TridiagonalMatrix(diag=[0.0, 0.0, 0.0], offdiag=[1.0, 1.0])
        found = bisection_eigenvalues(matrix)
        assert np.allclose(found, [-np.sqrt(2.0), 0.0, np.sqrt(2.0)], atol=1e-14)

    def test_no_convergence(self, mocker):
        mocker.patch.object(trieig, "MAX_BISECTIONS", 3)
        with pytest.raises(EigensolverError):
            bisection_eigenvalues(sample_gue_tridiag(4, RngState(seed=1)))


class TestDispatch:
    def test_lapack(self):
        matrix = sample_jacobi_tridiag(7, RngState(seed=9))
        assert np.allclose(
            eigenvalues(matrix, "lapack"),
            eigvalsh_tridiagonal(matrix.diag, matrix.offdiag),
        )
        assert np.allclose(eigenvalues(matrix, "lapack"), eigenvalues(matrix, "ql"))

    def test_single_entry(self):
        assert [2.5] == solve_eigenvalues([2.5], []).tolist()
