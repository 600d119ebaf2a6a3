import math

import numpy as np
import pytest
from scipy import stats
from scipy.linalg import eigvalsh_tridiagonal

from debiased_polyfit.orthopoly import Measure
from debiased_polyfit.randmat import (
    RngState,
    sample_gue_dense_oracle,
    sample_haar_unitary_batch,
    sample_tridiag_batch,
)
from debiased_polyfit.sampling import sample_dpp_nodes, sample_leverage_nodes
from debiased_polyfit.trieig import solve_eigenvalues

# pair laws: a 40 x 40 chi-square grid over one million draws
DRAWS = 1_000_000
BINS = 40
SIGNIFICANCE = 1e-3
MIN_EXPECTED = 5.0


def pair_eigenvalues(diag, offdiag):
    center = (diag[:, 0] + diag[:, 1]) / 2.0
    radius = np.hypot((diag[:, 0] - diag[:, 1]) / 2.0, offdiag[:, 0])
    return np.column_stack([center - radius, center + radius])


def unordered(pairs, gen):
    swap = gen.random(len(pairs)) < 0.5
    result = pairs.copy()
    result[swap] = pairs[swap][:, ::-1]
    return result


def gaussian_moments(edges):
    # int t^k phi(t) dt over each bin, k = 0, 1, 2
    pdf = stats.norm.pdf(edges)
    tpdf = np.where(np.isfinite(edges), edges * pdf, 0.0)
    m0 = np.diff(stats.norm.cdf(edges))
    m1 = -np.diff(pdf)
    m2 = m0 - np.diff(tpdf)
    return m0, m1, m2


def lebesgue_moments(edges):
    return [np.diff(edges ** (k + 1)) / (k + 1) for k in range(3)]


def squared_gap_cells(moments, scale):
    # int int (s - t)^2 over each cell, from the one-dimensional moments
    m0, m1, m2 = moments
    return scale * (
        np.outer(m2, m0) - 2.0 * np.outer(m1, m1) + np.outer(m0, m2)
    )


def chi_square_pvalue(pairs, edges, expected):
    counts, _, _ = np.histogram2d(pairs[:, 0], pairs[:, 1], bins=[edges, edges])
    counts = counts.ravel()
    expected = expected.ravel() * len(pairs) / expected.sum()
    # cells along the diagonal are nearly empty; pool them
    small = expected < MIN_EXPECTED
    observed = np.append(counts[~small], counts[small].sum())
    predicted = np.append(expected[~small], expected[small].sum())
    return stats.chisquare(observed, predicted).pvalue


class TestPairLaws:
    def test_gaussian_tridiagonal(self):
        gen = RngState(seed=101).generator()
        diag, offdiag = sample_tridiag_batch(Measure.GAUSSIAN_STD, 2, DRAWS, gen)
        pairs = unordered(pair_eigenvalues(diag, offdiag), gen)
        edges = stats.norm.ppf(np.linspace(0.0, 1.0, BINS + 1))
        expected = squared_gap_cells(gaussian_moments(edges), 0.5)
        assert expected.sum() == pytest.approx(1.0)
        assert chi_square_pvalue(pairs, edges, expected) > SIGNIFICANCE

    def test_jacobi_tridiagonal(self):
        gen = RngState(seed=102).generator()
        diag, offdiag = sample_tridiag_batch(Measure.UNIFORM_SYMMETRIC, 2, DRAWS, gen)
        pairs = unordered(pair_eigenvalues(diag, offdiag), gen)
        edges = np.linspace(-1.0, 1.0, BINS + 1)
        expected = squared_gap_cells(lebesgue_moments(edges), 3.0 / 8.0)
        assert expected.sum() == pytest.approx(1.0)
        assert chi_square_pvalue(pairs, edges, expected) > SIGNIFICANCE

    def test_haar_arguments(self):
        gen = RngState(seed=103).generator()
        spectra = np.linalg.eigvals(sample_haar_unitary_batch(2, DRAWS, gen))
        angles = np.mod(np.angle(spectra), 2 * math.pi)
        pairs = unordered(angles, gen)
        edges = np.linspace(0.0, 2 * math.pi, BINS + 1)
        width = np.diff(edges)
        cosines = np.diff(np.sin(edges))
        sines = -np.diff(np.cos(edges))
        # density (1 - cos(a - b)) / (4 pi^2)
        expected = (
            np.outer(width, width)
            - np.outer(cosines, cosines)
            - np.outer(sines, sines)
        ) / (4 * math.pi**2)
        assert expected.sum() == pytest.approx(1.0)
        assert chi_square_pvalue(pairs, edges, expected) > SIGNIFICANCE


class TestDenseEquivalence:
    @pytest.mark.parametrize("k", [2, 4, 8])
    def test_pooled_eigenvalues(self, k):
        matrices = 100000 // k
        gen = RngState(seed=k).generator()
        diag, offdiag = sample_tridiag_batch(Measure.GAUSSIAN_STD, k, matrices, gen)
        tridiagonal = np.concatenate(
            [eigvalsh_tridiagonal(diag[i], offdiag[i]) for i in range(matrices)]
        )
        dense = math.sqrt(2.0) * np.concatenate(
            [
                np.linalg.eigvalsh(sample_gue_dense_oracle(k, gen))
                for _ in range(matrices)
            ]
        )
        result = stats.ks_2samp(tridiagonal, dense)
        assert result.statistic < 0.01
        assert result.pvalue > SIGNIFICANCE


class TestEigensolver:
    def test_random_tridiagonals(self):
        gen = RngState(seed=104).generator()
        for _ in range(200):
            k = int(gen.integers(1, 65))
            diag = gen.standard_normal(k) * 10.0 ** gen.uniform(-3, 3)
            offdiag = gen.standard_normal(k - 1)
            found = solve_eigenvalues(diag, offdiag, "ql")
            dense = np.diag(diag) + np.diag(offdiag, 1) + np.diag(offdiag, -1)
            expected = np.linalg.eigvalsh(dense)
            scale = max(1.0, np.linalg.norm(dense))
            assert np.max(np.abs(found - expected)) <= 1e-10 * scale
            assert abs(np.sum(found) - np.trace(dense)) <= 1e-10 * scale * k
            assert np.sum(found**2) == pytest.approx(np.sum(dense**2), rel=1e-10)


class TestRepulsion:
    def test_dpp_gaps_exceed_iid_gaps(self):
        d, trials = 15, 10000
        base = RngState(seed=105)
        dpp, iid = [], []
        for trial in range(trials):
            gen = base.child(trial).generator()
            nodes = sample_dpp_nodes(Measure.UNIFORM_SYMMETRIC, d, gen, "lapack").nodes
            dpp.append(np.min(np.diff(nodes)))
            nodes = sample_leverage_nodes(
                Measure.UNIFORM_SYMMETRIC, d, d + 1, gen, "lapack"
            ).nodes
            iid.append(np.min(np.diff(nodes)))
        assert np.median(dpp) > np.median(iid)
