"""
Eigenvalues of real symmetric tridiagonal matrices.

The default solver is the implicit QL method with Wilkinson shifts, falling
back to Sturm-sequence bisection when an eigenvalue does not converge.
"""

import logging
import math
import sys
from typing import List, Sequence

import numpy as np
from scipy.linalg import eigvalsh_tridiagonal
from typing_extensions import Literal

from .errors import EigensolverError
from .randmat import TridiagonalMatrix

logger = logging.getLogger(__name__)

EPS = sys.float_info.epsilon
MAX_SWEEPS = 50
MAX_BISECTIONS = 200

Eigensolver = Literal["ql", "lapack"]


class _NoConvergence(Exception):
    pass


def _ql_implicit(diag: Sequence[float], offdiag: Sequence[float]) -> List[float]:
    d = [float(x) for x in diag]
    n = len(d)
    e = [float(x) for x in offdiag] + [0.0]

    for l in range(n):  # noqa: E741
        sweeps = 0
        while True:
            m = l
            while m < n - 1:
                if abs(e[m]) <= EPS * (abs(d[m]) + abs(d[m + 1])):
                    break
                m += 1
            if m == l:
                break
            if sweeps == MAX_SWEEPS:
                raise _NoConvergence(l)
            sweeps += 1

            g = (d[l + 1] - d[l]) / (2.0 * e[l])
            r = math.hypot(g, 1.0)
            g = d[m] - d[l] + e[l] / (g + math.copysign(r, g))
            s = c = 1.0
            p = 0.0
            i = m - 1
            underflow = False
            while i >= l:
                f = s * e[i]
                b = c * e[i]
                r = math.hypot(f, g)
                e[i + 1] = r
                if r == 0.0:
                    d[i + 1] -= p
                    e[m] = 0.0
                    underflow = True
                    break
                s = f / r
                c = g / r
                g = d[i + 1] - p
                r = (d[i] - g) * s + 2.0 * c * b
                p = s * r
                d[i + 1] = g + p
                g = c * r - b
                i -= 1
            if underflow:
                continue
            d[l] -= p
            e[l] = g
            e[m] = 0.0

    d.sort()
    return d


def _sturm_count(diag: Sequence[float], offdiag: Sequence[float], x: float) -> int:
    """
    Number of eigenvalues strictly below x.
    """
    count = 0
    q = 1.0
    for i, alpha in enumerate(diag):
        beta_sq = offdiag[i - 1] ** 2 if i > 0 else 0.0
        q = alpha - x - beta_sq / q
        if q == 0.0:
            q = -EPS * (abs(alpha) + abs(x) + EPS)
        if q < 0.0:
            count += 1
    return count


def _bisection(diag: Sequence[float], offdiag: Sequence[float]) -> List[float]:
    d = [float(x) for x in diag]
    e = [float(x) for x in offdiag]
    n = len(d)
    radius = [
        (abs(e[i - 1]) if i > 0 else 0.0) + (abs(e[i]) if i < n - 1 else 0.0)
        for i in range(n)
    ]
    lower = min(d[i] - radius[i] for i in range(n))
    upper = max(d[i] + radius[i] for i in range(n))
    span = max(abs(lower), abs(upper), EPS)
    lower -= EPS * span
    upper += EPS * span

    eigenvalues = []
    for j in range(n):
        lo, hi = lower, upper
        for _ in range(MAX_BISECTIONS):
            if hi - lo <= 2.0 * EPS * max(abs(lo), abs(hi)) + EPS * span:
                break
            mid = 0.5 * (lo + hi)
            if _sturm_count(d, e, mid) > j:
                hi = mid
            else:
                lo = mid
        else:
            raise EigensolverError(f"bisection did not converge for eigenvalue {j}")
        eigenvalues.append(0.5 * (lo + hi))
    return eigenvalues


def solve_eigenvalues(
    diag: Sequence[float], offdiag: Sequence[float], eigensolver: Eigensolver = "ql"
) -> np.ndarray:
    """
    Ascending eigenvalues from raw diagonal and off-diagonal entries.
    """
    if len(diag) == 1:
        return np.array([float(diag[0])])
    if eigensolver == "lapack":
        return eigvalsh_tridiagonal(np.asarray(diag), np.asarray(offdiag))
    try:
        return np.array(_ql_implicit(diag, offdiag))
    except _NoConvergence as e:
        logger.warning(
            "QL did not converge for eigenvalue %s after %d sweeps, "
            "falling back to bisection",
            e.args[0],
            MAX_SWEEPS,
        )
        return np.array(_bisection(diag, offdiag))


def tridiag_eigenvalues(matrix: TridiagonalMatrix) -> np.ndarray:
    return solve_eigenvalues(matrix.diag, matrix.offdiag, "ql")


def eigenvalues(
    matrix: TridiagonalMatrix, eigensolver: Eigensolver = "ql"
) -> np.ndarray:
    return solve_eigenvalues(matrix.diag, matrix.offdiag, eigensolver)


def sturm_count(matrix: TridiagonalMatrix, x: float) -> int:
    return _sturm_count(
        [float(v) for v in matrix.diag], [float(v) for v in matrix.offdiag], x
    )


def bisection_eigenvalues(matrix: TridiagonalMatrix) -> np.ndarray:
    return np.array(_bisection(matrix.diag, matrix.offdiag))
