import logging
import math
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.linalg import eigh_tridiagonal
from scipy.special import roots_legendre

from .errors import QuadratureError, UnsupportedMeasureError
from .fields import FloatArray

logger = logging.getLogger(__name__)

# Gaussian integrals are taken over [-GAUSSIAN_CUTOFF, GAUSSIAN_CUTOFF]; the
# neglected tail mass is below 1e-31.
GAUSSIAN_CUTOFF = 12.0
MAX_QUADRATURE_ORDER = 2048

Integrand = Callable[[np.ndarray], np.ndarray]


class Measure(str, Enum):
    GAUSSIAN_STD = "gaussian"
    UNIFORM_SYMMETRIC = "uniform"
    CIRCLE_UNIFORM = "circle"

    @property
    def is_real(self) -> bool:
        return self is not Measure.CIRCLE_UNIFORM

    @property
    def support(self) -> Tuple[float, float]:
        """
        Integration domain. The circle is parametrized by the angle.
        """
        if self is Measure.GAUSSIAN_STD:
            return (-GAUSSIAN_CUTOFF, GAUSSIAN_CUTOFF)
        if self is Measure.UNIFORM_SYMMETRIC:
            return (-1.0, 1.0)
        return (0.0, 2.0 * math.pi)


def measure_pdf(measure: Measure, t) -> np.ndarray:
    """
    Density of the measure. On the circle the density is taken with respect to
    the angle, so it is the constant 1/(2 pi).
    """
    if measure is Measure.CIRCLE_UNIFORM:
        return np.full(np.shape(t), 1.0 / (2.0 * math.pi))
    t = np.asarray(t, dtype=np.float64)
    if measure is Measure.GAUSSIAN_STD:
        return np.exp(-0.5 * t * t) / math.sqrt(2.0 * math.pi)
    return np.where(np.abs(t) <= 1.0, 0.5, 0.0)


def recurrence(measure: Measure, size: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Orthonormal three-term recurrence coefficients ``a_0..a_{size-1}`` and
    ``b_0..b_{size-1}`` (``b_0 = 0``), so that

        t P_j(t) = b_{j+1} P_{j+1}(t) + a_j P_j(t) + b_j P_{j-1}(t)
    """
    if not measure.is_real:
        raise UnsupportedMeasureError(
            "the circle uses the monomial basis z^k, not a recurrence"
        )
    j = np.arange(size, dtype=np.float64)
    a = np.zeros(size)
    if measure is Measure.GAUSSIAN_STD:
        b = np.sqrt(j)
    else:
        b = np.zeros(size)
        b[1:] = j[1:] / np.sqrt((2.0 * j[1:] - 1.0) * (2.0 * j[1:] + 1.0))
    return a, b


class OrthoBasis(BaseModel):
    """
    Orthonormal polynomials P_0..P_d of a real measure, stored as recurrence
    coefficients.
    """

    model_config = ConfigDict(frozen=True)

    measure: Measure
    degree: int = Field(ge=0)
    a: FloatArray
    b: FloatArray
    leading: FloatArray

    @model_validator(mode="after")
    def check_lengths(self) -> "OrthoBasis":
        size = self.degree + 1
        if not (len(self.a) == len(self.b) == len(self.leading) == size):
            raise ValueError("recurrence arrays must have degree+1 entries")
        if np.any(self.b[1:] <= 0.0) or np.any(self.leading <= 0.0):
            raise ValueError("recurrence must have positive off-diagonal terms")
        return self


@lru_cache(maxsize=128)
def build_basis(measure: Measure, d: int) -> OrthoBasis:
    """
    Normalized probabilists' Hermite polynomials for the Gaussian measure and
    normalized Legendre polynomials for the uniform measure on [-1, 1].
    """
    if d < 0:
        raise ValueError("degree must be nonnegative")
    a, b = recurrence(measure, d + 1)
    leading = np.ones(d + 1)
    for j in range(1, d + 1):
        leading[j] = leading[j - 1] / b[j]
    return OrthoBasis(measure=measure, degree=d, a=a, b=b, leading=leading)


def eval_basis(basis: OrthoBasis, t) -> np.ndarray:
    """
    Evaluate ``[P_0(t), ..., P_d(t)]`` with the three-term recurrence.

    The result has shape ``np.shape(t) + (d + 1,)``.
    """
    t = np.asarray(t, dtype=np.float64)
    a, b = basis.a, basis.b
    d = basis.degree
    values = np.empty(t.shape + (d + 1,))
    values[..., 0] = 1.0
    if d >= 1:
        values[..., 1] = (t - a[0]) / b[1]
    for j in range(1, d):
        values[..., j + 1] = (
            (t - a[j]) * values[..., j] - b[j] * values[..., j - 1]
        ) / b[j + 1]
    return values


def evaluate(basis: OrthoBasis, coefficients, t) -> np.ndarray:
    return eval_basis(basis, t) @ np.asarray(coefficients)


def leverage(basis: OrthoBasis, t) -> np.ndarray:
    """
    Leverage function tau(t) = sum_i P_i(t)^2. Always at least 1.
    """
    values = eval_basis(basis, t)
    return np.sum(values * values, axis=-1)


def gauss_rule(measure: Measure, m: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    m-point Gauss rule of a real measure by Golub-Welsch. Exact for
    polynomials of degree up to 2m - 1; weights sum to 1.
    """
    if m < 1:
        raise ValueError("m must be positive")
    a, b = recurrence(measure, m)
    if m == 1:
        return a.copy(), np.ones(1)
    nodes, vectors = eigh_tridiagonal(a, b[1:])
    return nodes, vectors[0] ** 2


@lru_cache(maxsize=64)
def _legendre_rule(order: int) -> Tuple[np.ndarray, np.ndarray]:
    return roots_legendre(order)


def _panels(
    measure: Measure, breakpoints: Iterable[float]
) -> List[Tuple[float, float]]:
    lo, hi = measure.support
    cuts = {lo, hi}
    if measure is Measure.CIRCLE_UNIFORM:
        cuts.update(float(p) % hi for p in breakpoints)
        cuts.update(hi * q / 4.0 for q in range(1, 4))
    else:
        cuts.update(float(p) for p in breakpoints if lo < p < hi)
    if measure is Measure.GAUSSIAN_STD:
        cuts.update(float(x) for x in range(int(lo) + 1, int(hi)))
    ordered = sorted(cuts)
    return [(x0, x1) for x0, x1 in zip(ordered[:-1], ordered[1:]) if x1 > x0]


def _composite(
    measure: Measure,
    integrand: Integrand,
    panels: Sequence[Tuple[float, float]],
    order: int,
) -> np.ndarray:
    x, w = _legendre_rule(order)
    total: Optional[np.ndarray] = None
    for x0, x1 in panels:
        half = 0.5 * (x1 - x0)
        nodes = half * x + 0.5 * (x1 + x0)
        weights = half * w * measure_pdf(measure, nodes)
        piece = np.tensordot(weights, np.asarray(integrand(nodes)), axes=(0, 0))
        total = piece if total is None else total + piece
    assert total is not None
    return total


def integrate(
    measure: Measure,
    integrand: Integrand,
    breakpoints: Iterable[float] = (),
    order: int = 16,
    tol: float = 1e-10,
) -> np.ndarray:
    """
    Integrate ``integrand`` against the measure by piecewise Gauss-Legendre.

    The integrand must be smooth between breakpoints. The order doubles until
    two successive results agree to ``tol`` (relative to the result size).
    On the circle the integrand receives angles.
    """
    panels = _panels(measure, tuple(breakpoints))
    previous = _composite(measure, integrand, panels, order)
    while True:
        order *= 2
        if order > MAX_QUADRATURE_ORDER:
            raise QuadratureError(
                f"quadrature did not stabilize to {tol:g} "
                f"(order {MAX_QUADRATURE_ORDER})"
            )
        current = _composite(measure, integrand, panels, order)
        scale = max(1.0, float(np.max(np.abs(current), initial=0.0)))
        if float(np.max(np.abs(current - previous), initial=0.0)) <= tol * scale:
            logger.debug("quadrature converged at order %d", order)
            return current
        previous = current


def best_fit_coeffs(
    basis: OrthoBasis, f: Integrand, breakpoints: Iterable[float] = ()
) -> np.ndarray:
    """
    Coefficients ``c_k = <f, P_k>`` of the best degree-d approximation of a
    piecewise-smooth ``f`` whose kinks and jumps are listed in ``breakpoints``.
    """

    def integrand(t: np.ndarray) -> np.ndarray:
        values = np.asarray(f(t), dtype=np.float64)
        return values[:, None] * eval_basis(basis, t)

    return integrate(
        basis.measure, integrand, breakpoints, order=4 * (basis.degree + 1)
    )


def parseval_error(coefficients, optimal, second_moment: float) -> float:
    """
    E|p - f|^2 for p with the given coefficients, from the best-fit
    coefficients of f and E|f|^2.
    """
    x = np.asarray(coefficients)
    c = np.asarray(optimal)
    cross = float(np.real(np.vdot(x, c)))
    return float(second_moment - 2.0 * cross + np.real(np.vdot(x, x)))
