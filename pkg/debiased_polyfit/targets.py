import math
import re
from typing import Any, Callable, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing_extensions import Annotated, Literal

from .errors import TargetSpecError, UnsupportedMeasureError
from .fields import NumericArray
from .orthopoly import (
    Measure,
    best_fit_coeffs,
    build_basis,
    eval_basis,
    gauss_rule,
    integrate,
)

TWO_PI = 2.0 * math.pi

_PI_NUMBER = re.compile(
    r"^(?P<sign>[+-]?)(?P<mult>\d+\.?\d*|\.\d+)?"
    r"\s*\*?\s*pi(?:\s*/\s*(?P<div>\d*\.?\d+))?$"
)


class Target(BaseModel):
    """
    A function with known breakpoints. Real targets take points on the line,
    circle targets take unit-modulus complex points.
    """

    model_config = ConfigDict(frozen=True)

    def __call__(self, t) -> np.ndarray:
        raise NotImplementedError

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return ()

    @property
    def spec(self) -> str:
        raise NotImplementedError


class IndicatorTarget(Target):
    kind: Literal["indicator"] = "indicator"
    a: float
    b: float

    @model_validator(mode="after")
    def check_bounds(self) -> "IndicatorTarget":
        if not self.a < self.b:
            raise ValueError("indicator bounds must satisfy a < b")
        return self

    def __call__(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=np.float64)
        return ((t >= self.a) & (t <= self.b)).astype(np.float64)

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return (self.a, self.b)

    @property
    def spec(self) -> str:
        return f"indicator:{self.a!r},{self.b!r}"


class ArcTarget(Target):
    """
    Indicator of the arc of angles [a, b] on the unit circle.
    """

    kind: Literal["arc"] = "arc"
    a: float
    b: float

    @model_validator(mode="after")
    def check_bounds(self) -> "ArcTarget":
        if not 0.0 < self.b - self.a <= TWO_PI:
            raise ValueError("arc must satisfy 0 < b - a <= 2 pi")
        return self

    def __call__(self, z) -> np.ndarray:
        theta = np.angle(np.asarray(z, dtype=np.complex128))
        offset = np.mod(theta - self.a, TWO_PI)
        return (offset <= self.b - self.a).astype(np.float64)

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return (self.a % TWO_PI, self.b % TWO_PI)

    @property
    def spec(self) -> str:
        return f"arc:{self.a!r},{self.b!r}"

    def fourier_coefficients(self, d: int) -> np.ndarray:
        k = np.arange(1, d + 1)
        coefficients = np.empty(d + 1, dtype=np.complex128)
        coefficients[0] = (self.b - self.a) / TWO_PI
        coefficients[1:] = (np.exp(-1j * k * self.a) - np.exp(-1j * k * self.b)) / (
            1j * k * TWO_PI
        )
        return coefficients


class PolynomialTarget(Target):
    """
    Polynomial with coefficients in the power basis t^k (or z^k on the circle).
    """

    kind: Literal["poly"] = "poly"
    coefficients: Tuple[float, ...] = Field(min_length=1)

    def __call__(self, t) -> np.ndarray:
        return np.polynomial.polynomial.polyval(np.asarray(t), self.coefficients)

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def spec(self) -> str:
        return "poly:" + ",".join(repr(c) for c in self.coefficients)


class FunctionTarget(Target):
    """
    Arbitrary vectorized callable. Not serializable; list kinks and jumps in
    ``points`` so that quadrature can split there.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    kind: Literal["function"] = "function"
    func: Callable[[Any], Any]
    points: Tuple[float, ...] = ()

    def __call__(self, t) -> np.ndarray:
        return np.asarray(self.func(t))

    @property
    def breakpoints(self) -> Tuple[float, ...]:
        return self.points

    @property
    def spec(self) -> str:
        return "function"


TargetSpec = Annotated[
    Union[IndicatorTarget, ArcTarget, PolynomialTarget], Field(discriminator="kind")
]


def parse_number(text: str) -> float:
    """
    Parse a float or a multiple of pi such as ``3pi/4``, ``-pi`` or ``2*pi``.
    """
    text = text.strip().lower()
    match = _PI_NUMBER.match(text)
    if match:
        mult = float(match.group("mult")) if match.group("mult") else 1.0
        div = float(match.group("div")) if match.group("div") else 1.0
        if div == 0.0:
            raise TargetSpecError(f"invalid number: {text!r}")
        value = mult * math.pi / div
        return -value if match.group("sign") == "-" else value
    try:
        return float(text)
    except ValueError:
        raise TargetSpecError(f"invalid number: {text!r}")


def parse_target(text: str) -> Target:
    """
    Parse ``indicator:a,b``, ``arc:a,b`` or ``poly:c0,c1,...``.
    """
    kind, sep, rest = text.strip().partition(":")
    if not sep or not rest.strip():
        raise TargetSpecError(f"invalid target: {text!r}")
    values = [parse_number(piece) for piece in rest.split(",")]
    try:
        if kind == "indicator" and len(values) == 2:
            return IndicatorTarget(a=values[0], b=values[1])
        if kind == "arc" and len(values) == 2:
            return ArcTarget(a=values[0], b=values[1])
        if kind == "poly":
            return PolynomialTarget(coefficients=tuple(values))
    except ValueError as e:
        raise TargetSpecError(f"invalid target {text!r}: {e}")
    raise TargetSpecError(f"invalid target: {text!r}")


def default_target(measure: Measure) -> Target:
    if measure is Measure.UNIFORM_SYMMETRIC:
        return IndicatorTarget(a=-0.5, b=0.5)
    if measure is Measure.GAUSSIAN_STD:
        return IndicatorTarget(a=-1.0, b=1.0)
    return ArcTarget(a=3.0 * math.pi / 4.0, b=5.0 * math.pi / 4.0)


def check_target_measure(target: Target, measure: Measure) -> None:
    if isinstance(target, IndicatorTarget) and not measure.is_real:
        raise UnsupportedMeasureError("indicator targets need a real measure")
    if isinstance(target, ArcTarget) and measure.is_real:
        raise UnsupportedMeasureError("arc targets need the circle measure")


class BestFit(BaseModel):
    """
    Best degree-d approximation p* of a target: its coefficients, E|f|^2 and
    the optimal error E|p* - f|^2.
    """

    model_config = ConfigDict(frozen=True)

    measure: Measure
    degree: int
    coefficients: NumericArray
    second_moment: float
    residual: float


def _real_best_fit(measure: Measure, d: int, target: Target):
    basis = build_basis(measure, d)
    if isinstance(target, PolynomialTarget):
        # exact: the integrands are polynomials of degree <= 2 * max(d, deg f)
        nodes, weights = gauss_rule(measure, max(d, target.degree) + 1)
        values = target(nodes)
        coefficients = (weights * values) @ eval_basis(basis, nodes)
        return coefficients, float(weights @ (values * values))
    coefficients = best_fit_coeffs(basis, target, target.breakpoints)
    second_moment = integrate(
        measure,
        lambda t: np.asarray(target(t), dtype=np.float64) ** 2,
        target.breakpoints,
        order=4 * (d + 1),
    )
    return coefficients, float(second_moment)


def _circle_best_fit(d: int, target: Target):
    if isinstance(target, ArcTarget):
        return target.fourier_coefficients(d), (target.b - target.a) / TWO_PI
    if isinstance(target, PolynomialTarget):
        full = np.zeros(max(d + 1, len(target.coefficients)), dtype=np.complex128)
        full[: len(target.coefficients)] = target.coefficients
        return full[: d + 1], float(np.sum(np.abs(full) ** 2))
    k = np.arange(d + 1)

    def integrand(theta: np.ndarray) -> np.ndarray:
        values = np.asarray(target(np.exp(1j * theta)), dtype=np.complex128)
        return values[:, None] * np.exp(-1j * np.outer(theta, k))

    coefficients = integrate(
        Measure.CIRCLE_UNIFORM, integrand, target.breakpoints, order=4 * (d + 1)
    )
    second_moment = integrate(
        Measure.CIRCLE_UNIFORM,
        lambda theta: np.abs(np.asarray(target(np.exp(1j * theta)))) ** 2,
        target.breakpoints,
        order=4 * (d + 1),
    )
    return coefficients, float(np.real(second_moment))


def best_fit(measure: Measure, d: int, target: Target) -> BestFit:
    check_target_measure(target, measure)
    if measure.is_real:
        coefficients, second_moment = _real_best_fit(measure, d, target)
    else:
        coefficients, second_moment = _circle_best_fit(d, target)
    energy = float(np.real(np.vdot(coefficients, coefficients)))
    residual = max(second_moment - energy, 0.0)
    return BestFit(
        measure=measure,
        degree=d,
        coefficients=coefficients,
        second_moment=second_moment,
        residual=residual,
    )
