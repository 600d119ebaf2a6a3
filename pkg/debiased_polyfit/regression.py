import logging
import math
from enum import Enum
from typing import Any, Callable, List, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.linalg import qr, solve_triangular

from .errors import (
    RankDeficiencyError,
    UnderdeterminedError,
    UnsupportedMeasureError,
    UsageError,
)
from .fields import NumericArray
from .orthopoly import Measure, build_basis, eval_basis
from .randmat import RngLike, as_generator
from .sampling import (
    NodeSet,
    Provenance,
    make_nodeset,
    sample_dpp_nodes,
    sample_leverage_nodes,
)
from .trieig import Eigensolver

logger = logging.getLogger(__name__)

Oracle = Callable[[np.ndarray], Any]

RANK_TOLERANCE = 1e-13
COLLISION_TOLERANCE = 1e-12


class Method(str, Enum):
    DEBIASED = "debiased"
    LEVERAGE_ONLY = "leverage_only"
    ROOTS_OF_UNITY = "roots_of_unity"


class PolyFit(BaseModel):
    """
    Fitted polynomial: coefficients in the orthonormal basis of a real measure
    or over z^0..z^d on the circle.
    """

    model_config = ConfigDict(frozen=True)

    measure: Measure
    degree: int = Field(ge=0)
    coefficients: NumericArray
    n: int
    method: Optional[Method] = None
    nodes: Optional[NodeSet] = None

    @model_validator(mode="after")
    def check_coefficients(self) -> "PolyFit":
        if len(self.coefficients) != self.degree + 1:
            raise ValueError("coefficients must have degree+1 entries")
        if not np.all(np.isfinite(self.coefficients)):
            raise ValueError("coefficients must be finite")
        return self

    def __call__(self, t) -> np.ndarray:
        if self.measure.is_real:
            return eval_basis(build_basis(self.measure, self.degree), t) @ (
                self.coefficients
            )
        return np.polynomial.polynomial.polyval(np.asarray(t), self.coefficients)


def design_matrix(measure: Measure, d: int, nodes: np.ndarray) -> np.ndarray:
    if measure.is_real:
        return eval_basis(build_basis(measure, d), nodes)
    return np.vander(np.asarray(nodes, dtype=np.complex128), d + 1, increasing=True)


def _collisions(nodes: np.ndarray) -> List[Tuple[int, int]]:
    pairs = []
    for i in range(len(nodes) - 1):
        scale = max(1.0, abs(nodes[i]))
        if abs(nodes[i + 1] - nodes[i]) <= COLLISION_TOLERANCE * scale:
            pairs.append((i, i + 1))
    return pairs


def weighted_ls_fit(
    measure: Measure,
    d: int,
    nodes: NodeSet,
    values,
    method: Optional[Method] = None,
) -> PolyFit:
    """
    Solve min_x ||S (V x - b)||_2 with V_ij = P_j(t_i) (or z_i^j),
    S = diag(sqrt(w_i)) and b_i = f(t_i), by Householder QR of S V.
    """
    if nodes.n < d + 1:
        raise UnderdeterminedError()
    values = np.asarray(values)
    if values.shape != (nodes.n,):
        raise UsageError(f"expected {nodes.n} oracle values, got shape {values.shape}")
    if not np.all(np.isfinite(values)):
        raise UsageError("oracle returned non-finite values")

    scale = np.sqrt(nodes.weights)
    system = design_matrix(measure, d, nodes.nodes) * scale[:, None]
    q, r, pivots = qr(system, mode="economic", pivoting=True)
    pivot_sizes = np.abs(np.diag(r))
    if pivot_sizes[-1] <= RANK_TOLERANCE * pivot_sizes[0]:
        raise RankDeficiencyError(_collisions(nodes.nodes))
    solution = solve_triangular(r, q.conj().T @ (values * scale))
    coefficients = np.empty_like(solution)
    coefficients[pivots] = solution
    return PolyFit(
        measure=measure,
        degree=d,
        coefficients=coefficients,
        n=nodes.n,
        method=method,
        nodes=nodes,
    )


def _evaluate(f: Oracle, nodes: NodeSet) -> np.ndarray:
    # one vectorized call: exactly n oracle evaluations
    return np.asarray(f(np.asarray(nodes.nodes)))


def debiased_fit(
    measure: Measure,
    d: int,
    n: int,
    f: Oracle,
    rng: RngLike,
    eigensolver: Eigensolver = "ql",
) -> PolyFit:
    """
    Unbiased degree-d fit from d + 1 projection-DPP nodes and n - d - 1
    leverage score nodes. E[coefficients] equals the best-fit coefficients.
    """
    if not measure.is_real:
        raise UnsupportedMeasureError("use fourier_debiased_fit on the circle")
    if n < d + 1:
        raise UnderdeterminedError()
    gen = as_generator(rng)
    nodes = sample_dpp_nodes(measure, d, gen, eigensolver).merge(
        sample_leverage_nodes(measure, d, n - d - 1, gen, eigensolver)
    )
    return weighted_ls_fit(measure, d, nodes, _evaluate(f, nodes), Method.DEBIASED)


def leverage_only_fit(
    measure: Measure,
    d: int,
    n: int,
    f: Oracle,
    rng: RngLike,
    eigensolver: Eigensolver = "ql",
    max_retries: int = 3,
) -> PolyFit:
    """
    Baseline: n iid leverage score nodes. Rank-deficient draws are redrawn up
    to ``max_retries`` times.
    """
    if n < d + 1:
        raise UnderdeterminedError()
    gen = as_generator(rng)
    attempt = 0
    while True:
        nodes = sample_leverage_nodes(measure, d, n, gen, eigensolver)
        try:
            return weighted_ls_fit(
                measure, d, nodes, _evaluate(f, nodes), Method.LEVERAGE_ONLY
            )
        except RankDeficiencyError:
            if attempt == max_retries:
                raise
            attempt += 1
            logger.info("rank deficient leverage draw, retry %d", attempt)


def fourier_debiased_fit(d: int, n: int, f: Oracle, rng: RngLike) -> PolyFit:
    """
    Unbiased estimate of the Fourier coefficients c_0..c_d from the
    eigenvalues of a Haar unitary plus n - d - 1 uniform points.
    """
    if n < d + 1:
        raise UnderdeterminedError()
    gen = as_generator(rng)
    circle = Measure.CIRCLE_UNIFORM
    nodes = sample_dpp_nodes(circle, d, gen).merge(
        sample_leverage_nodes(circle, d, n - d - 1, gen)
    )
    return weighted_ls_fit(circle, d, nodes, _evaluate(f, nodes), Method.DEBIASED)


def roots_of_unity_fit(d: int, n: int, f: Oracle, rng: RngLike) -> PolyFit:
    """
    Fit from the n-th roots of unity rotated by a uniformly random phase.
    """
    if n < d + 1:
        raise UnderdeterminedError()
    phase = as_generator(rng).uniform(0.0, 2.0 * math.pi / n)
    nodes = np.exp(1j * (phase + 2.0 * math.pi * np.arange(n) / n))
    node_set = make_nodeset(nodes, np.ones(n), (Provenance.EQUISPACED,) * n)
    return weighted_ls_fit(
        Measure.CIRCLE_UNIFORM,
        d,
        node_set,
        _evaluate(f, node_set),
        Method.ROOTS_OF_UNITY,
    )


def fit(
    method: Method,
    measure: Measure,
    d: int,
    n: int,
    f: Oracle,
    rng: RngLike,
    eigensolver: Eigensolver = "ql",
) -> PolyFit:
    """
    Run one fit with the named method. ``debiased`` on the circle is the
    Fourier variant, ``leverage_only`` on the circle uses uniform points.
    """
    if method is Method.DEBIASED:
        if measure.is_real:
            return debiased_fit(measure, d, n, f, rng, eigensolver)
        return fourier_debiased_fit(d, n, f, rng)
    if method is Method.LEVERAGE_ONLY:
        return leverage_only_fit(measure, d, n, f, rng, eigensolver)
    if measure.is_real:
        raise UnsupportedMeasureError("roots_of_unity needs the circle measure")
    return roots_of_unity_fit(d, n, f, rng)
