import math
from enum import Enum
from typing import Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from .errors import OracleDimensionError
from .fields import FloatArray, NumericArray
from .orthopoly import Measure, build_basis, leverage, measure_pdf
from .randmat import (
    RngLike,
    as_generator,
    sample_haar_unitary_eigs,
    sample_tridiag_batch,
)
from .trieig import Eigensolver, solve_eigenvalues

TWO_PI = 2.0 * math.pi


class Provenance(str, Enum):
    DPP = "dpp"
    LEVERAGE = "leverage"
    EQUISPACED = "equispaced"


def _order(nodes: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(nodes):
        return np.argsort(np.mod(np.angle(nodes), TWO_PI), kind="stable")
    return np.argsort(nodes, kind="stable")


class NodeSet(BaseModel):
    """
    Evaluation points with their regression weights 1/tau(t) (1 on the
    circle), sorted ascending (by argument on the circle).
    """

    model_config = ConfigDict(frozen=True)

    nodes: NumericArray
    weights: FloatArray
    provenance: Tuple[Provenance, ...]

    @model_validator(mode="after")
    def check_consistency(self) -> "NodeSet":
        if not (len(self.nodes) == len(self.weights) == len(self.provenance)):
            raise ValueError("nodes, weights and provenance must have equal length")
        if np.any(self.weights <= 0.0) or np.any(self.weights > 1.0 + 1e-12):
            raise ValueError("weights must lie in (0, 1]")
        if not np.all(np.isfinite(self.nodes)):
            raise ValueError("nodes must be finite")
        if np.any(np.diff(_order(self.nodes)) != 1):
            raise ValueError("nodes must be sorted")
        return self

    @property
    def n(self) -> int:
        return len(self.nodes)

    @property
    def is_complex(self) -> bool:
        return bool(np.iscomplexobj(self.nodes))

    def count(self, tag: Provenance) -> int:
        return sum(1 for p in self.provenance if p is tag)

    def merge(self, other: "NodeSet") -> "NodeSet":
        return make_nodeset(
            np.concatenate([self.nodes, other.nodes]),
            np.concatenate([self.weights, other.weights]),
            self.provenance + other.provenance,
        )


def make_nodeset(nodes, weights, provenance) -> NodeSet:
    nodes = np.asarray(nodes)
    order = _order(nodes)
    return NodeSet(
        nodes=nodes[order],
        weights=np.asarray(weights)[order],
        provenance=tuple(provenance[i] for i in order),
    )


def _weighted(measure: Measure, d: int, nodes: np.ndarray, tag: Provenance) -> NodeSet:
    if measure.is_real:
        weights = 1.0 / leverage(build_basis(measure, d), nodes)
    else:
        weights = np.ones(len(nodes))
    return make_nodeset(nodes, weights, (tag,) * len(nodes))


def sample_dpp_nodes(
    measure: Measure, d: int, rng: RngLike, eigensolver: Eigensolver = "ql"
) -> NodeSet:
    """
    d + 1 nodes from the projection DPP of the measure: eigenvalues of a
    tridiagonal model (real measures) or of a Haar unitary (circle).
    """
    if d < 0:
        raise ValueError("degree must be nonnegative")
    if measure is Measure.CIRCLE_UNIFORM:
        nodes = sample_haar_unitary_eigs(d + 1, rng)
    else:
        diag, offdiag = sample_tridiag_batch(measure, d + 1, 1, rng)
        nodes = solve_eigenvalues(diag[0], offdiag[0], eigensolver)
        if measure is Measure.UNIFORM_SYMMETRIC:
            nodes = np.clip(nodes, -1.0, 1.0)
    return _weighted(measure, d, nodes, Provenance.DPP)


def sample_leverage_nodes(
    measure: Measure, d: int, m: int, rng: RngLike, eigensolver: Eigensolver = "ql"
) -> NodeSet:
    """
    m iid nodes from the leverage score distribution mu(t) tau(t) / (d + 1).

    Each node is a uniformly chosen eigenvalue of a fresh (d + 1)-dimensional
    ensemble draw. On the circle the distribution is uniform.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    gen = as_generator(rng)
    if measure is Measure.CIRCLE_UNIFORM:
        nodes = np.exp(1j * gen.uniform(0.0, TWO_PI, size=m))
    else:
        diag, offdiag = sample_tridiag_batch(measure, d + 1, m, gen)
        picks = gen.integers(d + 1, size=m)
        nodes = np.array(
            [
                solve_eigenvalues(diag[i], offdiag[i], eigensolver)[picks[i]]
                for i in range(m)
            ],
            dtype=np.float64,
        )
        if measure is Measure.UNIFORM_SYMMETRIC:
            nodes = np.clip(nodes, -1.0, 1.0)
    return _weighted(measure, d, nodes, Provenance.LEVERAGE)


def leverage_density(measure: Measure, d: int, t) -> np.ndarray:
    """
    pdf of the leverage score distribution. On the circle it is 1/(2 pi) with
    respect to the angle.
    """
    if not measure.is_real:
        return measure_pdf(measure, t)
    return measure_pdf(measure, t) * leverage(build_basis(measure, d), t) / (d + 1)


MAX_ORACLE_SIZE = 3


def dpp_density_oracle(measure: Measure, d: int, nodes) -> float:
    """
    Unnormalized projection DPP density prod_{i<j} |t_i - t_j|^2 prod mu(t_i)
    for at most three nodes.
    """
    k = d + 1
    if k > MAX_ORACLE_SIZE:
        raise OracleDimensionError(
            f"density oracle supports at most {MAX_ORACLE_SIZE} nodes"
        )
    nodes = np.asarray(nodes)
    if nodes.shape != (k,):
        raise OracleDimensionError(f"expected {k} nodes, got {nodes.shape}")
    gaps = [abs(nodes[i] - nodes[j]) ** 2 for i in range(k) for j in range(i + 1, k)]
    density = float(np.prod(gaps)) if gaps else 1.0
    return density * float(np.prod(measure_pdf(measure, nodes)))
