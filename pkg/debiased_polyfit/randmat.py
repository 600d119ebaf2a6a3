import math
from typing import Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from scipy.linalg import qr

from .errors import UnsupportedMeasureError
from .fields import FloatArray
from .orthopoly import Measure

TWO_PI = 2.0 * math.pi


class RngState(BaseModel):
    """
    Seed plus a stream path. Each state owns an independent counter-based
    (Philox) stream; identical states reproduce identical draws.
    """

    model_config = ConfigDict(frozen=True)

    seed: int = Field(ge=0, lt=2**64)
    stream: Tuple[int, ...] = ()

    @field_validator("stream")
    @classmethod
    def check_stream(cls, value: Tuple[int, ...]) -> Tuple[int, ...]:
        if any(key < 0 or key >= 2**64 for key in value):
            raise ValueError("stream keys must be 64-bit unsigned integers")
        return value

    def child(self, *keys: int) -> "RngState":
        return RngState(seed=self.seed, stream=self.stream + tuple(keys))

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.seed, spawn_key=self.stream)
        return np.random.Generator(np.random.Philox(sequence))


RngLike = Union[RngState, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, RngState):
        return rng.generator()
    return rng


class TridiagonalMatrix(BaseModel):
    model_config = ConfigDict(frozen=True)

    diag: FloatArray
    offdiag: FloatArray

    @model_validator(mode="after")
    def check_shape(self) -> "TridiagonalMatrix":
        if len(self.diag) < 1:
            raise ValueError("matrix must have at least one row")
        if len(self.offdiag) != len(self.diag) - 1:
            raise ValueError("offdiag must have k - 1 entries")
        if not (np.all(np.isfinite(self.diag)) and np.all(np.isfinite(self.offdiag))):
            raise ValueError("entries must be finite")
        return self

    @property
    def k(self) -> int:
        return len(self.diag)

    def to_dense(self) -> np.ndarray:
        return (
            np.diag(self.diag)
            + np.diag(self.offdiag, k=1)
            + np.diag(self.offdiag, k=-1)
        )

    def norm(self) -> float:
        """
        Frobenius norm.
        """
        return float(
            math.sqrt(
                float(np.sum(self.diag**2)) + 2.0 * float(np.sum(self.offdiag**2))
            )
        )


def sample_chi(m, size, rng: RngLike) -> np.ndarray:
    """
    Chi variates with m degrees of freedom, drawn as sqrt(2 Gamma(m/2, 1)).
    """
    gen = as_generator(rng)
    return np.sqrt(2.0 * gen.gamma(np.asarray(m, dtype=np.float64) / 2.0, size=size))


def _gue_entries(k: int, size: int, gen: np.random.Generator):
    diag = gen.standard_normal((size, k))
    if k == 1:
        return diag, np.zeros((size, 0))
    dof = 2.0 * np.arange(1, k)
    offdiag = sample_chi(dof, (size, k - 1), gen) / math.sqrt(2.0)
    return diag, offdiag


def _jacobi_entries(k: int, size: int, gen: np.random.Generator):
    i = np.arange(1, 2 * k, dtype=np.float64)
    even = i % 2 == 0
    alpha = np.where(even, (2 * k - i) / 2.0, (2 * k - i + 1) / 2.0)
    beta = np.where(even, (2 * k - i + 2) / 2.0, (2 * k - i + 1) / 2.0)
    # column j + 1 holds p_j, with p_{-1} = p_0 = 0
    p = np.zeros((size, 2 * k + 1))
    p[:, 2:] = gen.beta(alpha, beta, size=(size, 2 * k - 1))

    rows = np.arange(1, k + 1)
    diag = p[:, 2 * rows - 1] * (1.0 - p[:, 2 * rows - 2]) + p[:, 2 * rows] * (
        1.0 - p[:, 2 * rows - 1]
    )
    rows = np.arange(1, k)
    offdiag = np.sqrt(
        p[:, 2 * rows]
        * (1.0 - p[:, 2 * rows - 1])
        * p[:, 2 * rows + 1]
        * (1.0 - p[:, 2 * rows])
    )
    # Y -> 2Y - I moves the spectrum from [0, 1] to [-1, 1]
    return 2.0 * diag - 1.0, 2.0 * offdiag


_ENTRY_SAMPLERS = {
    Measure.GAUSSIAN_STD: _gue_entries,
    Measure.UNIFORM_SYMMETRIC: _jacobi_entries,
}


def sample_tridiag_batch(
    measure: Measure, k: int, size: int, rng: RngLike
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Draw ``size`` independent tridiagonal models at once. Returns arrays of
    shape ``(size, k)`` and ``(size, k - 1)``.
    """
    if k < 1:
        raise ValueError("k must be positive")
    try:
        sampler = _ENTRY_SAMPLERS[measure]
    except KeyError:
        raise UnsupportedMeasureError(f"no tridiagonal model for {measure.value}")
    return sampler(k, size, as_generator(rng))


def sample_gue_tridiag(k: int, rng: RngLike) -> TridiagonalMatrix:
    """
    Tridiagonal model of the Gaussian ensemble: eigenvalues have joint density
    proportional to prod |l_i - l_j|^2 prod phi(l_i).
    """
    diag, offdiag = sample_tridiag_batch(Measure.GAUSSIAN_STD, k, 1, rng)
    return TridiagonalMatrix(diag=diag[0], offdiag=offdiag[0])


def sample_jacobi_tridiag(k: int, rng: RngLike) -> TridiagonalMatrix:
    """
    Killip-Nenciu model mapped to [-1, 1]: eigenvalues have joint density
    proportional to prod |t_i - t_j|^2 on [-1, 1]^k.
    """
    diag, offdiag = sample_tridiag_batch(Measure.UNIFORM_SYMMETRIC, k, 1, rng)
    return TridiagonalMatrix(diag=diag[0], offdiag=offdiag[0])


def sample_gue_dense_oracle(k: int, rng: RngLike) -> np.ndarray:
    """
    Dense Hermitian matrix with density proportional to exp(-||X||_F^2).

    Its eigenvalues are those of the tridiagonal Gaussian model scaled by
    1/sqrt(2).
    """
    if k < 1:
        raise ValueError("k must be positive")
    gen = as_generator(rng)
    g = (gen.standard_normal((k, k)) + 1j * gen.standard_normal((k, k))) / math.sqrt(
        2.0
    )
    return (g + g.conj().T) / 2.0


def sample_haar_unitary(k: int, rng: RngLike) -> np.ndarray:
    """
    Haar-random unitary from the QR factorization of a complex Ginibre
    matrix, with the columns rescaled by the phases of diag(R).
    """
    if k < 1:
        raise ValueError("k must be positive")
    gen = as_generator(rng)
    z = (gen.standard_normal((k, k)) + 1j * gen.standard_normal((k, k))) / math.sqrt(
        2.0
    )
    q, r = qr(z)
    diag = np.diag(r)
    return q * (diag / np.abs(diag))


def sample_haar_unitary_batch(k: int, size: int, rng: RngLike) -> np.ndarray:
    """
    Draw ``size`` Haar-random unitaries at once, shape ``(size, k, k)``.
    """
    if k < 1:
        raise ValueError("k must be positive")
    gen = as_generator(rng)
    shape = (size, k, k)
    z = (gen.standard_normal(shape) + 1j * gen.standard_normal(shape)) / math.sqrt(2.0)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (diag / np.abs(diag))[:, None, :]


def sample_haar_unitary_eigs(k: int, rng: RngLike) -> np.ndarray:
    """
    Eigenvalues of a Haar-random unitary, sorted by argument in [0, 2 pi).
    """
    eigenvalues = np.linalg.eigvals(sample_haar_unitary(k, rng))
    return eigenvalues[np.argsort(np.mod(np.angle(eigenvalues), TWO_PI))]
