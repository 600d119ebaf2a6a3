import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing_extensions import Literal

from .errors import UsageError, ZeroResidualError
from .fields import FloatArray, NumericArray
from .orthopoly import Measure, build_basis, eval_basis
from .randmat import RngState
from .regression import Method, PolyFit, fit
from .targets import (
    BestFit,
    IndicatorTarget,
    TargetSpec,
    best_fit,
    check_target_measure,
    default_target,
)
from .trieig import Eigensolver

logger = logging.getLogger(__name__)

ZERO_RESIDUAL = 1e-14
GAUSSIAN_GRID_RADIUS = 4.0
# trials handed to a worker process at once
CHUNK_SIZE = 250
# degrees for error curves when the config names none
DEFAULT_DEGREES = (10, 30)


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: Optional[Literal["bias", "curves"]] = None
    measure: Measure
    degrees: Tuple[int, ...] = Field(default=DEFAULT_DEGREES, min_length=1)
    n_values: Optional[Tuple[int, ...]] = None
    trials: int = Field(ge=1)
    target: TargetSpec
    seed: int = Field(default=0, ge=0, lt=2**64)
    methods: Tuple[Method, ...] = Field(
        default=(Method.DEBIASED, Method.LEVERAGE_ONLY), min_length=1
    )
    grid_size: int = Field(default=512, ge=2)
    eigensolver: Eigensolver = "ql"
    workers: int = Field(default=1, ge=1)

    @model_validator(mode="before")
    @classmethod
    def fill_target(cls, data: Any) -> Any:
        if isinstance(data, dict) and data.get("target") is None and "measure" in data:
            data = dict(data)
            data["target"] = default_target(Measure(data["measure"]))
        return data

    @model_validator(mode="after")
    def check_consistency(self) -> "ExperimentConfig":
        if any(d < 0 for d in self.degrees):
            raise ValueError("degrees must be nonnegative")
        for d in self.degrees:
            if any(n < d + 1 for n in self.n_grid(d)):
                raise ValueError("n must be at least d+1")
        try:
            check_target_measure(self.target, self.measure)
        except UsageError as e:
            raise ValueError(str(e))
        if isinstance(self.target, IndicatorTarget) and self.measure is (
            Measure.UNIFORM_SYMMETRIC
        ):
            if self.target.a < -1.0 or self.target.b > 1.0:
                raise ValueError("indicator bounds must lie within [-1, 1]")
        if Method.ROOTS_OF_UNITY in self.methods and self.measure.is_real:
            raise ValueError("roots_of_unity needs the circle measure")
        if len(set(self.methods)) != len(self.methods):
            raise ValueError("methods must not repeat")
        return self

    def n_grid(self, d: int) -> Tuple[int, ...]:
        if self.n_values is not None:
            return self.n_values
        return default_n_grid(d)

    def rng(self, method: Method, d: int, n: int, trial: int) -> RngState:
        return RngState(seed=self.seed).child(
            list(Method).index(method), d, n, trial
        )


def default_n_grid(d: int, points: int = 8) -> Tuple[int, ...]:
    """
    Geometric grid from d + 1 to 10 d.
    """
    upper = max(10 * d, d + 1)
    grid = np.unique(np.round(np.geomspace(d + 1, upper, points)).astype(int))
    return tuple(int(n) for n in grid)


class TrialRecord(BaseModel):
    id: Optional[str] = None
    run_id: Optional[str] = None
    method: Method
    d: int
    n: int
    trial: int
    coefficients: NumericArray
    error: float

    @model_validator(mode="after")
    def check_error(self) -> "TrialRecord":
        if not math.isfinite(self.error) or self.error < 0.0:
            raise ValueError("error must be finite and nonnegative")
        return self

    def sort_key(self, methods: Sequence[Method]) -> Tuple[int, int, int, int]:
        return (methods.index(self.method), self.d, self.n, self.trial)


def relative_error(fit: PolyFit, best: BestFit, allow_exact: bool = False) -> float:
    """
    E|p - f|^2 / E|p* - f|^2 - 1 by Parseval, which reduces to
    ||x - c||^2 / E|p* - f|^2.

    If the target is itself a degree-d polynomial the ratio is undefined; with
    ``allow_exact`` the absolute excess error ||x - c||^2 is returned instead.
    """
    difference = np.asarray(fit.coefficients) - np.asarray(best.coefficients)
    excess = float(np.real(np.vdot(difference, difference)))
    if best.residual <= ZERO_RESIDUAL:
        if allow_exact:
            return excess
        raise ZeroResidualError("target has zero residual; relative error undefined")
    return max(excess / best.residual, 0.0)


def nearest_rank(sorted_values: Sequence[float], q: float) -> float:
    rank = max(1, math.ceil(q * len(sorted_values) - 1e-9))
    return float(sorted_values[rank - 1])


class _Cell(BaseModel):
    """
    A chunk of trials for one (method, d, n) cell, shipped to a worker.
    """

    config: ExperimentConfig
    method: Method
    d: int
    n: int
    trials: Tuple[int, ...]
    best: BestFit


def _run_cell(cell: _Cell) -> List[TrialRecord]:
    config = cell.config
    records = []
    for trial in cell.trials:
        result = fit(
            cell.method,
            config.measure,
            cell.d,
            cell.n,
            config.target,
            config.rng(cell.method, cell.d, cell.n, trial),
            config.eigensolver,
        )
        records.append(
            TrialRecord(
                method=cell.method,
                d=cell.d,
                n=cell.n,
                trial=trial,
                coefficients=result.coefficients,
                error=relative_error(result, cell.best, allow_exact=True),
            )
        )
    return records


def run_trials(
    config: ExperimentConfig, cells: Iterable[Tuple[Method, int, int]]
) -> List[TrialRecord]:
    """
    Run ``config.trials`` trials for every (method, d, n) cell. Each trial has
    its own stream, so the records do not depend on the worker count.
    """
    bests = {d: best_fit(config.measure, d, config.target) for d in config.degrees}
    chunks = []
    for method, d, n in cells:
        logger.info(
            "queueing %s d=%d n=%d (%d trials)", method.value, d, n, config.trials
        )
        for start in range(0, config.trials, CHUNK_SIZE):
            stop = min(start + CHUNK_SIZE, config.trials)
            chunks.append(
                _Cell(
                    config=config,
                    method=method,
                    d=d,
                    n=n,
                    trials=tuple(range(start, stop)),
                    best=bests[d],
                )
            )
    records: List[TrialRecord] = []
    if config.workers == 1:
        for chunk in chunks:
            records.extend(_run_cell(chunk))
    else:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for chunk_records in pool.map(_run_cell, chunks):
                records.extend(chunk_records)
    records.sort(key=lambda record: record.sort_key(config.methods))
    return records


def plot_grid(measure: Measure, size: int) -> np.ndarray:
    if measure is Measure.UNIFORM_SYMMETRIC:
        return np.linspace(-1.0, 1.0, size)
    if measure is Measure.GAUSSIAN_STD:
        return np.linspace(-GAUSSIAN_GRID_RADIUS, GAUSSIAN_GRID_RADIUS, size)
    return np.linspace(0.0, 2.0 * math.pi, size, endpoint=False)


def _real_features(measure: Measure, d: int, grid: np.ndarray) -> np.ndarray:
    """
    Matrix G such that G @ r evaluates (the real part of) the polynomial whose
    real coefficient vector is r. On the circle r stacks real and imaginary
    parts.
    """
    if measure.is_real:
        return eval_basis(build_basis(measure, d), grid)
    powers = np.exp(1j * np.outer(grid, np.arange(d + 1)))
    return np.hstack([powers.real, -powers.imag])


def _as_real(coefficients: np.ndarray) -> np.ndarray:
    if np.iscomplexobj(coefficients):
        return np.concatenate(
            [np.real(coefficients), np.imag(coefficients)], axis=-1
        )
    return coefficients


class MethodBias(BaseModel):
    model_config = ConfigDict(frozen=True)

    method: Method
    mean: NumericArray
    std: NumericArray
    stderr: NumericArray
    mean_curve: FloatArray
    std_curve: FloatArray


class BiasStudyResult(BaseModel):
    """
    Mean and spread of the fitted coefficients per method, next to the
    best-fit coefficients. On the circle ``std`` and ``stderr`` hold the real
    part spread in their real part and the imaginary part spread in their
    imaginary part.
    """

    model_config = ConfigDict(frozen=True)

    config: ExperimentConfig
    d: int
    n: int
    oracle: NumericArray
    grid: FloatArray
    target_curve: FloatArray
    optimal_curve: FloatArray
    methods: Tuple[MethodBias, ...]
    records: Tuple[TrialRecord, ...] = ()


def _spread(samples: np.ndarray) -> np.ndarray:
    if samples.shape[0] < 2:
        return np.zeros(samples.shape[1:])
    return np.std(samples, axis=0, ddof=1)


def _summarize(
    method: Method, coefficients: np.ndarray, features: np.ndarray
) -> MethodBias:
    trials = coefficients.shape[0]
    if np.iscomplexobj(coefficients):
        mean = np.mean(coefficients, axis=0)
        std = _spread(coefficients.real) + 1j * _spread(coefficients.imag)
    else:
        mean = np.mean(coefficients, axis=0)
        std = _spread(coefficients)
    real = _as_real(coefficients)
    covariance = (
        np.atleast_2d(np.cov(real, rowvar=False))
        if trials > 1
        else np.zeros((real.shape[1], real.shape[1]))
    )
    variance = np.einsum("ij,jk,ik->i", features, covariance, features)
    return MethodBias(
        method=method,
        mean=mean,
        std=std,
        stderr=std / math.sqrt(trials),
        mean_curve=features @ _as_real(mean),
        std_curve=np.sqrt(np.maximum(variance, 0.0)),
    )


def run_bias_study(config: ExperimentConfig) -> BiasStudyResult:
    """
    Run the trials of every method at a single (d, n) and summarize the mean
    and spread of the coefficients and of the fitted polynomial on a grid.
    """
    if len(config.degrees) != 1:
        raise UsageError("a bias study needs exactly one degree")
    if config.n_values is None or len(config.n_values) != 1:
        raise UsageError("a bias study needs exactly one n")
    d, n = config.degrees[0], config.n_values[0]
    records = run_trials(config, [(method, d, n) for method in config.methods])
    best = best_fit(config.measure, d, config.target)

    grid = plot_grid(config.measure, config.grid_size)
    features = _real_features(config.measure, d, grid)
    summaries = []
    for method in config.methods:
        coefficients = np.array(
            [record.coefficients for record in records if record.method is method]
        )
        summaries.append(_summarize(method, coefficients, features))

    points = grid if config.measure.is_real else np.exp(1j * grid)
    return BiasStudyResult(
        config=config,
        d=d,
        n=n,
        oracle=best.coefficients,
        grid=grid,
        target_curve=np.real(config.target(points)),
        optimal_curve=features @ _as_real(np.asarray(best.coefficients)),
        methods=tuple(summaries),
        records=tuple(records),
    )


def check_unbiased(result: BiasStudyResult, k_se: float = 4.0) -> Dict[Method, bool]:
    """
    Whether every mean coefficient lies within ``k_se`` standard errors of the
    best-fit coefficient, per method.
    """
    oracle = _as_real(np.asarray(result.oracle))
    verdicts = {}
    for summary in result.methods:
        deviation = np.abs(_as_real(np.asarray(summary.mean)) - oracle)
        stderr = _as_real(np.asarray(summary.stderr))
        if not np.iscomplexobj(summary.stderr) and np.iscomplexobj(result.oracle):
            stderr = np.concatenate([stderr, stderr])
        allowed = k_se * stderr + 1e-10 * (1.0 + np.abs(oracle))
        verdicts[summary.method] = bool(np.all(deviation <= allowed))
    return verdicts


class CurvePoint(BaseModel):
    model_config = ConfigDict(frozen=True)

    method: Method
    d: int
    n: int
    q10: float
    median: float
    q90: float
    trials: int


class ErrorCurves(BaseModel):
    model_config = ConfigDict(frozen=True)

    config: ExperimentConfig
    points: Tuple[CurvePoint, ...]
    records: Tuple[TrialRecord, ...] = ()

    def point(self, method: Method, d: int, n: int) -> CurvePoint:
        for point in self.points:
            if (point.method, point.d, point.n) == (method, d, n):
                return point
        raise KeyError((method, d, n))


def run_error_curves(config: ExperimentConfig) -> ErrorCurves:
    """
    Median and 10%/90% nearest-rank quantiles of the relative error for every
    method, degree and n on the grid.
    """
    cells = [
        (method, d, n)
        for method in config.methods
        for d in config.degrees
        for n in config.n_grid(d)
    ]
    records = run_trials(config, cells)
    errors: Dict[Tuple[Method, int, int], List[float]] = {}
    for record in records:
        errors.setdefault((record.method, record.d, record.n), []).append(record.error)

    points = []
    for method, d, n in cells:
        values = sorted(errors[(method, d, n)])
        points.append(
            CurvePoint(
                method=method,
                d=d,
                n=n,
                q10=nearest_rank(values, 0.1),
                median=nearest_rank(values, 0.5),
                q90=nearest_rank(values, 0.9),
                trials=len(values),
            )
        )
    return ErrorCurves(config=config, points=tuple(points), records=tuple(records))


def verify_trials(
    config: ExperimentConfig, records: Iterable[TrialRecord], tol: float = 1e-10
) -> List[TrialRecord]:
    """
    Recompute every record's error from its coefficients; return the records
    that disagree with their stored error.
    """
    bests: Dict[int, BestFit] = {}
    mismatches = []
    for record in records:
        if record.d not in bests:
            bests[record.d] = best_fit(config.measure, record.d, config.target)
        recomputed = relative_error(
            PolyFit(
                measure=config.measure,
                degree=record.d,
                coefficients=record.coefficients,
                n=record.n,
            ),
            bests[record.d],
            allow_exact=True,
        )
        if abs(recomputed - record.error) > tol * max(1.0, abs(record.error)):
            mismatches.append(record)
    return mismatches
