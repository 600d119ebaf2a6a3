"""
CSV and SVG output for experiment results.

Every file is written to a temporary sibling first and renamed into place, so
a reader never sees a partial file. Floats carry 17 significant digits and the
SVG output has a fixed hash salt and no date, so that repeated runs produce
identical bytes.
"""

import csv
import io
import json
import logging
import os
import tempfile
from pathlib import Path
from typing import Iterable, List, Sequence, Union

import matplotlib
import numpy as np
from matplotlib.figure import Figure

from .experiments import BiasStudyResult, ErrorCurves, TrialRecord
from .fields import serialize_array
from .regression import Method

logger = logging.getLogger(__name__)

PathLike = Union[str, "os.PathLike[str]"]

BIAS_FIELDS = ["method", "part", "coeff_index", "oracle", "mean", "std", "stderr"]
CURVES_FIELDS = ["method", "d", "n", "q10", "median", "q90", "trials"]
TRIALS_FIELDS = ["method", "d", "n", "trial", "error", "coefficients"]

SVG_HASH_SALT = "debiased-polyfit"


def format_float(value: float) -> str:
    return "%.17g" % float(value)


def write_atomic(path: PathLike, data: bytes) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, temp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.")
    try:
        with os.fdopen(fd, "wb") as fp:
            fp.write(data)
        os.replace(temp, target)
    except BaseException:
        os.unlink(temp)
        raise
    logger.debug("wrote %s (%d bytes)", target, len(data))


def _csv_bytes(fieldnames: Sequence[str], rows: Iterable[Sequence[str]]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(fieldnames)
    writer.writerows(rows)
    return buffer.getvalue().encode("utf-8")


def _parts(values) -> List[tuple]:
    array = np.asarray(values)
    if np.iscomplexobj(array):
        return [("real", array.real), ("imag", array.imag)]
    return [("real", array)]


def bias_rows(result: BiasStudyResult) -> List[List[str]]:
    rows = []
    oracle_parts = dict(_parts(result.oracle))
    for summary in result.methods:
        mean_parts = dict(_parts(summary.mean))
        std_parts = dict(_parts(summary.std))
        stderr_parts = dict(_parts(summary.stderr))
        for part, oracle in oracle_parts.items():
            for index in range(len(oracle)):
                rows.append(
                    [
                        summary.method.value,
                        part,
                        str(index),
                        format_float(oracle[index]),
                        format_float(mean_parts[part][index]),
                        format_float(std_parts.get(part, std_parts["real"])[index]),
                        format_float(
                            stderr_parts.get(part, stderr_parts["real"])[index]
                        ),
                    ]
                )
    return rows


def write_bias_csv(result: BiasStudyResult, path: PathLike) -> None:
    write_atomic(path, _csv_bytes(BIAS_FIELDS, bias_rows(result)))


def write_curves_csv(curves: ErrorCurves, path: PathLike) -> None:
    rows = [
        [
            point.method.value,
            str(point.d),
            str(point.n),
            format_float(point.q10),
            format_float(point.median),
            format_float(point.q90),
            str(point.trials),
        ]
        for point in curves.points
    ]
    write_atomic(path, _csv_bytes(CURVES_FIELDS, rows))


def _encode_coefficients(coefficients: np.ndarray) -> str:
    return json.dumps(serialize_array(coefficients), separators=(",", ":"))


def write_trials_csv(records: Iterable[TrialRecord], path: PathLike) -> None:
    rows = [
        [
            record.method.value,
            str(record.d),
            str(record.n),
            str(record.trial),
            format_float(record.error),
            _encode_coefficients(record.coefficients),
        ]
        for record in records
    ]
    write_atomic(path, _csv_bytes(TRIALS_FIELDS, rows))


def read_trials_csv(path: PathLike) -> List[TrialRecord]:
    with open(path, newline="", encoding="utf-8") as fp:
        reader = csv.DictReader(fp)
        if reader.fieldnames != TRIALS_FIELDS:
            raise ValueError(f"{path}: expected columns {','.join(TRIALS_FIELDS)}")
        return [
            TrialRecord(
                method=Method(row["method"]),
                d=int(row["d"]),
                n=int(row["n"]),
                trial=int(row["trial"]),
                error=float(row["error"]),
                coefficients=json.loads(row["coefficients"]),
            )
            for row in reader
        ]


def _svg_bytes(figure: Figure) -> bytes:
    buffer = io.BytesIO()
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT}):
        figure.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()


def render_bias_svg(result: BiasStudyResult, path: PathLike) -> None:
    """
    Target, best fit and the mean fitted polynomial of each method with a
    one standard deviation band.
    """
    figure = Figure(figsize=(6.4, 4.0))
    ax = figure.add_subplot()
    grid = np.asarray(result.grid)
    ax.plot(grid, result.target_curve, color="black", linewidth=1.0, label="target")
    ax.plot(
        grid,
        result.optimal_curve,
        color="black",
        linestyle="--",
        linewidth=1.0,
        label="best fit",
    )
    for summary in result.methods:
        (line,) = ax.plot(grid, summary.mean_curve, label=summary.method.value)
        ax.fill_between(
            grid,
            summary.mean_curve - summary.std_curve,
            summary.mean_curve + summary.std_curve,
            color=line.get_color(),
            alpha=0.2,
            linewidth=0.0,
        )
    ax.set_xlabel("angle" if not result.config.measure.is_real else "t")
    ax.set_title(f"{result.config.measure.value}, d={result.d}, n={result.n}")
    ax.legend(loc="best", fontsize=8)
    figure.tight_layout()
    write_atomic(path, _svg_bytes(figure))


def render_curves_svg(curves: ErrorCurves, path: PathLike) -> None:
    """
    Median relative error against n with the 10%-90% band, one panel per
    degree.
    """
    degrees = sorted({point.d for point in curves.points})
    figure = Figure(figsize=(4.0 * len(degrees), 3.6))
    axes = figure.subplots(1, len(degrees), squeeze=False)[0]
    for ax, d in zip(axes, degrees):
        for method in curves.config.methods:
            points = [p for p in curves.points if p.d == d and p.method is method]
            if not points:
                continue
            n = [p.n for p in points]
            (line,) = ax.plot(
                n, [p.median for p in points], marker="o", label=method.value
            )
            ax.fill_between(
                n,
                [p.q10 for p in points],
                [p.q90 for p in points],
                color=line.get_color(),
                alpha=0.2,
                linewidth=0.0,
            )
        ax.set_xscale("log")
        ax.set_yscale("log", nonpositive="mask")
        ax.set_xlabel("n")
        ax.set_title(f"d={d}")
        ax.grid(True, alpha=0.3)
    axes[0].set_ylabel("relative error")
    axes[-1].legend(loc="best", fontsize=8)
    figure.tight_layout()
    write_atomic(path, _svg_bytes(figure))
