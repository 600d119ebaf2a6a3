import argparse
import io
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ValidationError

from .config import load_config
from .errors import DebiasedPolyfitError, UsageError
from .experiments import (
    ExperimentConfig,
    relative_error,
    run_bias_study,
    run_error_curves,
    verify_trials,
)
from .orthopoly import Measure
from .randmat import RngState
from .regression import Method, PolyFit, fit, weighted_ls_fit
from .reporting import (
    format_float,
    read_trials_csv,
    render_bias_svg,
    render_curves_svg,
    write_atomic,
    write_bias_csv,
    write_curves_csv,
    write_trials_csv,
)
from .sampling import NodeSet, sample_dpp_nodes, sample_leverage_nodes
from .targets import best_fit, default_target, parse_target
from .version import __version__

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

VERIFY_TOLERANCE = 1e-10

FIT_METHODS = {
    "debiased": Method.DEBIASED,
    "leverage": Method.LEVERAGE_ONLY,
    "fourier": Method.DEBIASED,
    "roots": Method.ROOTS_OF_UNITY,
}


class FitReport(BaseModel):
    """
    What ``fit`` prints: the fit itself plus enough to reproduce and verify it.
    """

    method: str
    seed: int
    target: str
    fit: PolyFit
    error: float


def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        write_atomic(out, text.encode("utf-8"))


def _check_degree(d: int) -> None:
    if d < 0:
        raise UsageError("d must be nonnegative")


def _nodes_csv(draws: Sequence[NodeSet]) -> str:
    buffer = io.StringIO()
    complex_nodes = any(draw.is_complex for draw in draws)
    buffer.write("draw,re,im,weight\n" if complex_nodes else "draw,node,weight\n")
    for index, draw in enumerate(draws):
        for node, weight in zip(draw.nodes, draw.weights):
            if complex_nodes:
                fields = [format_float(node.real), format_float(node.imag)]
            else:
                fields = [format_float(node)]
            buffer.write(",".join([str(index), *fields, format_float(weight)]) + "\n")
    return buffer.getvalue()


def cmd_sample(args: argparse.Namespace) -> int:
    _check_degree(args.d)
    if args.count < 1:
        raise UsageError("count must be positive")
    measure = Measure.CIRCLE_UNIFORM if args.kind == "haar" else Measure(args.measure)
    base = RngState(seed=args.seed)
    if args.kind == "leverage":
        draws = [
            sample_leverage_nodes(
                measure, args.d, args.count, base.generator(), args.eigensolver
            )
        ]
    else:
        draws = [
            sample_dpp_nodes(
                measure, args.d, base.child(index).generator(), args.eigensolver
            )
            for index in range(args.count)
        ]
    if args.format == "json":
        text = json.dumps([draw.model_dump(mode="json") for draw in draws]) + "\n"
    else:
        text = _nodes_csv(draws)
    _emit(text, args.out)
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    _check_degree(args.d)
    method = FIT_METHODS[args.method]
    if args.method in ("fourier", "roots"):
        measure = Measure.CIRCLE_UNIFORM
    else:
        measure = Measure(args.measure)
    target = parse_target(args.target) if args.target else default_target(measure)
    best = best_fit(measure, args.d, target)
    result = fit(
        method,
        measure,
        args.d,
        args.n,
        target,
        RngState(seed=args.seed),
        args.eigensolver,
    )
    report = FitReport(
        method=args.method,
        seed=args.seed,
        target=target.spec,
        fit=result,
        error=relative_error(result, best, allow_exact=True),
    )
    _emit(report.model_dump_json(indent=2) + "\n", args.out)
    return EXIT_OK


def _write_outputs(kind: str, result, out_dir: Path, svg: bool) -> None:
    if kind == "bias":
        write_bias_csv(result, out_dir / "bias.csv")
        if svg:
            render_bias_svg(result, out_dir / "bias.svg")
    else:
        write_curves_csv(result, out_dir / "curves.csv")
        if svg:
            render_curves_svg(result, out_dir / "curves.svg")


def _summary(kind: str, result) -> List[dict]:
    if kind == "bias":
        return [summary.model_dump(mode="json") for summary in result.methods]
    return [point.model_dump(mode="json") for point in result.points]


def _mongo_database(args: argparse.Namespace):
    from pymongo import MongoClient

    return MongoClient(args.mongo_uri)[args.mongo_db]


def cmd_experiment(args: argparse.Namespace) -> int:
    config = load_config(args.config, kind=args.kind)
    if args.threads is not None:
        if args.threads < 1:
            raise UsageError("threads must be positive")
        config = config.model_copy(update={"workers": args.threads})
    logger.info("running %s experiment on %s", args.kind, config.measure.value)
    result = run_bias_study(config) if args.kind == "bias" else run_error_curves(config)

    out_dir = Path(args.out)
    _write_outputs(args.kind, result, out_dir, svg=not args.no_svg)
    if args.dump_trials:
        write_trials_csv(result.records, out_dir / "trials.csv")
    if args.mongo_uri:
        from .storage import store_run

        stored = store_run(
            _mongo_database(args),
            args.kind,
            config,
            result.records,
            _summary(args.kind, result),
        )
        sys.stdout.write(f"run {stored}\n")
    return EXIT_OK


def _verify_fit_report(path: str) -> bool:
    with open(path, "r", encoding="utf-8") as fp:
        report = FitReport.model_validate_json(fp.read())
    result = report.fit
    target = parse_target(report.target)
    recomputed = relative_error(
        result, best_fit(result.measure, result.degree, target), allow_exact=True
    )
    ok = abs(recomputed - report.error) <= VERIFY_TOLERANCE * max(1.0, report.error)
    if result.nodes is not None:
        refit = weighted_ls_fit(
            result.measure, result.degree, result.nodes, target(result.nodes.nodes)
        )
        scale = max(1.0, float(np.max(np.abs(result.coefficients))))
        drift = float(np.max(np.abs(refit.coefficients - result.coefficients)))
        ok = ok and drift <= VERIFY_TOLERANCE * scale
    logger.info("fit report error %r, recomputed %r", report.error, recomputed)
    return ok


def cmd_verify(args: argparse.Namespace) -> int:
    if args.run_id:
        if not args.mongo_uri:
            raise UsageError("--run-id needs --mongo-uri")
        from .storage import ExperimentRunRepository, TrialRecordRepository

        database = _mongo_database(args)
        run = ExperimentRunRepository(database).find_one_by_id(args.run_id)
        if run is None:
            raise UsageError(f"no stored run {args.run_id}")
        records = TrialRecordRepository(database).find_by_run(args.run_id)
        mismatches = verify_trials(run.config, records, VERIFY_TOLERANCE)
    elif args.trials:
        if not args.config:
            raise UsageError("--trials needs --config")
        config: ExperimentConfig = load_config(args.config)
        records = read_trials_csv(args.trials)
        mismatches = verify_trials(config, records, VERIFY_TOLERANCE)
    elif args.file:
        if _verify_fit_report(args.file):
            sys.stdout.write("ok\n")
            return EXIT_OK
        sys.stdout.write("mismatch\n")
        return EXIT_FAILURE
    else:
        raise UsageError("nothing to verify")

    for record in mismatches:
        sys.stdout.write(
            f"mismatch {record.method.value} d={record.d} n={record.n} "
            f"trial={record.trial}\n"
        )
    if mismatches:
        return EXIT_FAILURE
    sys.stdout.write(f"ok {len(records)} records\n")
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--measure",
        choices=[measure.value for measure in Measure],
        default=Measure.UNIFORM_SYMMETRIC.value,
    )
    parser.add_argument("--d", type=int, required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--eigensolver", choices=["ql", "lapack"], default="ql")
    parser.add_argument("--out", help="output file (default: stdout)")


def _add_mongo(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--mongo-uri", help="store or read runs in MongoDB")
    parser.add_argument("--mongo-db", default="debiased_polyfit")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="debiased-polyfit",
        description="Unbiased polynomial regression from random matrix nodes.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    commands = parser.add_subparsers(dest="command", required=True)

    sample = commands.add_parser("sample", help="draw evaluation nodes")
    sample.add_argument("kind", choices=["dpp", "leverage", "haar"])
    _add_common(sample)
    sample.add_argument(
        "--count", type=int, default=1, help="DPP draws, or leverage nodes"
    )
    sample.add_argument("--format", choices=["csv", "json"], default="csv")
    sample.set_defaults(handler=cmd_sample)

    fit_parser = commands.add_parser("fit", help="fit one polynomial")
    fit_parser.add_argument("method", choices=list(FIT_METHODS))
    _add_common(fit_parser)
    fit_parser.add_argument("--n", type=int, required=True)
    fit_parser.add_argument("--target", help="indicator:a,b | arc:a,b | poly:c0,...")
    fit_parser.set_defaults(handler=cmd_fit)

    experiment = commands.add_parser("experiment", help="run a bias or curves study")
    experiment.add_argument("kind", choices=["bias", "curves"])
    experiment.add_argument("config")
    experiment.add_argument("--out", default=".", help="output directory")
    experiment.add_argument("--threads", type=int, help="worker processes")
    experiment.add_argument("--no-svg", action="store_true")
    experiment.add_argument(
        "--dump-trials", action="store_true", help="also write trials.csv"
    )
    _add_mongo(experiment)
    experiment.set_defaults(handler=cmd_experiment)

    verify = commands.add_parser("verify", help="recompute reported errors")
    verify.add_argument("file", nargs="?", help="fit JSON written by fit")
    verify.add_argument("--trials", help="trials.csv written by experiment")
    verify.add_argument("--config", help="config the trials were run with")
    verify.add_argument("--run-id")
    _add_mongo(verify)
    verify.set_defaults(handler=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.handler(args)
    except UsageError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_USAGE
    except ValidationError as e:
        sys.stderr.write(f"error: {e.errors()[0]['msg']}\n")
        return EXIT_USAGE
    except DebiasedPolyfitError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_FAILURE
    except np.linalg.LinAlgError as e:
        sys.stderr.write(f"numeric failure: {e}\n")
        return EXIT_FAILURE
