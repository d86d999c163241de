"""Command-line surface: fit, predict, evaluate, cv and sweep verbs.

Data goes to files, progress and timings go to stderr.  Exit codes:
0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .core import Params
from .datasets import Dataset, ParseError, load_table, mask_labels, rescale_minmax
from .harness import (
    ParamRange,
    aggregate,
    dataset_digest,
    default_ranges,
    derive_seed,
    export_results,
    make_folds,
    midpoint_params,
    run_cv_experiment,
    run_sweep,
    write_manifest,
)
from .learning import assign_cluster, fit, predict_class
from .serialization import load_model, save_model

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

_PARAM_FLAGS = ("lp", "beta", "age_wins", "e_b", "e_n", "s", "minwd", "epochs", "n_max")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on usage errors; remap to the documented 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


class UsageError(ValueError):
    pass


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _load_rescaled(path: str, label_column: int | None) -> Dataset:
    return rescale_minmax(load_table(path, label_column=label_column))


def _params_for(args, dataset_size: int) -> Params:
    """Resolve parameters from --params JSON and/or individual flags.

    Anything unspecified falls back to the midpoint of its standard
    range (age_wins scales with the dataset size).
    """
    defaults = midpoint_params(dataset_size)
    values = {name: getattr(defaults, name) for name in _PARAM_FLAGS}
    if args.params:
        try:
            loaded = json.loads(Path(args.params).read_text())
        except OSError as exc:
            raise ParseError(f"cannot read params file: {exc}")
        except json.JSONDecodeError as exc:
            raise ParseError(f"params file is not valid JSON: {exc}")
        unknown = set(loaded) - set(_PARAM_FLAGS) - {"eps_act", "var_floor"}
        if unknown:
            raise UsageError(f"unknown parameter names in params file: {sorted(unknown)}")
        values.update(loaded)
    for name in _PARAM_FLAGS:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    try:
        return Params(**values)
    except ValueError as exc:
        raise UsageError(str(exc))


def _add_param_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--params", help="JSON file of parameter values")
    for name in _PARAM_FLAGS:
        kind = int if name in ("age_wins", "epochs", "n_max") else float
        parser.add_argument(f"--{name.replace('_', '-')}", dest=name, type=kind,
                            default=None, help=f"override parameter {name}")


def _parse_fractions(text: str) -> list[float]:
    try:
        fractions = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"bad fractions list: {text!r}")
    if not fractions or any(not 0.0 <= f <= 1.0 for f in fractions):
        raise UsageError("fractions must be numbers in [0, 1]")
    return fractions


def cmd_fit(args) -> int:
    data = _load_rescaled(args.data, args.labels_column)
    params = _params_for(args, len(data))
    started = time.perf_counter()
    model = fit(data, params, seed=args.seed)
    _log(f"trained {model.n_nodes} nodes on {len(data)} rows "
         f"in {time.perf_counter() - started:.2f}s")
    save_model(model, args.out)
    _log(f"model written to {args.out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    model = load_model(args.model)
    data = _load_rescaled(args.data, args.labels_column)
    if data.m != model.m:
        raise ParseError(
            f"data has {data.m} feature columns but the model expects {model.m}")
    names = model.class_names or ()
    lines = ["row,cluster,class"]
    for i, x in enumerate(data.features):
        cluster = assign_cluster(model, x)
        label = predict_class(model, x)
        name = "" if label is None else (
            names[label] if label < len(names) else str(label))
        lines.append(f"{i},{cluster},{name}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    _log(f"{len(data)} predictions written to {args.out}")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    from .metrics import accuracy, clustering_error

    model = load_model(args.model)
    data = _load_rescaled(args.data, args.labels_column)
    if data.m != model.m:
        raise ParseError(
            f"data has {data.m} feature columns but the model expects {model.m}")
    truth = list(data.labels)
    predictions = [predict_class(model, x) for x in data.features]
    clusters = [assign_cluster(model, x) for x in data.features]
    report = {
        "accuracy": accuracy(predictions, truth),
        "ce": clustering_error(clusters, truth),
        "nodes": model.n_nodes,
        "rows": len(data),
    }
    text = json.dumps(report, indent=1)
    if args.out:
        Path(args.out).write_text(text + "\n")
        _log(f"metrics written to {args.out}")
    else:
        print(text)
    return EXIT_OK


def cmd_cv(args) -> int:
    data = _load_rescaled(args.data, args.labels_column)
    params = _params_for(args, len(data))
    fractions = _parse_fractions(args.fractions)
    folds = make_folds(data, k=args.k, repetitions=args.repetitions,
                       seed=derive_seed(args.seed, 0))
    started = time.perf_counter()
    results = run_cv_experiment(data, params, fractions, folds, seed=args.seed)
    _log(f"{len(results)} runs in {time.perf_counter() - started:.2f}s")
    export_results(results, aggregate(results), args.out,
                   dataset_name=Path(args.data).stem)
    _log(f"tables written to {args.out}")
    return EXIT_OK


def _load_ranges(path: str) -> list[ParamRange]:
    try:
        entries = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ParseError(f"cannot read ranges file: {exc}")
    except json.JSONDecodeError as exc:
        raise ParseError(f"ranges file is not valid JSON: {exc}")
    try:
        return [ParamRange(**entry) for entry in entries]
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad ranges file: {exc}")


def cmd_sweep(args) -> int:
    data = _load_rescaled(args.data, args.labels_column)
    fractions = _parse_fractions(args.fractions)
    ranges = _load_ranges(args.ranges) if args.ranges else default_ranges()
    if args.n_configs < 1:
        raise UsageError("--n-configs must be >= 1")

    total = args.n_configs * args.k * args.repetitions * len(fractions)
    _log(f"sweep: {args.n_configs} settings x {args.repetitions}x{args.k} folds "
         f"x {len(fractions)} fractions = {total} runs "
         f"({args.workers} worker{'s' if args.workers != 1 else ''})")
    started = time.perf_counter()

    def progress(done: int) -> None:
        _log(f"  {done}/{total} runs ({time.perf_counter() - started:.1f}s)")

    results, summary = run_sweep(
        data, n_configs=args.n_configs, fractions=fractions, seed=args.seed,
        k=args.k, repetitions=args.repetitions, ranges=ranges,
        workers=args.workers, progress=progress)
    _log(f"sweep finished in {time.perf_counter() - started:.2f}s")

    name = Path(args.data).stem
    export_results(results, summary, args.out, dataset_name=name)
    write_manifest(
        args.out, dataset_name=name, dataset_hash=dataset_digest(args.data),
        master_seed=args.seed, n_configs=args.n_configs, fractions=fractions,
        ranges=ranges, k=args.k, repetitions=args.repetitions,
        tool_version=__version__)
    _log(f"tables and manifest written to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="altsom",
                     description="Semi-supervised self-organizing map toolkit")
    parser.add_argument("--version", action="version", version=f"altsom {__version__}")
    commands = parser.add_subparsers(dest="verb", required=True)

    p_fit = commands.add_parser("fit", help="train a model and write it to disk")
    p_fit.add_argument("--data", required=True, help="ARFF or CSV input file")
    p_fit.add_argument("--labels-column", type=int, default=None,
                       help="CSV label column index (default: last)")
    _add_param_flags(p_fit)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--out", required=True, help="model output path")
    p_fit.set_defaults(handler=cmd_fit)

    p_predict = commands.add_parser("predict", help="cluster and classify rows")
    p_predict.add_argument("--model", required=True)
    p_predict.add_argument("--data", required=True)
    p_predict.add_argument("--labels-column", type=int, default=None)
    p_predict.add_argument("--out", required=True, help="CSV output path")
    p_predict.set_defaults(handler=cmd_predict)

    p_eval = commands.add_parser("evaluate", help="score a model on labeled data")
    p_eval.add_argument("--model", required=True)
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--labels-column", type=int, default=None)
    p_eval.add_argument("--out", default=None, help="metrics JSON path (default: stdout)")
    p_eval.set_defaults(handler=cmd_evaluate)

    p_cv = commands.add_parser("cv", help="cross-validate one parameter setting")
    p_cv.add_argument("--data", required=True)
    p_cv.add_argument("--labels-column", type=int, default=None)
    _add_param_flags(p_cv)
    p_cv.add_argument("--fractions", default="1.0",
                      help="comma-separated supervision fractions")
    p_cv.add_argument("--k", type=int, default=3)
    p_cv.add_argument("--repetitions", type=int, default=3)
    p_cv.add_argument("--seed", type=int, default=0)
    p_cv.add_argument("--out", required=True, help="output directory")
    p_cv.set_defaults(handler=cmd_cv)

    p_sweep = commands.add_parser("sweep", help="Latin Hypercube parameter sweep")
    p_sweep.add_argument("--data", required=True)
    p_sweep.add_argument("--labels-column", type=int, default=None)
    p_sweep.add_argument("--ranges", default=None,
                         help="JSON list of parameter ranges (default: standard)")
    p_sweep.add_argument("--n-configs", type=int, required=True,
                         help="number of sampled settings")
    p_sweep.add_argument("--fractions", default="0.0",
                         help="comma-separated supervision fractions")
    p_sweep.add_argument("--k", type=int, default=3)
    p_sweep.add_argument("--repetitions", type=int, default=3)
    p_sweep.add_argument("--seed", type=int, default=0)
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument("--out", required=True, help="output directory")
    p_sweep.set_defaults(handler=cmd_sweep)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else EXIT_OK
    try:
        return args.handler(args)
    except UsageError as exc:
        _log(f"error: {exc}")
        return EXIT_USAGE
    except (ParseError, FileNotFoundError) as exc:
        _log(f"data error: {exc}")
        return EXIT_DATA
    except OSError as exc:
        _log(f"i/o error: {exc}")
        return EXIT_DATA
    except ValueError as exc:
        _log(f"data error: {exc}")
        return EXIT_DATA
    except Exception as exc:  # pragma: no cover - defensive
        _log(f"internal error: {type(exc).__name__}: {exc}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
