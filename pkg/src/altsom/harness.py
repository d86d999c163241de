"""Experiment orchestration: parameter sweeps, cross-validation, exports.

A sweep samples parameter settings by Latin Hypercube over the standard
ranges, runs each setting through repeated stratified cross-validation at
every requested supervision fraction, and aggregates mean/std accuracy
and clustering scores per (setting, fraction).

Seed fan-out: every random decision derives its integer seed from the
master seed through numpy's SeedSequence with a spawn key of
(purpose, config, repetition, fold, fraction), where purpose is
0 = fold shuffling, 1 = LHS design, 2 = label masking, 3 = model fit.
Unused key positions are 0.  Any subset of a sweep can therefore be
rerun in isolation with identical results.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import Params
from .datasets import Dataset, FoldPlan, make_folds, mask_labels, round_half_up, subset
from .learning import assign_cluster, fit, predict_class
from .metrics import accuracy, clustering_error

PURPOSE_FOLDS = 0
PURPOSE_LHS = 1
PURPOSE_MASK = 2
PURPOSE_FIT = 3

DEFAULT_N_MAX = 200
PAPER_FRACTIONS = (0.01, 0.05, 0.10, 0.25, 0.50, 0.75, 1.0)


@dataclass(frozen=True)
class ParamRange:
    """One sampled parameter: bounds, integrality and optional anchor.

    When ``depends_on`` names another parameter (or a provided anchor
    such as the dataset size), the sampled value is a multiplier applied
    to that anchor after sampling.
    """

    name: str
    low: float
    high: float
    integer: bool = False
    depends_on: str | None = None

    def __post_init__(self):
        if self.low > self.high:
            raise ValueError(f"{self.name}: low {self.low} > high {self.high}")


def default_ranges() -> list[ParamRange]:
    """The standard sweep ranges for the eight tunable parameters.

    age_wins is sampled as a multiple of the dataset size and e_n as a
    multiple of the sampled e_b.
    """
    return [
        ParamRange("lp", 0.001, 0.002),
        ParamRange("beta", 0.90, 0.95),
        ParamRange("age_wins", 1.0, 200.0, integer=True, depends_on="dataset_size"),
        ParamRange("e_b", 0.001, 0.2),
        ParamRange("e_n", 0.002, 1.0, depends_on="e_b"),
        ParamRange("s", 0.01, 0.1),
        ParamRange("minwd", 0.0, 0.5),
        ParamRange("epochs", 1.0, 100.0, integer=True),
    ]


def derive_seed(master_seed: int, purpose: int, config: int = 0,
                repetition: int = 0, fold: int = 0, fraction: int = 0) -> int:
    """Deterministic child seed for one unit of work (see module docstring)."""
    seq = np.random.SeedSequence(
        entropy=master_seed, spawn_key=(purpose, config, repetition, fold, fraction))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def lhs_matrix(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    """n x d Latin Hypercube design on [0, 1).

    Each column holds exactly one uniform draw from each of the n
    equal-width strata, independently permuted.
    """
    strata = (np.arange(n)[:, None] + rng.random((n, d))) / n
    for j in range(d):
        strata[:, j] = strata[rng.permutation(n), j]
    return strata


def lhs_sample(ranges: list[ParamRange], n: int, seed: int,
               anchors: dict[str, float] | None = None) -> list[dict[str, float | int]]:
    """Draw ``n`` parameter settings by Latin Hypercube over ``ranges``.

    Dependent ranges are resolved after sampling: the stratified draw in
    [low, high] multiplies its anchor (another sampled parameter or an
    entry of ``anchors``).  Integer parameters are rounded half-up after
    resolution.
    """
    if n < 1:
        raise ValueError(f"need at least one sample, got {n}")
    anchors = dict(anchors or {})
    rng = np.random.default_rng(seed)
    unit = lhs_matrix(n, len(ranges), rng)

    settings: list[dict[str, float | int]] = [{} for _ in range(n)]
    raw = {
        r.name: r.low + (r.high - r.low) * unit[:, j]
        for j, r in enumerate(ranges)
    }
    independent = [r for r in ranges if r.depends_on is None]
    dependent = [r for r in ranges if r.depends_on is not None]
    for r in independent + dependent:
        for i in range(n):
            value = raw[r.name][i]
            if r.depends_on is not None:
                if r.depends_on in settings[i]:
                    anchor = float(settings[i][r.depends_on])
                elif r.depends_on in anchors:
                    anchor = float(anchors[r.depends_on])
                else:
                    raise ValueError(
                        f"{r.name} depends on unknown anchor {r.depends_on!r}")
                value *= anchor
            settings[i][r.name] = round_half_up(value) if r.integer else float(value)
    return settings


def params_from_setting(setting: dict[str, float | int],
                        n_max: int = DEFAULT_N_MAX) -> Params:
    """Build a :class:`Params` from one sampled setting."""
    return Params(
        lp=float(setting["lp"]),
        beta=float(setting["beta"]),
        age_wins=int(setting["age_wins"]),
        e_b=float(setting["e_b"]),
        e_n=float(setting["e_n"]),
        s=float(setting["s"]),
        minwd=float(setting["minwd"]),
        epochs=int(setting["epochs"]),
        n_max=n_max,
    )


def midpoint_params(dataset_size: int, n_max: int = DEFAULT_N_MAX) -> Params:
    """Range midpoints as an untuned default parameterization."""
    mid = {}
    for r in default_ranges():
        value = (r.low + r.high) / 2.0
        if r.depends_on == "dataset_size":
            value *= dataset_size
        elif r.depends_on == "e_b":
            value *= mid["e_b"]
        mid[r.name] = round_half_up(value) if r.integer else value
    return params_from_setting(mid, n_max=n_max)


@dataclass
class SweepResult:
    """Metrics of one (setting, repetition, fold, fraction) run."""

    config_index: int
    params: Params
    repetition: int
    fold: int
    supervision_fraction: float
    accuracy: float
    ce: float
    node_count: int
    wall_time: float


@dataclass(frozen=True)
class AggregateRow:
    config_index: int
    supervision_fraction: float
    mean_accuracy: float
    std_accuracy: float
    mean_ce: float
    std_ce: float
    n_runs: int


@dataclass
class SweepSummary:
    """Per-(setting, fraction) aggregates plus the selected best rows."""

    rows: list[AggregateRow]
    best_by_fraction: list[AggregateRow]
    best_ce: AggregateRow | None

    @classmethod
    def empty(cls) -> SweepSummary:
        return cls(rows=[], best_by_fraction=[], best_ce=None)


def run_cv_experiment(dataset: Dataset, params: Params, fractions: list[float],
                      folds: FoldPlan, seed: int,
                      config_index: int = 0) -> list[SweepResult]:
    """Train and score one parameter setting across a fold plan.

    For every (repetition, fold, fraction): the fold is held out, labels
    on the remaining rows are masked down to the supervision fraction,
    a model is fitted, and test accuracy plus clustering score are
    recorded.  All randomness derives from ``seed`` (see module
    docstring), so results are reproducible per run unit.
    """
    results = []
    for rep, fold_arrays in enumerate(folds.repetitions):
        all_rows = np.concatenate(fold_arrays)
        for fold_idx, test_rows in enumerate(fold_arrays):
            train_rows = np.setdiff1d(all_rows, test_rows)
            train = subset(dataset, train_rows)
            test = subset(dataset, test_rows)
            for frac_idx, fraction in enumerate(fractions):
                masked = mask_labels(
                    train, fraction,
                    seed=derive_seed(seed, PURPOSE_MASK, config_index, rep,
                                     fold_idx, frac_idx))
                started = time.perf_counter()
                model = fit(
                    masked, params,
                    seed=derive_seed(seed, PURPOSE_FIT, config_index, rep,
                                     fold_idx, frac_idx))
                elapsed = time.perf_counter() - started
                predictions = [predict_class(model, x) for x in test.features]
                clusters = [assign_cluster(model, x) for x in test.features]
                results.append(SweepResult(
                    config_index=config_index,
                    params=params,
                    repetition=rep,
                    fold=fold_idx,
                    supervision_fraction=fraction,
                    accuracy=accuracy(predictions, list(test.labels)),
                    ce=clustering_error(clusters, list(test.labels)),
                    node_count=model.n_nodes,
                    wall_time=elapsed,
                ))
    return results


def aggregate(results: list[SweepResult]) -> SweepSummary:
    """Mean/std per (setting, fraction) and the best rows.

    The per-fraction best setting maximizes mean accuracy (mean CE, then
    lowest config index break ties); the overall best-CE row maximizes
    mean CE across all (setting, fraction) groups.  Standard deviations
    are sample deviations (0 for a single run).  The output is invariant
    to the input record order.
    """
    if not results:
        return SweepSummary.empty()
    groups: dict[tuple[int, float], list[SweepResult]] = {}
    for result in results:
        groups.setdefault(
            (result.config_index, result.supervision_fraction), []).append(result)

    def stats(values: list[float]) -> tuple[float, float]:
        arr = np.array(values)
        std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        return float(arr.mean()), std

    rows = []
    for (config, fraction) in sorted(groups):
        runs = sorted(groups[(config, fraction)],
                      key=lambda r: (r.repetition, r.fold))
        mean_acc, std_acc = stats([r.accuracy for r in runs])
        mean_ce, std_ce = stats([r.ce for r in runs])
        rows.append(AggregateRow(config, fraction, mean_acc, std_acc,
                                 mean_ce, std_ce, len(runs)))

    best_by_fraction = []
    for fraction in sorted({row.supervision_fraction for row in rows}):
        candidates = [row for row in rows if row.supervision_fraction == fraction]
        best = max(candidates,
                   key=lambda r: (r.mean_accuracy, r.mean_ce, -r.config_index))
        best_by_fraction.append(best)

    best_ce = max(rows, key=lambda r: (r.mean_ce, r.mean_accuracy, -r.config_index))
    return SweepSummary(rows=rows, best_by_fraction=best_by_fraction, best_ce=best_ce)


_PARAM_COLUMNS = ("lp", "beta", "age_wins", "e_b", "e_n", "s", "minwd", "epochs", "n_max")


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines += [",".join(_format_cell(cell) for cell in row) for row in rows]
    path.write_text("\n".join(lines) + "\n")


def export_results(results: list[SweepResult], summary: SweepSummary,
                   destination: str | Path,
                   dataset_name: str = "dataset") -> list[Path]:
    """Write the raw run table and both aggregate tables to a directory.

    Produces results.csv (one row per run), accuracy_by_fraction.csv (the
    per-fraction best setting with mean/std), and best_ce.csv (one best
    clustering score under the dataset's column).  Timing data is kept
    out of the files so reruns with the same seed are byte-identical.
    """
    destination = Path(destination)
    destination.mkdir(parents=True, exist_ok=True)

    raw_path = destination / "results.csv"
    header = ["config_index", "repetition", "fold", "supervision_fraction",
              "accuracy", "ce", "node_count", *_PARAM_COLUMNS]
    raw_rows = []
    ordered = sorted(results, key=lambda r: (r.config_index, r.supervision_fraction,
                                             r.repetition, r.fold))
    for r in ordered:
        raw_rows.append([r.config_index, r.repetition, r.fold,
                         r.supervision_fraction, r.accuracy, r.ce, r.node_count,
                         *(getattr(r.params, name) for name in _PARAM_COLUMNS)])
    _write_csv(raw_path, header, raw_rows)

    frac_path = destination / "accuracy_by_fraction.csv"
    frac_header = ["supervision_fraction", "config_index", "mean_accuracy",
                   "std_accuracy", "mean_ce", "std_ce", "n_runs"]
    frac_rows = [[row.supervision_fraction, row.config_index, row.mean_accuracy,
                  row.std_accuracy, row.mean_ce, row.std_ce, row.n_runs]
                 for row in summary.best_by_fraction]
    _write_csv(frac_path, frac_header, frac_rows)

    ce_path = destination / "best_ce.csv"
    if summary.best_ce is None:
        _write_csv(ce_path, [dataset_name], [])
    else:
        _write_csv(ce_path, [dataset_name], [[summary.best_ce.mean_ce]])
    return [raw_path, frac_path, ce_path]


def dataset_digest(path: str | Path) -> str:
    """SHA-256 of a dataset file's bytes, for run manifests."""
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(destination: str | Path, *, dataset_name: str,
                   dataset_hash: str, master_seed: int, n_configs: int,
                   fractions: list[float], ranges: list[ParamRange],
                   k: int, repetitions: int, tool_version: str) -> Path:
    """Record everything needed to reproduce a sweep."""
    destination = Path(destination)
    destination.mkdir(parents=True, exist_ok=True)
    payload = {
        "dataset_name": dataset_name,
        "dataset_sha256": dataset_hash,
        "master_seed": master_seed,
        "n_configs": n_configs,
        "fractions": fractions,
        "k": k,
        "repetitions": repetitions,
        "ranges": [dataclasses.asdict(r) for r in ranges],
        "tool_version": tool_version,
    }
    path = destination / "manifest.json"
    path.write_text(json.dumps(payload, indent=1) + "\n")
    return path


def _sweep_one_config(args) -> list[SweepResult]:
    dataset, params, fractions, folds, seed, config_index = args
    return run_cv_experiment(dataset, params, fractions, folds, seed,
                             config_index=config_index)


def run_sweep(dataset: Dataset, n_configs: int, fractions: list[float],
              seed: int, k: int = 3, repetitions: int = 3,
              ranges: list[ParamRange] | None = None,
              n_max: int = DEFAULT_N_MAX,
              workers: int = 1,
              progress=None) -> tuple[list[SweepResult], SweepSummary]:
    """Full sweep: LHS settings x fold plan x supervision fractions.

    One fold plan and one LHS design are drawn per sweep and shared by
    every setting.  With ``workers`` > 1 settings are evaluated in
    parallel processes; results are ordered before aggregation, so the
    output is independent of scheduling.
    """
    ranges = default_ranges() if ranges is None else ranges
    folds = make_folds(dataset, k=k, repetitions=repetitions,
                       seed=derive_seed(seed, PURPOSE_FOLDS))
    settings = lhs_sample(ranges, n_configs, seed=derive_seed(seed, PURPOSE_LHS),
                          anchors={"dataset_size": len(dataset)})
    jobs = [
        (dataset, params_from_setting(setting, n_max=n_max), list(fractions),
         folds, seed, index)
        for index, setting in enumerate(settings)
    ]
    # longest settings first so parallel workers finish together; results
    # are re-sorted below, so scheduling never affects the output
    jobs.sort(key=lambda job: -job[1].epochs)

    results: list[SweepResult] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for batch in pool.map(_sweep_one_config, jobs):
                results.extend(batch)
                if progress is not None:
                    progress(len(results))
    else:
        for job in jobs:
            results.extend(_sweep_one_config(job))
            if progress is not None:
                progress(len(results))

    results.sort(key=lambda r: (r.config_index, r.supervision_fraction,
                                r.repetition, r.fold))
    return results, aggregate(results)
