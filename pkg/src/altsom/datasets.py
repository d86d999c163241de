"""Dataset ingestion and experiment shaping.

Input files are either attribute-relation text (numeric attributes plus
one nominal class attribute in last position) or delimited text with a
designated label column.  Downstream code expects features rescaled to
[0, 1], labels as indices into an ordered class-name table, and a
per-row visibility mask saying which labels the learner may see.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ParseError(ValueError):
    """Malformed input file; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass
class Dataset:
    """Feature matrix with labels, label visibility and class names."""

    features: np.ndarray
    labels: np.ndarray
    visible: np.ndarray
    class_names: tuple[str, ...]

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.visible = np.asarray(self.visible, dtype=bool)
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise ValueError("features must be a non-empty N x m matrix")
        n = self.features.shape[0]
        if self.labels.shape != (n,) or self.visible.shape != (n,):
            raise ValueError("labels and visible must have one entry per row")
        if self.labels.min() < 0 or self.labels.max() >= len(self.class_names):
            raise ValueError("labels must index into class_names")
        self.class_names = tuple(self.class_names)

    def __len__(self) -> int:
        return self.features.shape[0]

    @property
    def m(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)


@dataclass
class FoldPlan:
    """Repeated k-fold partitions of row indices.

    Each repetition is a list of k disjoint, exhaustive index arrays;
    ``seeds`` records the seed each repetition was shuffled with.
    """

    repetitions: list[list[np.ndarray]]
    k: int
    seeds: list[int] = field(default_factory=list)


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def _strip_quotes(token: str) -> str:
    token = token.strip()
    if len(token) >= 2 and token[0] == token[-1] and token[0] in "'\"":
        return token[1:-1]
    return token


def parse_arff(text: str) -> Dataset:
    """Parse attribute-relation text into a (pre-rescale) dataset.

    Requires numeric attributes followed by a single nominal class
    attribute in last position.  '%' comment lines and blank lines are
    ignored.  Raises :class:`ParseError` with the line number on any
    malformed header line, non-numeric feature cell or undeclared
    nominal value.
    """
    attr_names: list[str] = []
    attr_kinds: list[str] = []  # "numeric" or "nominal"
    class_values: list[str] = []
    rows: list[list[float]] = []
    labels: list[int] = []
    in_data = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if not in_data:
            lowered = line.lower()
            if lowered.startswith("@relation"):
                continue
            if lowered.startswith("@attribute"):
                rest = line[len("@attribute"):].strip()
                if "{" in rest:
                    name, _, domain = rest.partition("{")
                    domain = domain.rstrip()
                    if not domain.endswith("}"):
                        raise ParseError("unterminated nominal domain", lineno)
                    values = [_strip_quotes(v) for v in domain[:-1].split(",")]
                    if not values or any(not v for v in values):
                        raise ParseError("empty nominal domain value", lineno)
                    attr_names.append(_strip_quotes(name))
                    attr_kinds.append("nominal")
                    class_values = values
                else:
                    parts = rest.split()
                    if len(parts) < 2:
                        raise ParseError("attribute declaration needs a type", lineno)
                    kind = parts[-1].lower()
                    if kind not in ("numeric", "real", "integer"):
                        raise ParseError(f"unsupported attribute type '{parts[-1]}'", lineno)
                    attr_names.append(_strip_quotes(" ".join(parts[:-1])))
                    attr_kinds.append("numeric")
                continue
            if lowered.startswith("@data"):
                if not attr_kinds:
                    raise ParseError("@data before any attribute declaration", lineno)
                if attr_kinds[-1] != "nominal":
                    raise ParseError("last attribute must be the nominal class", lineno)
                if "nominal" in attr_kinds[:-1]:
                    raise ParseError("only the last attribute may be nominal", lineno)
                in_data = True
                continue
            raise ParseError(f"unrecognized header line: {line!r}", lineno)

        cells = [cell.strip() for cell in line.split(",")]
        if len(cells) != len(attr_kinds):
            raise ParseError(
                f"expected {len(attr_kinds)} values, got {len(cells)}", lineno)
        feature_cells = cells[:-1]
        for cell in feature_cells:
            if not _is_number(cell):
                raise ParseError(f"non-numeric feature value {cell!r}", lineno)
        label = _strip_quotes(cells[-1])
        if label not in class_values:
            raise ParseError(f"unknown nominal value {label!r}", lineno)
        rows.append([float(cell) for cell in feature_cells])
        labels.append(class_values.index(label))

    if not in_data:
        raise ParseError("missing @data section")
    if not rows:
        raise ParseError("no data rows")
    features = np.array(rows, dtype=np.float64)
    return Dataset(
        features=features,
        labels=np.array(labels, dtype=np.int64),
        visible=np.ones(len(rows), dtype=bool),
        class_names=tuple(class_values),
    )


def parse_csv(text: str, label_column: int | None = None) -> Dataset:
    """Parse comma-delimited text into a (pre-rescale) dataset.

    ``label_column`` designates the class column (default: last).  A
    header row is auto-detected by non-numeric cells in the feature
    positions of the first row.  Class names are ordered by first
    appearance.
    """
    raw_rows = [line for line in text.splitlines() if line.strip()]
    if not raw_rows:
        raise ParseError("no data rows")
    table = [[cell.strip() for cell in line.split(",")] for line in raw_rows]
    width = len(table[0])
    if width < 2:
        raise ParseError("need at least one feature column and a label column", 1)
    col = width - 1 if label_column is None else label_column
    if col < 0 or col >= width:
        raise ValueError(f"label column {label_column} outside width {width}")

    first_features = [cell for i, cell in enumerate(table[0]) if i != col]
    if any(not _is_number(cell) for cell in first_features):
        table = table[1:]
        if not table:
            raise ParseError("header row only, no data rows")

    class_names: list[str] = []
    rows: list[list[float]] = []
    labels: list[int] = []
    for index, cells in enumerate(table):
        if len(cells) != width:
            raise ParseError(f"expected {width} cells, got {len(cells)}", index + 1)
        feature_cells = [cell for i, cell in enumerate(cells) if i != col]
        for cell in feature_cells:
            if not _is_number(cell):
                raise ParseError(f"non-numeric feature value {cell!r}", index + 1)
        rows.append([float(cell) for cell in feature_cells])
        label = cells[col]
        if label not in class_names:
            class_names.append(label)
        labels.append(class_names.index(label))

    return Dataset(
        features=np.array(rows, dtype=np.float64),
        labels=np.array(labels, dtype=np.int64),
        visible=np.ones(len(rows), dtype=bool),
        class_names=tuple(class_names),
    )


def load_table(path: str | Path, label_column: int | None = None) -> Dataset:
    """Read a dataset file, dispatching on the .arff extension."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".arff":
        return parse_arff(text)
    return parse_csv(text, label_column=label_column)


def rescale_minmax(dataset: Dataset) -> Dataset:
    """Min-max rescale every column to [0, 1]; constant columns map to 0."""
    features = dataset.features
    lo = features.min(axis=0)
    hi = features.max(axis=0)
    span = hi - lo
    safe = np.where(span == 0.0, 1.0, span)
    scaled = (features - lo) / safe
    scaled[:, span == 0.0] = 0.0
    return Dataset(scaled, dataset.labels.copy(), dataset.visible.copy(),
                   dataset.class_names)


def round_half_up(value: float) -> int:
    """Round to nearest integer with .5 going up."""
    return int(math.floor(value + 0.5))


def mask_labels(dataset: Dataset, fraction: float, seed: int) -> Dataset:
    """Mark a stratified sample of rows as label-visible.

    Exactly round(fraction * N) rows become visible (half-up).  Each class
    contributes floor(fraction * N_class), and the remaining slots go to
    the classes with the largest fractional remainders (ties: larger
    class, then class order).  Selection within a class is a seeded
    shuffle, so the result is deterministic per seed.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValueError(f"fraction must be in [0, 1], got {fraction}")
    n = len(dataset)
    target = round_half_up(fraction * n)
    rng = np.random.default_rng(seed)

    class_rows = [np.nonzero(dataset.labels == c)[0] for c in range(dataset.n_classes)]
    quotas = [fraction * len(rows) for rows in class_rows]
    counts = [int(math.floor(q)) for q in quotas]
    order = sorted(
        range(len(class_rows)),
        key=lambda c: (-(quotas[c] - counts[c]), -len(class_rows[c]), c),
    )
    deficit = target - sum(counts)
    while deficit > 0:
        progressed = False
        for c in order:
            if deficit == 0:
                break
            if counts[c] < len(class_rows[c]):
                counts[c] += 1
                deficit -= 1
                progressed = True
        if not progressed:
            raise AssertionError("stratified masking could not place all slots")

    visible = np.zeros(n, dtype=bool)
    for rows, count in zip(class_rows, counts):
        chosen = rng.permutation(rows)[:count]
        visible[chosen] = True
    return Dataset(dataset.features.copy(), dataset.labels.copy(), visible,
                   dataset.class_names)


def make_folds(dataset: Dataset, k: int, repetitions: int, seed: int) -> FoldPlan:
    """Stratified repeated k-fold partition of the row indices.

    Within each repetition every class's shuffled rows are dealt
    round-robin across the folds from a rotating start, so per-class and
    overall fold sizes differ by at most one.  Repetition r uses seed + r.
    """
    if k < 2:
        raise ValueError(f"k must be >= 2, got {k}")
    n = len(dataset)
    if k > n:
        raise ValueError(f"cannot split {n} rows into {k} folds")
    if repetitions < 1:
        raise ValueError(f"repetitions must be >= 1, got {repetitions}")

    seeds = [seed + r for r in range(repetitions)]
    plans: list[list[np.ndarray]] = []
    for rep_seed in seeds:
        rng = np.random.default_rng(rep_seed)
        folds: list[list[int]] = [[] for _ in range(k)]
        offset = 0
        for c in range(dataset.n_classes):
            rows = rng.permutation(np.nonzero(dataset.labels == c)[0])
            for i, row in enumerate(rows):
                folds[(offset + i) % k].append(int(row))
            offset = (offset + len(rows)) % k
        plans.append([np.array(sorted(fold), dtype=np.int64) for fold in folds])
    return FoldPlan(repetitions=plans, k=k, seeds=seeds)


def subset(dataset: Dataset, indices: np.ndarray) -> Dataset:
    """Row-subset of a dataset, preserving the class-name table."""
    indices = np.asarray(indices, dtype=np.int64)
    return Dataset(
        features=dataset.features[indices].copy(),
        labels=dataset.labels[indices].copy(),
        visible=dataset.visible[indices].copy(),
        class_names=dataset.class_names,
    )


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    """Write a dataset as a self-describing JSON document (lossless)."""
    payload = {
        "format": "altsom-dataset",
        "version": 1,
        "class_names": list(dataset.class_names),
        "features": dataset.features.tolist(),
        "labels": dataset.labels.tolist(),
        "visible": dataset.visible.tolist(),
    }
    Path(path).write_text(json.dumps(payload))


def load_dataset(path: str | Path) -> Dataset:
    """Read a dataset written by :func:`save_dataset`."""
    payload = json.loads(Path(path).read_text())
    if payload.get("format") != "altsom-dataset":
        raise ParseError(f"{path} is not a dataset document")
    return Dataset(
        features=np.array(payload["features"], dtype=np.float64),
        labels=np.array(payload["labels"], dtype=np.int64),
        visible=np.array(payload["visible"], dtype=bool),
        class_names=tuple(payload["class_names"]),
    )
