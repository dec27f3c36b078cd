"""Dataset ingestion, SMOTE balancing, [0, pi] scaling and stratified splits."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .errors import QcScreenError

TARGET_MAX = math.pi
DEFAULT_FEATURE_COLUMNS = tuple(f"V{i}" for i in range(1, 29))
DEFAULT_LABEL_COLUMN = "Class"


class IoError(QcScreenError):
    pass


class CsvParseError(QcScreenError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class LabelNotBinaryError(QcScreenError):
    pass


class TooFewMinoritySamplesError(QcScreenError):
    pass


class RatioError(QcScreenError):
    pass


@dataclass
class Dataset:
    features: np.ndarray  # (N, f) float
    labels: np.ndarray    # (N,) int, values in {0, 1}

    def __len__(self) -> int:
        return len(self.labels)

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(self.features[idx], self.labels[idx])


@dataclass
class ScalerParams:
    mins: np.ndarray
    maxes: np.ndarray
    target_max: float = TARGET_MAX


@dataclass
class SplitSet:
    train: Dataset
    val: Dataset
    test: Dataset


def load_csv(path, feature_columns=None, label_column: str = DEFAULT_LABEL_COLUMN) -> Dataset:
    """Read a feature CSV (header row, one label column of 0/1 values).

    Columns outside feature_columns + label_column are ignored, so Time and
    Amount style extras can stay in the file.
    """
    columns = tuple(feature_columns) if feature_columns is not None else DEFAULT_FEATURE_COLUMNS
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CsvParseError("empty file", 1) from None
        positions = {name: i for i, name in enumerate(header)}
        missing = [c for c in (*columns, label_column) if c not in positions]
        if missing:
            raise CsvParseError(f"missing column(s): {', '.join(missing)}", 1)
        feat_idx = [positions[c] for c in columns]
        label_idx = positions[label_column]
        feats: list[list[float]] = []
        labels: list[int] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise CsvParseError(
                    f"expected {len(header)} fields, found {len(row)}", lineno
                )
            try:
                feats.append([float(row[i]) for i in feat_idx])
                raw_label = float(row[label_idx])
            except ValueError as exc:
                raise CsvParseError(str(exc), lineno) from exc
            if raw_label not in (0.0, 1.0):
                raise LabelNotBinaryError(f"line {lineno}: label {row[label_idx]!r} is not 0/1")
            labels.append(int(raw_label))
    features = np.asarray(feats, dtype=float).reshape(len(labels), len(columns))
    if features.size and not np.all(np.isfinite(features)):
        raise CsvParseError("non-finite feature values", 1)
    return Dataset(features, np.asarray(labels, dtype=int))


def _knn_indices(rows: np.ndarray, k: int, block: int = 256) -> np.ndarray:
    """Indices of the k nearest Euclidean neighbors per row, excluding self.

    Stable sort so distance ties resolve by index.
    """
    n = len(rows)
    out = np.empty((n, k), dtype=int)
    for start in range(0, n, block):
        stop = min(start + block, n)
        diff = rows[start:stop, None, :] - rows[None, :, :]
        d2 = np.einsum("ijk,ijk->ij", diff, diff)
        d2[np.arange(stop - start), np.arange(start, stop)] = np.inf
        out[start:stop] = np.argsort(d2, axis=1, kind="stable")[:, :k]
    return out


def smote(
    data: Dataset, k: int = 5, target_per_class: int | None = None, rng: np.random.Generator | None = None
) -> Dataset:
    """Balance both classes to exactly target_per_class rows.

    Classes above target are downsampled uniformly without replacement
    (original order kept); classes below target gain synthetic rows
    x_i + u * (x_nn - x_i) with x_nn one of x_i's k nearest same-class
    neighbors and u ~ Uniform(0, 1). Originals are retained and synthetic
    rows are appended after them. A balanced input already at target is
    returned unchanged.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if rng is None:
        rng = np.random.default_rng()
    counts = {cls: int(np.sum(data.labels == cls)) for cls in (0, 1)}
    if target_per_class is None:
        target_per_class = max(counts.values())

    keep_mask = np.ones(len(data), dtype=bool)
    synth_feats: list[np.ndarray] = []
    synth_labels: list[int] = []
    for cls in (0, 1):
        cls_idx = np.flatnonzero(data.labels == cls)
        if len(cls_idx) > target_per_class:
            dropped = rng.choice(len(cls_idx), len(cls_idx) - target_per_class, replace=False)
            keep_mask[cls_idx[dropped]] = False
        elif len(cls_idx) < target_per_class:
            need = target_per_class - len(cls_idx)
            if len(cls_idx) < k + 1:
                raise TooFewMinoritySamplesError(
                    f"class {cls} has {len(cls_idx)} samples, need at least {k + 1} for k={k}"
                )
            rows = data.features[cls_idx]
            neighbors = _knn_indices(rows, k)
            for _ in range(need):
                i = int(rng.integers(len(rows)))
                nn = int(neighbors[i][int(rng.integers(k))])
                u = float(rng.uniform())
                synth_feats.append(rows[i] + u * (rows[nn] - rows[i]))
                synth_labels.append(cls)

    if keep_mask.all() and not synth_feats:
        return data
    features = data.features[keep_mask]
    labels = data.labels[keep_mask]
    if synth_feats:
        features = np.vstack([features, np.asarray(synth_feats)])
        labels = np.concatenate([labels, np.asarray(synth_labels, dtype=int)])
    return Dataset(features, labels)


def minmax_scale(data: Dataset) -> tuple[Dataset, ScalerParams]:
    """Fit per-feature min/max on data and map it onto [0, pi].

    Constant features map to 0.
    """
    mins = data.features.min(axis=0)
    maxes = data.features.max(axis=0)
    scaler = ScalerParams(mins, maxes)
    return apply_scale(data, scaler), scaler


def apply_scale(data: Dataset, scaler: ScalerParams) -> Dataset:
    span = scaler.maxes - scaler.mins
    safe = np.where(span > 0.0, span, 1.0)
    scaled = (data.features - scaler.mins) / safe * scaler.target_max
    scaled[:, span == 0.0] = 0.0
    return Dataset(scaled, data.labels.copy())


def split_indices(
    labels: np.ndarray, ratios=(0.6, 0.1, 0.3), rng: np.random.Generator | None = None
):
    """Per-class shuffled index triples honoring the ratio boundaries.

    Returns (train_idx, val_idx, test_idx); within each split the class-0
    block precedes the class-1 block.
    """
    if abs(sum(ratios) - 1.0) > 1e-9 or len(ratios) != 3 or any(r < 0 for r in ratios):
        raise RatioError(f"ratios {ratios!r} must be three non-negative values summing to 1")
    if rng is None:
        rng = np.random.default_rng()
    parts: list[list[np.ndarray]] = [[], [], []]
    for cls in (0, 1):
        cls_idx = np.flatnonzero(labels == cls)
        perm = cls_idx[rng.permutation(len(cls_idx))]
        c1 = round(len(perm) * ratios[0])
        c2 = round(len(perm) * (ratios[0] + ratios[1]))
        parts[0].append(perm[:c1])
        parts[1].append(perm[c1:c2])
        parts[2].append(perm[c2:])
    return tuple(np.concatenate(p) if p else np.empty(0, dtype=int) for p in parts)


def stratified_split(
    data: Dataset, ratios=(0.6, 0.1, 0.3), rng: np.random.Generator | None = None
) -> SplitSet:
    train_idx, val_idx, test_idx = split_indices(data.labels, ratios, rng)
    return SplitSet(data.take(train_idx), data.take(val_idx), data.take(test_idx))
