"""Dataset ingestion, stratified partitioning and min-max scaling."""

from __future__ import annotations

import csv
import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class DatasetError(ValueError):
    """Raised for malformed input files or impossible splits."""


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    class_names: tuple[str, ...]
    name: str = "dataset"

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        y = np.asarray(self.labels, dtype=np.int64)
        if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
            raise DatasetError(f"features must be a non-empty 2-D matrix, got shape {X.shape}")
        if y.shape != (X.shape[0],):
            raise DatasetError("labels must have one entry per feature row")
        if len(self.class_names) < 2:
            raise DatasetError("at least two classes are required")
        if y.min() < 0 or y.max() >= len(self.class_names):
            raise DatasetError("label index out of range of class_names")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        object.__setattr__(self, "class_names", tuple(str(c) for c in self.class_names))

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def __len__(self):
        return self.n_samples

    def subset(self, indices, name: str | None = None) -> "Dataset":
        indices = np.asarray(indices, dtype=np.int64)
        return Dataset(self.features[indices], self.labels[indices], self.class_names,
                       name or self.name)

    def with_features(self, features) -> "Dataset":
        return Dataset(features, self.labels, self.class_names, self.name)

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def fingerprint(self) -> str:
        """Short content hash, used to tie saved models to their reference set."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.features).tobytes())
        h.update(np.ascontiguousarray(self.labels).tobytes())
        h.update("\x1f".join(self.class_names).encode())
        return h.hexdigest()[:16]


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(path, label_column: int | str = -1, name: str | None = None) -> Dataset:
    """Read a comma-separated file into a :class:`Dataset`.

    A header row is detected when ``label_column`` is a column name or when the
    first row holds non-numeric feature cells. Labels are remapped to dense
    indices in order of first appearance unless they are all integers, in which
    case numeric order is used.
    """
    path = Path(path)
    with open(path, newline="") as fh:
        rows = [(i + 1, row) for i, row in enumerate(csv.reader(fh)) if any(c.strip() for c in row)]
    if not rows:
        raise DatasetError(f"{path}: file is empty")

    header = None
    first_line, first = rows[0]
    if isinstance(label_column, str):
        header = [c.strip() for c in first]
        if label_column not in header:
            raise DatasetError(f"{path}: label column {label_column!r} not in header")
        label_idx = header.index(label_column)
        rows = rows[1:]
    else:
        ncol = len(first)
        label_idx = label_column % ncol
        if not all(_is_number(c) for j, c in enumerate(first) if j != label_idx):
            header = [c.strip() for c in first]
            rows = rows[1:]
    if not rows:
        raise DatasetError(f"{path}: no data rows")

    arity = len(header) if header is not None else len(rows[0][1])
    feats, raw_labels = [], []
    for line, row in rows:
        if len(row) != arity:
            raise DatasetError(f"{path}: row {line} has {len(row)} cells, expected {arity}")
        values = []
        for j, cell in enumerate(row):
            if j == label_idx:
                continue
            cell = cell.strip()
            if cell == "":
                raise DatasetError(f"{path}: row {line} has a missing value in column {j}")
            try:
                values.append(float(cell))
            except ValueError:
                raise DatasetError(f"{path}: row {line}, column {j}: non-numeric value {cell!r}") from None
        feats.append(values)
        raw_labels.append(row[label_idx].strip())

    if all(_is_number(v) and float(v).is_integer() for v in raw_labels):
        vocab = sorted(set(raw_labels), key=lambda v: float(v))
    else:
        vocab = list(dict.fromkeys(raw_labels))
    if len(vocab) < 2:
        raise DatasetError(f"{path}: only one class present ({vocab[0]!r})")
    lookup = {v: i for i, v in enumerate(vocab)}
    labels = np.array([lookup[v] for v in raw_labels], dtype=np.int64)
    return Dataset(np.array(feats, dtype=float), labels, tuple(vocab), name or path.stem)


# ---------------------------------------------------------------- splitting

PARTITIONS = ("train", "meta_train", "dsel", "test")


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.50
    dsel: float = 0.25
    test: float = 0.25
    meta_split: float = 0.50
    seed: int = 0

    def __post_init__(self):
        fr = (self.train, self.dsel, self.test)
        if any(f <= 0 for f in fr) or abs(sum(fr) - 1.0) > 1e-9:
            raise DatasetError(f"split fractions must be positive and sum to 1, got {fr}")
        if not 0.0 < self.meta_split < 1.0:
            raise DatasetError("meta_split must lie strictly between 0 and 1")

    def partition_fractions(self) -> np.ndarray:
        """Fractions of the full dataset for (train, meta_train, dsel, test)."""
        return np.array([self.train * (1 - self.meta_split), self.train * self.meta_split,
                         self.dsel, self.test])


def _partition_sizes(n: int, fractions: np.ndarray) -> np.ndarray:
    sizes = np.floor(n * fractions + 1e-9).astype(np.int64)
    # remainder goes to the largest partition (first one on ties)
    sizes[int(np.argmax(fractions))] += n - sizes.sum()
    return sizes


def _allocate(class_counts: np.ndarray, sizes: np.ndarray) -> np.ndarray:
    """Integer class-by-partition table with exact margins.

    Every cell is the floor of its proportional target plus at most one, so
    each class share in each partition is within one sample of proportional.
    """
    n = class_counts.sum()
    target = np.outer(class_counts, sizes) / n
    table = np.floor(target + 1e-9).astype(np.int64)
    row_left = class_counts - table.sum(axis=1)
    col_left = sizes - table.sum(axis=0)
    frac = target - table
    # Gale-Ryser greedy: serve rows with the largest deficit first, each into
    # the columns with the largest remaining deficit.
    for r in sorted(range(len(class_counts)), key=lambda r: (-row_left[r], r)):
        cols = sorted(range(len(sizes)), key=lambda c: (-col_left[c], -frac[r, c], c))
        for c in cols[: row_left[r]]:
            if col_left[c] <= 0:
                raise DatasetError("cannot stratify: inconsistent partition sizes")
            table[r, c] += 1
            col_left[c] -= 1
        row_left[r] = 0
    return table


def stratified_split_indices(labels, spec: SplitSpec) -> tuple[np.ndarray, ...]:
    labels = np.asarray(labels)
    classes, counts = np.unique(labels, return_counts=True)
    if (counts < len(PARTITIONS)).any():
        bad = classes[counts < len(PARTITIONS)]
        raise DatasetError(f"class(es) {bad.tolist()} have fewer than {len(PARTITIONS)} samples")
    sizes = _partition_sizes(len(labels), spec.partition_fractions())
    table = _allocate(counts, sizes)
    rng = np.random.default_rng(spec.seed)
    parts: list[list[np.ndarray]] = [[] for _ in PARTITIONS]
    for r, cls in enumerate(classes):
        idx = rng.permutation(np.flatnonzero(labels == cls))
        bounds = np.concatenate([[0], np.cumsum(table[r])])
        for p in range(len(PARTITIONS)):
            parts[p].append(idx[bounds[p]:bounds[p + 1]])
    return tuple(np.sort(np.concatenate(p)) for p in parts)


def stratified_split(ds: Dataset, spec: SplitSpec | None = None):
    """Split into (train, meta_train, dsel, test) keeping class priors."""
    spec = spec or SplitSpec()
    return tuple(ds.subset(idx, f"{ds.name}:{part}")
                 for idx, part in zip(stratified_split_indices(ds.labels, spec), PARTITIONS))


# ---------------------------------------------------------------- scaling

class MinMaxScaler:
    """Per-feature min-max scaling with clamping of out-of-range values."""

    def __init__(self):
        self.min_ = None
        self.max_ = None

    def fit(self, X) -> "MinMaxScaler":
        X = np.asarray(X.features if isinstance(X, Dataset) else X, dtype=float)
        self.min_ = X.min(axis=0)
        self.max_ = X.max(axis=0)
        return self

    def transform(self, X):
        if self.min_ is None:
            raise RuntimeError("MinMaxScaler.transform called before fit")
        if isinstance(X, Dataset):
            return X.with_features(self.transform(X.features))
        X = np.asarray(X, dtype=float)
        span = self.max_ - self.min_
        constant = span <= 0
        out = (X - self.min_) / np.where(constant, 1.0, span)
        out = np.clip(out, 0.0, 1.0)
        if constant.any():
            out[..., constant] = 0.5
        return out

    def fit_transform(self, X):
        return self.fit(X).transform(X)


def minmax_fit(ds: Dataset) -> MinMaxScaler:
    return MinMaxScaler().fit(ds)


def minmax_apply(scaler: MinMaxScaler, ds: Dataset) -> Dataset:
    return scaler.transform(ds)


# ---------------------------------------------------------------- registry

BUNDLED_DATA = Path(__file__).parent / "data"


@dataclass
class Registry:
    """Directory of ``<name>.csv`` files described by ``manifest.json``.

    Synthetic generators are always available under their own names.
    """

    root: Path = field(default_factory=lambda: Path(os.environ.get("METADES_DATA", BUNDLED_DATA)))

    def __post_init__(self):
        self.root = Path(self.root)
        manifest = self.root / "manifest.json"
        self.entries = json.loads(manifest.read_text()) if manifest.exists() else {}
        if self.root != BUNDLED_DATA and (BUNDLED_DATA / "manifest.json").exists():
            bundled = json.loads((BUNDLED_DATA / "manifest.json").read_text())
            for k, v in bundled.items():
                self.entries.setdefault(k, {**v, "file": str(BUNDLED_DATA / v["file"])})

    def names(self) -> list[str]:
        from . import synthetic
        present = [n for n in self.entries if self._path(n).exists()]
        return sorted(set(present) | set(synthetic.GENERATORS))

    def _path(self, name: str) -> Path:
        entry = self.entries[name]
        p = Path(entry.get("file", f"{name}.csv"))
        return p if p.is_absolute() else self.root / p

    def __contains__(self, name: str) -> bool:
        return name in self.names()

    def load(self, name: str) -> Dataset:
        from . import synthetic
        if name in synthetic.GENERATORS:
            return synthetic.GENERATORS[name]()
        if name not in self.entries or not self._path(name).exists():
            raise DatasetError(f"dataset {name!r} not found in registry at {self.root}")
        return load_csv(self._path(name), self.entries[name].get("label_column", -1), name=name)


def load_dataset(name: str, root: str | os.PathLike | None = None) -> Dataset:
    return (Registry(root) if root else Registry()).load(name)


def available_datasets(root=None) -> Sequence[str]:
    return (Registry(root) if root else Registry()).names()
