"""Regression datasets: CSV loading, outer train/test split and the inner
fit/validation split used by the adaptive local search.

CSV layout: comma separated, one header row, ``.`` decimal point, target in
the last column.  Rows with missing or non-numeric fields are rejected.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "DatasetError",
    "FileUnreadable",
    "MalformedRow",
    "EmptyDataset",
    "DatasetTooSmall",
    "SplitTooSmall",
    "X2Empty",
    "Dataset",
    "IndexSplit",
    "InnerSplit",
    "load_dataset",
    "save_dataset",
    "outer_split",
    "inner_split",
    "BENCHMARK_TABLE",
    "friedman_surrogate",
    "wide_noisy",
]


class DatasetError(Exception):
    """Base class for dataset loading and splitting errors."""


class FileUnreadable(DatasetError):
    pass


class MalformedRow(DatasetError):
    def __init__(self, row: int, reason: str):
        # row is 1-based and counts the header as row 1, like a text editor
        self.row = row
        self.reason = reason
        super().__init__(f"row {row}: {reason}")


class EmptyDataset(DatasetError):
    pass


class DatasetTooSmall(DatasetError):
    pass


class SplitTooSmall(DatasetError):
    pass


class X2Empty(SplitTooSmall):
    """The validation part of an inner split would contain no cases."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Fitness cases of a regression problem.

    ``inputs`` has shape ``(n, num_vars)``, ``targets`` shape ``(n,)``.
    Both arrays are made read-only on construction.
    """

    name: str
    inputs: np.ndarray
    targets: np.ndarray
    columns: tuple[str, ...] = ()

    def __post_init__(self):
        inputs = np.array(self.inputs, dtype=float, ndmin=2)
        targets = np.array(self.targets, dtype=float).reshape(-1)
        if targets.size == 0:
            raise EmptyDataset(f"{self.name}: no cases")
        if inputs.shape[0] != targets.size:
            raise ValueError(
                f"{self.name}: {inputs.shape[0]} input rows but {targets.size} targets"
            )
        if inputs.shape[1] < 1:
            raise ValueError(f"{self.name}: at least one input variable is required")
        if not (np.isfinite(inputs).all() and np.isfinite(targets).all()):
            raise ValueError(f"{self.name}: non-finite values")
        inputs.flags.writeable = False
        targets.flags.writeable = False
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)
        if not self.columns:
            names = tuple(f"x{i}" for i in range(inputs.shape[1])) + ("y",)
            object.__setattr__(self, "columns", names)

    @property
    def num_vars(self) -> int:
        return self.inputs.shape[1]

    @property
    def n_cases(self) -> int:
        return self.targets.size

    def __len__(self) -> int:
        return self.n_cases

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            self.name == other.name
            and self.columns == other.columns
            and np.array_equal(self.inputs, other.inputs)
            and np.array_equal(self.targets, other.targets)
        )

    __hash__ = None

    def with_targets(self, targets) -> "Dataset":
        return Dataset(self.name, self.inputs, targets, self.columns)


@dataclass(frozen=True, eq=False)
class IndexSplit:
    train: np.ndarray
    test: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, IndexSplit):
            return NotImplemented
        return np.array_equal(self.train, other.train) and np.array_equal(
            self.test, other.test
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class InnerSplit:
    x1: np.ndarray
    x2: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, InnerSplit):
            return NotImplemented
        return np.array_equal(self.x1, other.x1) and np.array_equal(self.x2, other.x2)

    __hash__ = None


def _frozen(a) -> np.ndarray:
    a = np.asarray(a, dtype=np.intp)
    a.flags.writeable = False
    return a


def load_dataset(path, name: str | None = None) -> Dataset:
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise FileUnreadable(f"{path}: {exc}") from exc

    if not rows or not any(field.strip() for field in rows[0]):
        raise EmptyDataset(f"{path}: no header")
    header = tuple(field.strip() for field in rows[0])
    width = len(header)
    if width < 2:
        raise MalformedRow(1, f"header has {width} column(s); need inputs and a target")

    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue  # blank line
        if len(row) != width:
            raise MalformedRow(lineno, f"expected {width} fields, found {len(row)}")
        parsed = []
        for col, field in enumerate(row):
            token = field.strip()
            if not token:
                raise MalformedRow(lineno, f"missing value in column {header[col]!r}")
            try:
                value = float(token)
            except ValueError:
                raise MalformedRow(
                    lineno, f"non-numeric value {token!r} in column {header[col]!r}"
                ) from None
            if not math.isfinite(value):
                raise MalformedRow(
                    lineno, f"non-finite value {token!r} in column {header[col]!r}"
                )
            parsed.append(value)
        values.append(parsed)

    if not values:
        raise EmptyDataset(f"{path}: header only, no data rows")
    data = np.array(values, dtype=float)
    return Dataset(name or path.stem, data[:, :-1], data[:, -1], header)


def save_dataset(dataset: Dataset, path) -> None:
    """Write ``dataset`` in the loader's CSV layout with round-trip precision."""
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(dataset.columns)
        for x, y in zip(dataset.inputs, dataset.targets):
            writer.writerow([repr(float(v)) for v in x] + [repr(float(y))])


def outer_split(n: int, seed) -> IndexSplit:
    """Random 70/30 train/test partition of ``range(n)``.

    ``seed`` is anything accepted by :func:`numpy.random.default_rng`.
    The train part gets ``floor(0.7 * n)`` cases.
    """
    if n < 2:
        raise DatasetTooSmall(f"need at least 2 cases to split, got {n}")
    n_train = max(1, (7 * n) // 10)
    perm = np.random.default_rng(seed).permutation(n)
    return IndexSplit(_frozen(np.sort(perm[:n_train])), _frozen(np.sort(perm[n_train:])))


def inner_split(train, seed) -> InnerSplit:
    """Partition ``train`` into a fitting part (ceil 90%) and a validation part."""
    train = np.asarray(train, dtype=np.intp)
    m = train.size
    if m < 2:
        raise SplitTooSmall(f"need at least 2 training cases, got {m}")
    n_x2 = m // 10
    if n_x2 == 0:
        raise X2Empty(f"{m} training cases leave no validation cases")
    perm = np.random.default_rng(seed).permutation(m)
    n_x1 = m - n_x2
    return InnerSplit(
        _frozen(np.sort(train[perm[:n_x1]])), _frozen(np.sort(train[perm[n_x1:]]))
    )


# name -> (num_vars, instances, alternative num_vars quoted in the dataset
# descriptions).  The alternatives disagree with the table for some problems,
# so the conformance check reports either as acceptable.
BENCHMARK_TABLE: dict[str, tuple[int, int, tuple[int, ...]]] = {
    "airfoil": (5, 1502, ()),
    "bioav": (241, 359, ()),
    "concrete": (8, 1029, (6,)),
    "parkinson": (18, 5875, ()),
    "ppb": (628, 131, (626,)),
    "slump": (9, 102, (8,)),
    "ld50": (6, 307, (626,)),
}


def friedman_surrogate(n: int = 1000, num_vars: int = 8, noise: float = 0.5, seed=0) -> Dataset:
    """Smooth nonlinear response of ``num_vars`` (>= 5) uniform inputs plus
    mild Gaussian noise."""
    if num_vars < 5:
        raise ValueError("friedman_surrogate needs at least 5 inputs")
    rng = np.random.default_rng(seed)
    x = rng.uniform(0.0, 1.0, size=(n, num_vars))
    y = (
        10.0 * np.sin(np.pi * x[:, 0] * x[:, 1])
        + 20.0 * (x[:, 2] - 0.5) ** 2
        + 10.0 * x[:, 3]
        + 5.0 * x[:, 4]
    )
    if num_vars >= 8:
        y = y + 4.0 * x[:, 5] * x[:, 6] - 3.0 * x[:, 7]
    y = y + rng.normal(0.0, noise, size=n)
    return Dataset("friedman", x, y)


def wide_noisy(n: int = 60, num_vars: int = 50, noise: float = 0.3, seed=0) -> Dataset:
    """Few cases, many inputs: the target depends on the first five inputs
    only, the remaining ``num_vars - 5`` are pure noise.  Inputs are drawn
    from [1, 2] so protected division never dominates the signal."""
    if num_vars < 5:
        raise ValueError("wide_noisy needs at least 5 inputs")
    rng = np.random.default_rng(seed)
    x = rng.uniform(1.0, 2.0, size=(n, num_vars))
    y = x[:, 0] + x[:, 1] * x[:, 2] + x[:, 3] - x[:, 4] + rng.normal(0.0, noise, size=n)
    return Dataset("wide", x, y)
