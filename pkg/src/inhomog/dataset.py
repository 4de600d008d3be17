"""Tabular training data: CSV ingestion, validation, standardization, index reduction.

Outputs may be tensors of any declared shape; they are stored flattened
row-major with the shape kept as metadata, since every downstream estimator
only needs a flat view of each output.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataValidationError


@dataclass(frozen=True)
class Dataset:
    """N input/output observations.

    Attributes
    ----------
    inputs : (N, d) float array
        One row per observation, raw units.
    outputs : (N, P) float array
        Flattened output tensors, row-major.
    input_names, output_names : tuples of column labels.
    shape : declared output tensor shape; prod(shape) == P.

    A dataset normally has N >= 2 (enforced at ingestion); single-row
    datasets arise only as prediction-side splits.
    """

    inputs: np.ndarray
    outputs: np.ndarray
    input_names: tuple[str, ...]
    output_names: tuple[str, ...]
    shape: tuple[int, ...]

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=float)
        outputs = np.asarray(self.outputs, dtype=float)
        if inputs.ndim != 2 or outputs.ndim != 2:
            raise DataValidationError("inputs and outputs must be 2-d arrays")
        if inputs.shape[0] != outputs.shape[0]:
            raise DataValidationError(
                f"row mismatch: {inputs.shape[0]} inputs vs {outputs.shape[0]} outputs"
            )
        if inputs.shape[0] < 1:
            raise DataValidationError("dataset needs at least one row")
        if inputs.shape[1] < 1:
            raise DataValidationError("dataset needs at least one input column")
        if not np.all(np.isfinite(inputs)) or not np.all(np.isfinite(outputs)):
            raise DataValidationError("non-finite value in dataset")
        if math.prod(self.shape) != outputs.shape[1]:
            raise DataValidationError(
                f"declared shape {self.shape} does not match flat output length {outputs.shape[1]}"
            )
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "input_names", tuple(self.input_names))
        object.__setattr__(self, "output_names", tuple(self.output_names))
        object.__setattr__(self, "shape", tuple(int(m) for m in self.shape))

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def d(self) -> int:
        return self.inputs.shape[1]

    @property
    def p(self) -> int:
        return self.outputs.shape[1]

    @property
    def column_names(self) -> tuple[str, ...]:
        return self.input_names + self.output_names


@dataclass(frozen=True)
class ReducedDataset:
    """Outputs re-indexed by ordinal position 1..N; inputs discarded."""

    index: np.ndarray   # (N,) consecutive ints starting at 1
    outputs: np.ndarray  # (N, P)

    @property
    def n(self) -> int:
        return self.outputs.shape[0]


@dataclass(frozen=True)
class StandardizedOutputs:
    """Per-component standardized outputs with the constants to invert them.

    values[i, p] * sd[p] + mean[p] reconstructs the original output.
    """

    values: np.ndarray  # (N, P)
    mean: np.ndarray    # (P,)
    sd: np.ndarray      # (P,) sample sd, denominator N-1

    def unstandardize(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values) * self.sd + self.mean


def load_csv(
    path: str | Path,
    input_cols: Sequence[str],
    output_cols: Sequence[str],
    shape: tuple[int, ...] | None = None,
) -> Dataset:
    """Read a UTF-8 comma-separated file with one header row into a Dataset.

    ``input_cols`` and ``output_cols`` name which header columns play which
    role; any other column is ignored. ``shape`` defaults to ``(P,)`` where
    P = len(output_cols).
    """
    path = Path(path)
    if not path.exists():
        raise DataValidationError(f"no such file: {path}")
    input_cols = list(input_cols)
    output_cols = list(output_cols)
    if not input_cols or not output_cols:
        raise DataValidationError("schema must name at least one input and one output column")

    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        for col in input_cols + output_cols:
            if col not in header:
                raise DataValidationError(f"{path}: column {col!r} absent from header {header}")
        in_idx = [header.index(c) for c in input_cols]
        out_idx = [header.index(c) for c in output_cols]

        inputs, outputs = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataValidationError(
                    f"{path}:{lineno}: ragged row ({len(row)} cells, header has {len(header)})"
                )
            try:
                inputs.append([float(row[j]) for j in in_idx])
                outputs.append([float(row[j]) for j in out_idx])
            except ValueError as exc:
                raise DataValidationError(f"{path}:{lineno}: non-numeric cell ({exc})") from None

    if len(inputs) < 2:
        raise DataValidationError(f"{path}: N < 2 (got {len(inputs)} data rows)")
    if shape is None:
        shape = (len(output_cols),)
    return Dataset(
        inputs=np.asarray(inputs, dtype=float),
        outputs=np.asarray(outputs, dtype=float),
        input_names=tuple(input_cols),
        output_names=tuple(output_cols),
        shape=shape,
    )


def write_csv(ds: Dataset, path: str | Path) -> None:
    """Write a Dataset back to CSV, preserving numeric content to 15+ significant digits."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(ds.column_names)
        for i in range(ds.n):
            row = [f"{v:.17g}" for v in ds.inputs[i]] + [f"{v:.17g}" for v in ds.outputs[i]]
            writer.writerow(row)


def standardize(ds: Dataset) -> StandardizedOutputs:
    """Center and scale each output component to sample mean 0 and sample sd 1."""
    mean = ds.outputs.mean(axis=0)
    if ds.n < 2:
        raise DataValidationError("standardization needs at least two rows")
    sd = ds.outputs.std(axis=0, ddof=1)
    bad = np.flatnonzero(sd <= 0.0)
    if bad.size:
        raise DataValidationError(
            f"constant output component: {', '.join(ds.output_names[j] if j < len(ds.output_names) else str(j) for j in bad)}"
        )
    values = (ds.outputs - mean) / sd
    return StandardizedOutputs(values=values, mean=mean, sd=sd)


def reduce(ds: Dataset) -> ReducedDataset:
    """Replace inputs by the ordinal index 1..N, keeping outputs in order."""
    return ReducedDataset(index=np.arange(1, ds.n + 1), outputs=ds.outputs.copy())


def split(
    ds: Dataset,
    train_idx: Sequence[int],
    test_idx: Sequence[int],
) -> tuple[Dataset, Dataset]:
    """Partition rows by disjoint 1-based index sets, preserving row order.

    The train side keeps the N >= 2 requirement; the test side permits a
    single row (prediction needs only one point).
    """
    train = np.asarray(sorted(set(int(i) for i in train_idx)), dtype=int)
    test = np.asarray(sorted(set(int(i) for i in test_idx)), dtype=int)
    overlap = np.intersect1d(train, test)
    if overlap.size:
        raise DataValidationError(f"train/test index sets overlap: {overlap[:5].tolist()}...")
    for name, idx in (("train", train), ("test", test)):
        if idx.size and (idx.min() < 1 or idx.max() > ds.n):
            raise DataValidationError(f"{name} index out of range 1..{ds.n}")
    if train.size < 2:
        raise DataValidationError("train split has N < 2")
    if test.size < 1:
        raise DataValidationError("test split is empty")

    def take(idx: np.ndarray) -> Dataset:
        return Dataset(
            inputs=ds.inputs[idx - 1],
            outputs=ds.outputs[idx - 1],
            input_names=ds.input_names,
            output_names=ds.output_names,
            shape=ds.shape,
        )

    return take(train), take(test)
