"""Predictive scoring: RMSE and the compatibility fraction, plus report emission."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataValidationError


@dataclass(frozen=True)
class PredictionSet:
    """Per-test-point inputs, optional truths, predictive means and sds."""

    x: np.ndarray              # (n, d)
    mean: np.ndarray           # (n,)
    sd: np.ndarray             # (n,)
    y_true: np.ndarray | None = None  # (n,)

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        mean = np.asarray(self.mean, dtype=float).ravel()
        sd = np.asarray(self.sd, dtype=float).ravel()
        n = x.shape[0]
        if len(mean) != n or len(sd) != n:
            raise DataValidationError("prediction arrays disagree on length")
        if n < 1:
            raise DataValidationError("empty prediction set")
        if np.any(sd < 0):
            raise DataValidationError("predictive sd must be nonnegative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "sd", sd)
        if self.y_true is not None:
            y = np.asarray(self.y_true, dtype=float).ravel()
            if len(y) != n:
                raise DataValidationError("y_true length does not match predictions")
            object.__setattr__(self, "y_true", y)

    @property
    def n(self) -> int:
        return len(self.mean)

    def _require_truth(self) -> np.ndarray:
        if self.y_true is None:
            raise DataValidationError("true outputs are required for scoring")
        return self.y_true


def rmse(ps: PredictionSet) -> float:
    """sqrt(mean squared error) of the predictive means, original units."""
    y = ps._require_truth()
    return math.sqrt(float(np.mean((y - ps.mean) ** 2)))


def compatibility(ps: PredictionSet) -> float:
    """Fraction of truths inside the closed one-sd band [mean - sd, mean + sd]."""
    y = ps._require_truth()
    inside = (y >= ps.mean - ps.sd) & (y <= ps.mean + ps.sd)
    return float(np.count_nonzero(inside)) / ps.n


def write_predictions_csv(ps: PredictionSet, path: str | Path, input_names=None) -> None:
    path = Path(path)
    d = ps.x.shape[1]
    if input_names is None:
        input_names = [f"x_{j + 1}" for j in range(d)]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index", *input_names, "truth", "mean", "sd"])
        for i in range(ps.n):
            truth = f"{ps.y_true[i]:.17g}" if ps.y_true is not None else ""
            writer.writerow(
                [i + 1]
                + [f"{v:.17g}" for v in ps.x[i]]
                + [truth, f"{ps.mean[i]:.17g}", f"{ps.sd[i]:.17g}"]
            )


def read_predictions_csv(path: str | Path) -> PredictionSet:
    path = Path(path)
    if not path.exists():
        raise DataValidationError(f"no such file: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:1] != ["index"] or header[-3:] != ["truth", "mean", "sd"]:
            raise DataValidationError(f"{path}: not a predictions file (header {header})")
        x, y, mean, sd = [], [], [], []
        has_truth = True
        for row in reader:
            if not row:
                continue
            x.append([float(v) for v in row[1:-3]])
            if row[-3] == "":
                has_truth = False
            else:
                y.append(float(row[-3]))
            mean.append(float(row[-2]))
            sd.append(float(row[-1]))
    return PredictionSet(
        x=np.asarray(x),
        mean=np.asarray(mean),
        sd=np.asarray(sd),
        y_true=np.asarray(y) if has_truth else None,
    )


def emit_prediction_report(
    ps: PredictionSet,
    csv_path: str | Path,
    json_path: str | Path,
    model: str = "",
    input_names=None,
) -> dict:
    """Write predictions.csv and summary.json; returns the summary payload."""
    write_predictions_csv(ps, csv_path, input_names)
    summary = {
        "model": model,
        "n_test": ps.n,
        "rmse": rmse(ps),
        "compatibility": compatibility(ps),
    }
    Path(json_path).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return summary
