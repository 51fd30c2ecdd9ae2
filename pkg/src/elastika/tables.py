"""Small tabular containers shared between modules, with CSV round trips."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import SchemaError, SizeMismatch


@dataclass
class FeatureMatrix:
    """Per-curve feature rows with embedded column names.

    trial_ids/subject_ids are optional metadata carried along so rows can
    be joined with trait tables downstream.
    """

    values: np.ndarray
    columns: tuple[str, ...]
    trial_ids: tuple[str, ...] | None = None
    subject_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        self.values = np.atleast_2d(np.asarray(self.values, dtype=float))
        self.columns = tuple(self.columns)
        if self.values.shape[1] != len(self.columns):
            raise SizeMismatch(
                f"{self.values.shape[1]} value columns vs {len(self.columns)} names"
            )

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.columns.index(name)]
        except ValueError:
            raise KeyError(name) from None

    def select(self, names) -> np.ndarray:
        idx = [self.columns.index(n) for n in names]
        return self.values[:, idx]

    def with_ids(self, trial_ids, subject_ids) -> "FeatureMatrix":
        if len(trial_ids) != self.n_rows or len(subject_ids) != self.n_rows:
            raise SizeMismatch("id count does not match row count")
        return FeatureMatrix(
            values=self.values,
            columns=self.columns,
            trial_ids=tuple(trial_ids),
            subject_ids=tuple(subject_ids),
        )


def save_feature_matrix(fm: FeatureMatrix, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        ids = fm.trial_ids is not None and fm.subject_ids is not None
        header = (["subject_id", "trial_id"] if ids else []) + list(fm.columns)
        writer.writerow(header)
        for i in range(fm.n_rows):
            row = [fm.subject_ids[i], fm.trial_ids[i]] if ids else []
            writer.writerow(row + [f"{v:.17g}" for v in fm.values[i]])


def load_feature_matrix(path) -> FeatureMatrix:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        has_ids = header[:2] == ["subject_id", "trial_id"]
        names = header[2:] if has_ids else header
        rows, trial_ids, subject_ids = [], [], []
        for row in reader:
            if not row:
                continue
            if has_ids:
                subject_ids.append(row[0])
                trial_ids.append(row[1])
                rows.append([float(v) for v in row[2:]])
            else:
                rows.append([float(v) for v in row])
    return FeatureMatrix(
        values=np.array(rows, dtype=float),
        columns=tuple(names),
        trial_ids=tuple(trial_ids) if has_ids else None,
        subject_ids=tuple(subject_ids) if has_ids else None,
    )
