"""Curve ingestion: zero trimming, time normalization, and dataset I/O.

Raw force-plate trials arrive as per-channel sample sequences taken at a
constant rate. The pipeline trims the non-informative zero padding outside
foot contact, rescales the time axis to [0, 1], and resamples every channel
onto one evenly spaced grid shared across the dataset.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    AllZeroChannel,
    InvariantViolation,
    ParseError,
    SchemaError,
    TooFewSamples,
)
from .errors import ChannelNotFound

DEFAULT_GRID_LENGTH = 101
DEFAULT_ZERO_TOL = 1e-9
GRF_CHANNELS = ("vGRF", "apGRF", "mlGRF")

CSV_HEADER = ("subject_id", "trial_id", "channel", "index", "time", "value")


def uniform_grid(n: int) -> np.ndarray:
    """Evenly spaced grid of n points on [0, 1]."""
    return np.linspace(0.0, 1.0, n)


def _is_uniform(grid: np.ndarray, rtol: float = 1e-12) -> bool:
    if grid.ndim != 1 or grid.size < 2:
        return False
    target = uniform_grid(grid.size)
    return bool(np.max(np.abs(grid - target)) <= rtol * max(1.0, grid.size))


@dataclass(frozen=True)
class RawTrial:
    """One recorded trial: equal-length force samples for each channel.

    Attributes
    ----------
    trial_id, subject_id : str
        Identifiers; several trials may share a subject.
    channels : tuple of str
        Ordered channel names, e.g. ("vGRF", "apGRF", "mlGRF").
    samples : ndarray, shape (num_channels, n)
        Body-weight-normalized force values at a constant sampling rate.
    sample_rate : float
        Samples per second; informational only.
    """

    trial_id: str
    subject_id: str
    channels: tuple[str, ...]
    samples: np.ndarray
    sample_rate: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "samples", np.asarray(self.samples, dtype=float))

    def validate(self) -> "RawTrial":
        if len(set(self.channels)) != len(self.channels):
            raise InvariantViolation(f"duplicate channel names in trial {self.trial_id!r}")
        if self.samples.ndim != 2 or self.samples.shape[0] != len(self.channels):
            raise InvariantViolation(
                f"trial {self.trial_id!r}: samples must be (num_channels, n)"
            )
        if self.samples.shape[1] < 4:
            raise InvariantViolation(f"trial {self.trial_id!r}: fewer than 4 samples")
        return self

    @property
    def n_samples(self) -> int:
        return self.samples.shape[1]

    def channel_index(self, name: str) -> int:
        try:
            return self.channels.index(name)
        except ValueError:
            raise ChannelNotFound(name) from None


@dataclass(frozen=True)
class Curve:
    """Multichannel function samples on a common evenly spaced grid over [0, 1]."""

    trial_id: str
    subject_id: str
    channels: tuple[str, ...]
    grid: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "grid", np.asarray(self.grid, dtype=float))
        object.__setattr__(self, "values", np.asarray(self.values, dtype=float))

    def validate(self) -> "Curve":
        if not _is_uniform(self.grid):
            raise InvariantViolation(f"curve {self.trial_id!r}: grid is not evenly spaced on [0, 1]")
        if self.values.shape != (len(self.channels), self.grid.size):
            raise InvariantViolation(
                f"curve {self.trial_id!r}: values shape {self.values.shape} does not "
                f"match {len(self.channels)} channels x {self.grid.size} grid points"
            )
        if not np.all(np.isfinite(self.values)):
            raise InvariantViolation(f"curve {self.trial_id!r}: non-finite values")
        return self

    def channel_index(self, name: str) -> int:
        try:
            return self.channels.index(name)
        except ValueError:
            raise ChannelNotFound(name) from None

    def channel(self, name: str) -> np.ndarray:
        return self.values[self.channel_index(name)]


@dataclass(frozen=True)
class Dataset:
    """A collection of curves on one grid, grouped by subject."""

    curves: tuple[Curve, ...]
    subjects: dict[str, list[int]] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "curves", tuple(self.curves))
        if not self.subjects:
            groups: dict[str, list[int]] = {}
            for i, c in enumerate(self.curves):
                groups.setdefault(c.subject_id, []).append(i)
            object.__setattr__(self, "subjects", groups)

    @property
    def n_curves(self) -> int:
        return len(self.curves)

    @property
    def grid(self) -> np.ndarray:
        return self.curves[0].grid

    @property
    def channels(self) -> tuple[str, ...]:
        return self.curves[0].channels

    def validate(self) -> "Dataset":
        if not self.curves:
            return self
        ref = self.curves[0]
        for c in self.curves:
            c.validate()
            if c.channels != ref.channels:
                raise InvariantViolation("curves do not share one channel ordering")
            if c.grid.size != ref.grid.size or np.max(np.abs(c.grid - ref.grid)) > 1e-12:
                raise InvariantViolation("curves do not share one grid")
        seen: dict[int, str] = {}
        for sid, idxs in self.subjects.items():
            for i in idxs:
                if i in seen:
                    raise InvariantViolation(f"curve {i} assigned to two subjects")
                if self.curves[i].subject_id != sid:
                    raise InvariantViolation(f"curve {i} grouped under wrong subject")
                seen[i] = sid
        if len(seen) != len(self.curves):
            raise InvariantViolation("some curves belong to no subject group")
        return self


def trim_zeros(
    trial: RawTrial,
    reference_channel: str = "vGRF",
    zero_tol: float = DEFAULT_ZERO_TOL,
) -> RawTrial:
    """Cut a trial to the informative segment of its reference channel.

    The segment runs from the zero sample immediately preceding the first
    nonzero reference sample through the zero immediately following the last
    nonzero sample; when no such zero exists the cut clamps to the ends.
    All channels are cut at the same indices. A sample counts as zero when
    its magnitude is below ``zero_tol``.
    """
    ref = trial.samples[trial.channel_index(reference_channel)]
    nonzero = np.flatnonzero(np.abs(ref) >= zero_tol)
    if nonzero.size == 0:
        raise AllZeroChannel(
            f"trial {trial.trial_id!r}: channel {reference_channel!r} is identically zero"
        )
    start = max(int(nonzero[0]) - 1, 0)
    stop = min(int(nonzero[-1]) + 1, ref.size - 1)
    return RawTrial(
        trial_id=trial.trial_id,
        subject_id=trial.subject_id,
        channels=trial.channels,
        samples=trial.samples[:, start : stop + 1],
        sample_rate=trial.sample_rate,
    )


def normalize_time(trial: RawTrial, grid_length: int = DEFAULT_GRID_LENGTH) -> Curve:
    """Rescale a trimmed trial's time axis to [0, 1] and resample it.

    Each channel is linearly interpolated onto an evenly spaced grid of
    ``grid_length`` points; the first and last samples are preserved exactly.
    """
    n = trial.n_samples
    if n < 2:
        raise TooFewSamples(f"trial {trial.trial_id!r}: need at least 2 samples, got {n}")
    if grid_length < 2:
        raise ValueError("grid_length must be at least 2")
    t_old = uniform_grid(n)
    grid = uniform_grid(grid_length)
    values = np.vstack([np.interp(grid, t_old, ch) for ch in trial.samples])
    return Curve(
        trial_id=trial.trial_id,
        subject_id=trial.subject_id,
        channels=trial.channels,
        grid=grid,
        values=values,
    ).validate()


def preprocess_trials(
    trials: list[RawTrial],
    grid_length: int = DEFAULT_GRID_LENGTH,
    reference_channel: str = "vGRF",
    zero_tol: float = DEFAULT_ZERO_TOL,
) -> Dataset:
    """Trim and resample raw trials into a validated Dataset."""
    curves = [
        normalize_time(trim_zeros(t.validate(), reference_channel, zero_tol), grid_length)
        for t in trials
    ]
    return Dataset(curves=tuple(curves)).validate()


# ---------------------------------------------------------------------------
# File I/O
#
# CSV long format, header required:
#   subject_id,trial_id,channel,index,time,value
# JSONL: one object per trial with subject_id, trial_id and a channels
# mapping of name -> array of values.
# ---------------------------------------------------------------------------


def _float(cell: str, where: str) -> float:
    try:
        return float(cell)
    except ValueError:
        raise ParseError(f"{where}: cannot parse {cell!r} as a number") from None


def _read_long_csv(path) -> list[dict]:
    """Parse the long CSV into per-trial records, preserving file order."""
    records: dict[str, dict] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: empty file") from None
        missing = [c for c in CSV_HEADER if c not in header]
        if missing:
            raise SchemaError(f"{path}: missing columns {missing}")
        col = {name: header.index(name) for name in CSV_HEADER}
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} cells, got {len(row)}")
            where = f"{path}:{lineno}"
            tid = row[col["trial_id"]]
            rec = records.setdefault(
                tid,
                {"subject_id": row[col["subject_id"]], "channels": {}, "order": []},
            )
            if rec["subject_id"] != row[col["subject_id"]]:
                raise SchemaError(f"{where}: trial {tid!r} appears under two subjects")
            ch = row[col["channel"]]
            if ch not in rec["channels"]:
                rec["channels"][ch] = {}
                rec["order"].append(ch)
            idx = int(_float(row[col["index"]], where))
            rec["channels"][ch][idx] = (
                _float(row[col["time"]], where),
                _float(row[col["value"]], where),
            )
    out = []
    for tid, rec in records.items():
        lengths = {ch: len(d) for ch, d in rec["channels"].items()}
        if len(set(lengths.values())) != 1:
            raise SchemaError(f"{path}: trial {tid!r} has ragged channel lengths {lengths}")
        n = next(iter(lengths.values()))
        times = None
        values = []
        for ch in rec["order"]:
            d = rec["channels"][ch]
            if sorted(d) != list(range(n)):
                raise SchemaError(f"{path}: trial {tid!r} channel {ch!r} has gaps in index")
            tv = np.array([d[i] for i in range(n)], dtype=float)
            if times is None:
                times = tv[:, 0]
            values.append(tv[:, 1])
        out.append(
            {
                "trial_id": tid,
                "subject_id": rec["subject_id"],
                "channels": tuple(rec["order"]),
                "times": times,
                "values": np.vstack(values),
            }
        )
    return out


def _read_jsonl(path) -> list[dict]:
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"{path}:{lineno}: invalid JSON ({exc})") from None
            for key in ("subject_id", "trial_id", "channels"):
                if key not in obj:
                    raise SchemaError(f"{path}:{lineno}: missing key {key!r}")
            chans = obj["channels"]
            if not isinstance(chans, dict) or not chans:
                raise SchemaError(f"{path}:{lineno}: channels must be a nonempty mapping")
            lengths = {ch: len(v) for ch, v in chans.items()}
            if len(set(lengths.values())) != 1:
                raise SchemaError(
                    f"{path}:{lineno}: trial {obj['trial_id']!r} has ragged channel lengths"
                )
            n = next(iter(lengths.values()))
            out.append(
                {
                    "trial_id": str(obj["trial_id"]),
                    "subject_id": str(obj["subject_id"]),
                    "channels": tuple(chans),
                    "times": np.linspace(0.0, 1.0, n),
                    "values": np.array([chans[ch] for ch in chans], dtype=float),
                }
            )
    return out


def load_raw_trials(path, format: str = "csv") -> list[RawTrial]:
    """Read raw trials (arbitrary lengths, constant sampling assumed)."""
    if format not in ("csv", "jsonl"):
        raise ValueError(f"unknown format {format!r}")
    recs = _read_long_csv(path) if format == "csv" else _read_jsonl(path)
    trials = []
    for r in recs:
        rate = 0.0
        t = r["times"]
        if t is not None and t.size >= 2 and t[-1] > t[0]:
            rate = (t.size - 1) / (t[-1] - t[0])
        trials.append(
            RawTrial(
                trial_id=r["trial_id"],
                subject_id=r["subject_id"],
                channels=r["channels"],
                samples=r["values"],
                sample_rate=rate,
            ).validate()
        )
    return trials


def load_dataset(path, format: str = "csv") -> Dataset:
    """Read curves already on a common evenly spaced [0, 1] grid."""
    if format not in ("csv", "jsonl"):
        raise ValueError(f"unknown format {format!r}")
    recs = _read_long_csv(path) if format == "csv" else _read_jsonl(path)
    curves = []
    for r in recs:
        n = r["values"].shape[1]
        grid = uniform_grid(n)
        if format == "csv" and np.max(np.abs(r["times"] - grid)) > 1e-9:
            raise InvariantViolation(
                f"{path}: trial {r['trial_id']!r} time column is not the uniform [0, 1] grid"
            )
        curves.append(
            Curve(
                trial_id=r["trial_id"],
                subject_id=r["subject_id"],
                channels=r["channels"],
                grid=grid,
                values=r["values"],
            )
        )
    return Dataset(curves=tuple(curves)).validate()


def save_dataset(dataset: Dataset, path, format: str = "csv") -> None:
    """Write a Dataset in the long CSV or JSONL interchange format."""
    if format == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER)
            for curve in dataset.curves:
                for c, ch in enumerate(curve.channels):
                    for i, (t, v) in enumerate(zip(curve.grid, curve.values[c])):
                        writer.writerow(
                            [curve.subject_id, curve.trial_id, ch, i, f"{t:.17g}", f"{v:.17g}"]
                        )
    elif format == "jsonl":
        with open(path, "w") as fh:
            for curve in dataset.curves:
                obj = {
                    "subject_id": curve.subject_id,
                    "trial_id": curve.trial_id,
                    "channels": {ch: curve.values[c].tolist() for c, ch in enumerate(curve.channels)},
                }
                fh.write(json.dumps(obj) + "\n")
    else:
        raise ValueError(f"unknown format {format!r}")
