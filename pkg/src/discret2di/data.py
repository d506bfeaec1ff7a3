"""Time-series containers, CSV persistence, standardization and splitting.

Every other module consumes :class:`TimeSeries` objects produced here. A
TimeSeries is immutable after construction; all transforms return new
instances.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DataError(ValueError):
    """Raised for malformed time-series input (files or in-memory)."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TimeSeries:
    """Timestamped frames of real-valued sensor channels.

    timestamps: strictly increasing integer sample ticks, shape (N,)
    channels:   ordered channel names, length C
    values:     float matrix, shape (N, C), all entries finite
    """

    timestamps: np.ndarray
    channels: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        ts = _frozen(np.asarray(self.timestamps, dtype=np.int64))
        vals = _frozen(np.asarray(self.values, dtype=np.float64))
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "values", vals)
        if vals.ndim != 2:
            raise DataError(f"values must be 2-D, got shape {vals.shape}")
        if ts.ndim != 1 or ts.shape[0] != vals.shape[0]:
            raise DataError(
                f"row mismatch: {ts.shape[0]} timestamps, {vals.shape[0]} value rows"
            )
        if vals.shape[1] != len(self.channels):
            raise DataError(
                f"column mismatch: {len(self.channels)} channel names, "
                f"{vals.shape[1]} value columns"
            )
        if len(set(self.channels)) != len(self.channels):
            raise DataError("duplicate channel names")
        if ts.size > 1 and not np.all(np.diff(ts) > 0):
            raise DataError("timestamps must be strictly increasing")
        if vals.size and not np.all(np.isfinite(vals)):
            raise DataError("values contain NaN or Inf")

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def n_channels(self) -> int:
        return len(self.channels)

    def channel(self, name: str) -> np.ndarray:
        """Column of values for one named channel."""
        try:
            idx = self.channels.index(name)
        except ValueError:
            raise DataError(f"unknown channel {name!r}") from None
        return self.values[:, idx]

    def select(self, names: list[str] | tuple[str, ...]) -> "TimeSeries":
        """New TimeSeries restricted to the given channels, in the given order."""
        idx = []
        for name in names:
            if name not in self.channels:
                raise DataError(f"unknown channel {name!r}")
            idx.append(self.channels.index(name))
        return TimeSeries(self.timestamps, tuple(names), self.values[:, idx])

    def take_rows(self, rows: np.ndarray) -> "TimeSeries":
        """New TimeSeries made of the given row indices (must be ascending)."""
        rows = np.asarray(rows, dtype=np.int64)
        return TimeSeries(self.timestamps[rows], self.channels, self.values[rows])


def load_csv(path, schema="infer") -> TimeSeries:
    """Load a TimeSeries from a comma-separated file with a header row.

    The first column is interpreted as the timestamp when named ``time`` or
    ``timestamp``; otherwise synthetic 0..N-1 ticks are used and every column
    is a data channel. ``schema`` is either "infer" or the expected list of
    channel names (an exact, ordered match is required).
    """
    import os

    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    with open(path, "r", encoding="utf-8", newline="") as fh:
        header_line = fh.readline()
        if not header_line:
            raise DataError(f"empty file: {path}")
        header = [h.strip() for h in header_line.rstrip("\n").split(",")]
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            cells = line.split(",")
            if len(cells) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} cells, got {len(cells)}"
                )
            try:
                rows.append([float(c) for c in cells])
            except ValueError:
                raise DataError(f"{path}:{lineno}: non-numeric cell") from None

    has_time = header and header[0].lower() in ("time", "timestamp")
    raw = np.asarray(rows, dtype=np.float64) if rows else np.empty((0, len(header)))
    if has_time:
        channels = header[1:]
        t_float = raw[:, 0] if len(raw) else np.empty(0)
        if len(t_float) and not np.all(t_float == np.floor(t_float)):
            raise DataError(f"{path}: non-integer timestamp")
        timestamps = t_float.astype(np.int64)
        if len(timestamps) > 1 and not np.all(np.diff(timestamps) > 0):
            raise DataError(f"{path}: duplicate or decreasing timestamps")
        values = raw[:, 1:] if len(raw) else np.empty((0, len(channels)))
    else:
        channels = header
        timestamps = np.arange(len(raw), dtype=np.int64)
        values = raw

    if schema != "infer":
        expected = list(schema)
        if channels != expected:
            raise DataError(
                f"{path}: header {channels} does not match expected schema {expected}"
            )
    return TimeSeries(timestamps, tuple(channels), values)


def save_csv(ts: TimeSeries, path) -> None:
    """Write a TimeSeries as CSV (header, 17 significant digits, LF endings)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(["time", *ts.channels]) + "\n")
        for t, row in zip(ts.timestamps, ts.values):
            cells = [str(int(t))] + [f"{v:.17g}" for v in row]
            fh.write(",".join(cells) + "\n")


@dataclass(frozen=True)
class Standardizer:
    """Per-channel affine map x -> (x - mean) / std with strictly positive std."""

    channels: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "mean", _frozen(np.asarray(self.mean, dtype=np.float64)))
        object.__setattr__(self, "std", _frozen(np.asarray(self.std, dtype=np.float64)))
        if np.any(self.std <= 0):
            raise DataError("standard deviations must be strictly positive")

    def transform_values(self, values: np.ndarray) -> np.ndarray:
        return (np.asarray(values, dtype=np.float64) - self.mean) / self.std

    def invert_values(self, values: np.ndarray) -> np.ndarray:
        return np.asarray(values, dtype=np.float64) * self.std + self.mean

    def to_dict(self) -> dict:
        return {
            "channels": list(self.channels),
            "mean": self.mean.tolist(),
            "std": self.std.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(tuple(d["channels"]), np.asarray(d["mean"]), np.asarray(d["std"]))


def fit_standardizer(data: TimeSeries) -> Standardizer:
    """Per-channel sample mean and std (denominator N-1).

    Channels with std below 1e-12 get std forced to 1 so standardization
    degenerates to a pure mean shift.
    """
    if len(data) < 2:
        raise DataError("need at least 2 rows to fit a standardizer")
    mean = data.values.mean(axis=0)
    std = data.values.std(axis=0, ddof=1)
    std = np.where(std < 1e-12, 1.0, std)
    return Standardizer(data.channels, mean, std)


def _check_channels(std: Standardizer, data: TimeSeries) -> None:
    if tuple(std.channels) != tuple(data.channels):
        raise DataError(
            f"channel mismatch: standardizer {std.channels} vs data {data.channels}"
        )


def apply_standardizer(std: Standardizer, data: TimeSeries) -> TimeSeries:
    _check_channels(std, data)
    return TimeSeries(data.timestamps, data.channels, std.transform_values(data.values))


def invert_standardizer(std: Standardizer, data: TimeSeries) -> TimeSeries:
    _check_channels(std, data)
    return TimeSeries(data.timestamps, data.channels, std.invert_values(data.values))


def split_train_val(
    data: TimeSeries, train_fraction: float = 0.7, seed: int = 0
) -> tuple[TimeSeries, TimeSeries]:
    """Random row partition into (train, val), deterministic per seed.

    Membership comes from a seeded shuffle (the first floor(f*N) shuffled
    rows train, the rest validate); rows inside each part are then re-sorted
    by timestamp so both parts remain valid TimeSeries. Both parts are
    guaranteed non-empty.
    """
    n = len(data)
    if n < 2:
        raise DataError("need at least 2 rows to split")
    if not (0.0 < train_fraction < 1.0):
        raise DataError("train_fraction must be in (0, 1)")
    rng = np.random.default_rng(seed)
    order = rng.permutation(n)
    n_train = int(np.floor(train_fraction * n))
    n_train = min(max(n_train, 1), n - 1)
    train_rows = np.sort(order[:n_train])
    val_rows = np.sort(order[n_train:])
    return data.take_rows(train_rows), data.take_rows(val_rows)
