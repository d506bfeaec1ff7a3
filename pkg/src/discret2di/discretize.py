"""Maps model outputs per timestamp into symbolic (state, residual) pairs.

The observational state is the model's argmax category; the residual state
is a boolean obtained by thresholding the model's log-likelihood: True (ok)
iff log-likelihood >= threshold. Binary residuals only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .catvae import CatVaeModel, infer_batch
from .data import DataError, TimeSeries
from .gmm import GmmModel, gmm_assign_batch

DEFAULT_LIKELIHOOD_THRESHOLD = -50.0

Model = Union[CatVaeModel, GmmModel]


@dataclass(frozen=True)
class SymbolRecord:
    timestamp: int
    state: int
    ok: bool
    log_likelihood: float


@dataclass(frozen=True)
class SymbolSequence:
    """Per-timestamp (state, residual) symbols plus the raw likelihood."""

    timestamps: np.ndarray
    states: np.ndarray
    ok: np.ndarray
    log_likelihoods: np.ndarray
    source: str = "catvae"

    def __post_init__(self):
        n = len(self.timestamps)
        if not (len(self.states) == len(self.ok) == len(self.log_likelihoods) == n):
            raise DataError("symbol sequence arrays must share one length")
        if n > 1 and not np.all(np.diff(self.timestamps) > 0):
            raise DataError("timestamps must be strictly increasing")

    def __len__(self) -> int:
        return len(self.timestamps)

    def __iter__(self):
        for i in range(len(self)):
            yield SymbolRecord(
                int(self.timestamps[i]), int(self.states[i]),
                bool(self.ok[i]), float(self.log_likelihoods[i]),
            )

    def save_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("timestamp,state_id,residual_ok,log_likelihood\n")
            for i in range(len(self)):
                fh.write(
                    f"{int(self.timestamps[i])},{int(self.states[i])},"
                    f"{int(self.ok[i])},{self.log_likelihoods[i]:.17g}\n"
                )

    @classmethod
    def load_csv(cls, path, source: str = "catvae") -> "SymbolSequence":
        ts, states, ok, ll = [], [], [], []
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            if header != ["timestamp", "state_id", "residual_ok", "log_likelihood"]:
                raise DataError(f"{path}: unexpected header {header}")
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                a, b, c, d = line.split(",")
                ts.append(int(a))
                states.append(int(b))
                ok.append(bool(int(c)))
                ll.append(float(d))
        return cls(
            np.asarray(ts, dtype=np.int64), np.asarray(states, dtype=np.int64),
            np.asarray(ok, dtype=bool), np.asarray(ll, dtype=np.float64), source,
        )


class Discretizer:
    """Configurable likelihood threshold applied on top of a frozen model."""

    def __init__(self, threshold: float = DEFAULT_LIKELIHOOD_THRESHOLD):
        self.set_residual_threshold(threshold)

    def set_residual_threshold(self, threshold: float) -> "Discretizer":
        if not math.isfinite(threshold):
            raise DataError("likelihood threshold must be finite")
        self.threshold = float(threshold)
        return self

    def discretize_run(self, model: Model, data: TimeSeries) -> SymbolSequence:
        """Symbol per row: argmax category and thresholded log-likelihood."""
        if isinstance(model, CatVaeModel):
            expected = model.standardizer.channels
            source = "catvae"
        else:
            expected = model.standardizer.channels if model.standardizer else None
            source = "gmm"
        if expected is not None and tuple(data.channels) != tuple(expected):
            raise DataError(
                f"channel mismatch: model trained on {tuple(expected)}, "
                f"data has {tuple(data.channels)}"
            )
        if len(data) == 0:
            empty = np.empty(0)
            return SymbolSequence(
                np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64),
                np.empty(0, dtype=bool), empty, source,
            )
        if isinstance(model, CatVaeModel):
            _, categories, ll = infer_batch(model, data.values)
        else:
            categories, ll = gmm_assign_batch(model, data.values)
        return SymbolSequence(
            data.timestamps, categories.astype(np.int64), ll >= self.threshold, ll, source,
        )


def discretize_run(
    model: Model, data: TimeSeries, threshold: float = DEFAULT_LIKELIHOOD_THRESHOLD
) -> SymbolSequence:
    return Discretizer(threshold).discretize_run(model, data)


def state_histogram(seq: SymbolSequence) -> dict[int, int]:
    """Exact multiset counts of state ids."""
    ids, counts = np.unique(seq.states, return_counts=True)
    return {int(i): int(c) for i, c in zip(ids, counts)}
