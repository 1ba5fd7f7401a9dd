"""Benchmark input streams, targets and dataset splitting.

Two target families are provided: delayed reproduction of a uniform input
stream (memory probing at a configurable delay) and the order-n nonlinear
autoregressive moving-average recurrence

    y[k] = a y[k-1] + b y[k-1] (1/n) sum_{i=1..n} y[k-i] + c u[k-n] u[k-1] + d

with the conventional constants (0.3, 0.05, 1.5, 0.1) and u drawn uniformly
from [0, 0.5]. The second term's 1/n keeps high orders bounded; a hard guard
turns any residual blow-up into a diagnosable error.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DivergenceError

NARMA_CONSTANTS = (0.3, 0.05, 1.5, 0.1)
NARMA_DEFAULT_ORDERS = (1, 5, 10, 20, 30, 40, 50)
NARMA_INPUT_MAX = 0.5
NARMA_GUARD = 10.0


@dataclass(frozen=True)
class SplitSpec:
    """Washout / training / validation step counts, in trajectory order."""

    washout: int
    train: int
    val: int

    def __post_init__(self):
        if self.washout < 0:
            raise ValueError(f"washout must be >= 0, got {self.washout}")
        if self.train < 1:
            raise ValueError(f"train length must be >= 1, got {self.train}")
        if self.val < 1:
            raise ValueError(f"val length must be >= 1, got {self.val}")

    @property
    def total(self) -> int:
        return self.washout + self.train + self.val

    @property
    def train_slice(self) -> slice:
        return slice(self.washout, self.washout + self.train)

    @property
    def val_slice(self) -> slice:
        return slice(self.washout + self.train, self.total)


@dataclass(frozen=True)
class TaskDataset:
    """Input sequence s in [0, 1], aligned targets y, and the split layout."""

    s: np.ndarray
    y: np.ndarray
    split: SplitSpec
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        s = np.asarray(self.s, dtype=float).ravel()
        y = np.asarray(self.y, dtype=float).ravel()
        if s.size != self.split.total:
            raise ValueError(f"input length {s.size} does not match split total {self.split.total}")
        if y.size != s.size:
            raise ValueError(f"target length {y.size} does not match input length {s.size}")
        if s.size and (s.min() < 0.0 or s.max() > 1.0):
            raise ValueError("inputs must lie in [0, 1]")
        if not np.all(np.isfinite(y)):
            raise ValueError("targets contain non-finite entries")
        for name, arr in (("s", s), ("y", y)):
            arr = arr.copy()
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


class TaskView(NamedTuple):
    """A contiguous [start, stop) slice of a dataset."""

    s: np.ndarray
    y: np.ndarray
    start: int
    stop: int

    @property
    def indices(self) -> range:
        return range(self.start, self.stop)


def gen_uniform_inputs(length: int, lo: float = 0.0, hi: float = 1.0, seed=None) -> np.ndarray:
    """i.i.d. uniform values in [lo, hi), deterministic per seed."""
    if length < 0:
        raise ValueError(f"length must be >= 0, got {length}")
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi})")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.uniform(lo, hi, size=length)


def stm_targets(s, tau_d: int) -> np.ndarray:
    """Delayed-reproduction targets y[k] = s[k - tau_d]; undefined history is 0.

    The first ``tau_d`` entries have no source sample and are filled with 0;
    callers must keep them inside the washout so they never reach a fit.
    """
    s = np.asarray(s, dtype=float).ravel()
    tau_d = int(tau_d)
    if tau_d < 0:
        raise ValueError(f"delay must be >= 0, got {tau_d}")
    if tau_d > s.size:
        raise ValueError(f"delay {tau_d} exceeds sequence length {s.size}")
    y = np.zeros_like(s)
    if tau_d == 0:
        y[:] = s
    else:
        y[tau_d:] = s[:-tau_d]
    return y


def narma_series(u, order: int, constants=NARMA_CONSTANTS, guard: float = NARMA_GUARD) -> np.ndarray:
    """Order-n autoregressive series driven by u in [0, 0.5].

    The first ``order`` outputs are initialized to 0 (their recurrence would
    reach before the start of the input). Raises DivergenceError as soon as
    |y| exceeds ``guard``.
    """
    u = np.asarray(u, dtype=float).ravel()
    n = int(order)
    if n < 1:
        raise ValueError(f"order must be >= 1, got {n}")
    if u.size and (u.min() < 0.0 or u.max() > NARMA_INPUT_MAX):
        raise ValueError(f"raw inputs must lie in [0, {NARMA_INPUT_MAX}]")
    a, b, c, d = constants
    y = np.zeros(u.size)
    history_sum = 0.0  # running sum of y[k-1] ... y[k-n]
    for k in range(n, u.size):
        y_k = a * y[k - 1] + b * y[k - 1] * history_sum / n + c * u[k - n] * u[k - 1] + d
        if not np.isfinite(y_k) or abs(y_k) > guard:
            raise DivergenceError(f"series diverged at step {k} (order {n}): y = {y_k!r}")
        y[k] = y_k
        history_sum += y[k] - y[k - n]
    return y


def scale_inputs(u, u_max: float = NARMA_INPUT_MAX) -> np.ndarray:
    """Min-max scale from the declared generation range [0, u_max] to [0, 1]."""
    u = np.asarray(u, dtype=float).ravel()
    if u_max <= 0:
        raise ValueError(f"u_max must be > 0, got {u_max}")
    if u.size and (u.min() < 0.0 or u.max() > u_max):
        raise ValueError(f"raw inputs must lie in [0, {u_max}]")
    return u / u_max


def split_dataset(ds: TaskDataset) -> tuple[TaskView, TaskView]:
    """(train view, val view); washout rows are dropped entirely."""
    tr, va = ds.split.train_slice, ds.split.val_slice
    train = TaskView(s=ds.s[tr], y=ds.y[tr], start=tr.start, stop=tr.stop)
    val = TaskView(s=ds.s[va], y=ds.y[va], start=va.start, stop=va.stop)
    return train, val


def dataset_to_csv(ds: TaskDataset, path) -> None:
    """Write `step, u, s, y` rows; u falls back to s when no raw stream exists."""
    u = ds.meta.get("u")
    u = np.asarray(u, dtype=float).ravel() if u is not None else ds.s
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "u", "s", "y"])
        for k in range(ds.s.size):
            writer.writerow([k, repr(float(u[k])), repr(float(ds.s[k])), repr(float(ds.y[k]))])


def dataset_from_csv(path, split: SplitSpec, meta: dict | None = None) -> TaskDataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["step", "u", "s", "y"]:
            raise ValueError(f"unexpected dataset CSV header: {header}")
        u, s, y = [], [], []
        for row in reader:
            u.append(float(row[1]))
            s.append(float(row[2]))
            y.append(float(row[3]))
    meta = dict(meta or {})
    meta["u"] = np.asarray(u)
    return TaskDataset(s=np.asarray(s), y=np.asarray(y), split=split, meta=meta)
