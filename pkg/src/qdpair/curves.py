"""Uniformly sampled correlation curves and their on-disk formats."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

KINDS = (
    "G1_raw",
    "g1_normalized",
    "g2",
    "g2_cross",
    "g2_parallel",
    "visibility",
    "intensity_decay",
)
_NONNEGATIVE = ("g2", "g2_cross", "g2_parallel")

# Round-off slack when checking range invariants of computed curves.
_RANGE_SLACK = 1e-12


def symmetric_grid(tau_max, tau_step):
    """Uniform delay grid ``-tau_max .. tau_max`` that is exactly even about zero.

    The grid is built from integer multiples of ``tau_step`` so that
    ``grid[::-1] == -grid`` holds bitwise.
    """
    if tau_step <= 0:
        raise ValueError("tau_step must be positive")
    if tau_max < 0:
        raise ValueError("tau_max must be non-negative")
    m = int(round(tau_max / tau_step))
    return np.arange(-m, m + 1) * tau_step


def positive_grid(tau_max, tau_step):
    """Uniform grid ``0 .. tau_max`` (inclusive, rounded to whole steps)."""
    if tau_step <= 0:
        raise ValueError("tau_step must be positive")
    m = int(round(tau_max / tau_step))
    return np.arange(m + 1) * tau_step


def grid_step(tau):
    """Return ``(start, step)`` of a uniform grid, raising if it is not uniform."""
    tau = np.asarray(tau, dtype=float)
    if tau.ndim != 1 or tau.size == 0:
        raise ValueError("delay grid must be a non-empty 1-D array")
    if tau.size == 1:
        return float(tau[0]), 1.0
    diffs = np.diff(tau)
    step = float(diffs.mean())
    if step <= 0 or np.max(np.abs(diffs - step)) > 1e-9 * step:
        raise ValueError("delay grid must be uniform and increasing")
    return float(tau[0]), step


def is_symmetric(tau):
    tau = np.asarray(tau, dtype=float)
    _, step = grid_step(tau)
    return np.allclose(tau, -tau[::-1], rtol=0, atol=1e-9 * step)


@dataclass(frozen=True)
class CorrelationCurve:
    """Correlation (or related) values sampled on a uniform delay grid.

    ``tau_start`` and ``tau_step`` are in seconds. ``values`` is stored as a
    read-only float array. ``meta`` carries free-form provenance.
    """

    tau_start: float
    tau_step: float
    values: np.ndarray
    kind: str
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 1 or values.size == 0:
            raise ValueError("values must be a non-empty 1-D sequence")
        if not self.tau_step > 0:
            raise ValueError("tau_step must be positive")
        if self.kind not in KINDS:
            raise ValueError(f"unknown curve kind {self.kind!r}")
        if self.kind == "g1_normalized":
            if np.any(values < -_RANGE_SLACK) or np.any(values > 1 + _RANGE_SLACK):
                raise ValueError("g1_normalized values must lie in [0, 1]")
        if self.kind in _NONNEGATIVE and np.any(values < -_RANGE_SLACK):
            raise ValueError(f"{self.kind} values must be non-negative")
        values.setflags(write=False)
        object.__setattr__(self, "tau_start", float(self.tau_start))
        object.__setattr__(self, "tau_step", float(self.tau_step))
        object.__setattr__(self, "values", values)

    @classmethod
    def from_grid(cls, tau, values, kind, **meta):
        start, step = grid_step(tau)
        return cls(start, step, values, kind, dict(meta))

    @property
    def tau(self):
        return self.tau_start + np.arange(self.values.size) * self.tau_step

    def __len__(self):
        return self.values.size

    def same_grid(self, other, rtol=1e-9):
        return (
            len(self) == len(other)
            and abs(self.tau_start - other.tau_start) <= rtol * self.tau_step
            and abs(self.tau_step - other.tau_step) <= rtol * self.tau_step
        )

    def at(self, tau):
        """Linearly interpolated value at delay ``tau`` (seconds)."""
        return float(np.interp(tau, self.tau, self.values))

    def with_values(self, values, kind=None, **meta):
        merged = dict(self.meta)
        merged.update(meta)
        return CorrelationCurve(self.tau_start, self.tau_step, values, kind or self.kind, merged)

    # -- serialization -----------------------------------------------------

    def to_csv(self, extra=None):
        """CSV text with header ``tau_s,value`` plus any ``extra`` named columns."""
        extra = extra or {}
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["tau_s", "value", *extra])
        columns = [np.asarray(c, dtype=float) for c in extra.values()]
        for i, (t, v) in enumerate(zip(self.tau, self.values)):
            writer.writerow([repr(float(t)), repr(float(v)), *(repr(float(c[i])) for c in columns)])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, kind):
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][:2] != ["tau_s", "value"]:
            raise ValueError("curve CSV must start with header 'tau_s,value'")
        data = np.array([[float(r[0]), float(r[1])] for r in rows[1:] if r], dtype=float)
        return cls.from_grid(data[:, 0], data[:, 1], kind)

    def to_dict(self):
        out = {
            "tau_start": self.tau_start,
            "tau_step": self.tau_step,
            "kind": self.kind,
            "values": [float(v) for v in self.values],
        }
        if self.meta:
            out["meta"] = self.meta
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, obj):
        try:
            return cls(obj["tau_start"], obj["tau_step"], obj["values"], obj["kind"], dict(obj.get("meta", {})))
        except KeyError as exc:
            raise ValueError(f"curve JSON is missing field {exc.args[0]!r}") from None

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))
