"""Time-varying values with interpolation semantics.

A :class:`TemporalValue` pairs a strictly increasing sequence of instants
(integer epoch seconds, UTC) with one payload per instant and an
interpolation mode:

* ``linear``: float payloads, scalar or 2-d points; values between samples
  are affine combinations of the bracketing samples.
* ``step``: integer payloads; the value between samples is the most recent
  sample, and there is no value before the first sample.

Outside the span [first, last] the value is absent (``None``). Operations
never extrapolate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "TemporalValue",
    "synchronize",
    "parse_instant",
    "format_instant",
]

_EPOCH_FMT = "%Y-%m-%dT%H:%M:%SZ"


def parse_instant(text: str) -> int:
    """Parse an ISO 8601 UTC timestamp to integer epoch seconds.

    Accepts a trailing ``Z`` or an explicit offset. Sub-second digits are
    rejected: the pipeline works on whole seconds.
    """
    from datetime import datetime, timezone

    raw = text.strip()
    # datetime.fromisoformat grows 'Z' support only in 3.11
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    dt = datetime.fromisoformat(raw)
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    ts = dt.timestamp()
    if ts != int(ts):
        raise ValueError(f"sub-second timestamp not supported: {text!r}")
    return int(ts)


def format_instant(t: int) -> str:
    """Format integer epoch seconds as an ISO 8601 UTC timestamp."""
    from datetime import datetime, timezone

    return datetime.fromtimestamp(int(t), tz=timezone.utc).strftime(_EPOCH_FMT)


@dataclass(frozen=True)
class TemporalValue:
    """An interpolated time series over integer epoch-second instants.

    ``values`` is float64 with shape (n,) or (n, 2) for ``linear`` mode and
    int64 with shape (n,) for ``step`` mode. Instants must be strictly
    increasing. An empty series (n == 0) is a legal result of sampling and
    synchronization; it has no span and yields no values.
    """

    instants: np.ndarray
    values: np.ndarray
    interpolation: str = "linear"

    def __post_init__(self) -> None:
        inst = np.asarray(self.instants, dtype=np.int64)
        if self.interpolation == "linear":
            vals = np.asarray(self.values, dtype=np.float64)
            if vals.ndim not in (1, 2) or (vals.ndim == 2 and vals.shape[1] != 2):
                raise ValueError("linear payload must have shape (n,) or (n, 2)")
        elif self.interpolation == "step":
            vals = np.asarray(self.values)
            if not np.issubdtype(vals.dtype, np.integer):
                raise ValueError("step payload must be integer")
            vals = vals.astype(np.int64)
            if vals.ndim != 1:
                raise ValueError("step payload must have shape (n,)")
        else:
            raise ValueError(f"unknown interpolation {self.interpolation!r}")
        if inst.ndim != 1 or len(inst) != len(vals):
            raise ValueError("instants and values must have matching length")
        if len(inst) > 1 and not np.all(np.diff(inst) > 0):
            raise ValueError("instants must be strictly increasing")
        inst.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "instants", inst)
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.instants)

    @property
    def is_empty(self) -> bool:
        return len(self.instants) == 0

    @property
    def span(self) -> tuple[int, int] | None:
        """(first, last) instant, or None when empty."""
        if self.is_empty:
            return None
        return int(self.instants[0]), int(self.instants[-1])

    def value_at(self, t: int):
        """Value at instant ``t``, or None outside the span.

        Linear mode interpolates between the bracketing samples; step mode
        returns the most recent sample at or before ``t``.
        """
        if self.is_empty:
            return None
        inst = self.instants
        if t < inst[0] or t > inst[-1]:
            return None
        i = int(np.searchsorted(inst, t, side="right")) - 1
        if self.interpolation == "step":
            return int(self.values[i])
        if inst[i] == t:
            out = self.values[i]
        else:
            # affine blend of the bracketing samples
            frac = (t - inst[i]) / (inst[i + 1] - inst[i])
            out = self.values[i] + frac * (self.values[i + 1] - self.values[i])
        if self.values.ndim == 2:
            return np.asarray(out, dtype=np.float64)
        return float(out)

    def values_at(self, ts: np.ndarray) -> np.ndarray:
        """Vectorized :meth:`value_at` for instants known to lie in the span."""
        ts = np.asarray(ts, dtype=np.int64)
        if self.is_empty:
            raise ValueError("empty temporal value")
        inst = self.instants
        if ts.size and (ts.min() < inst[0] or ts.max() > inst[-1]):
            raise ValueError("instant outside span")
        idx = np.searchsorted(inst, ts, side="right") - 1
        if self.interpolation == "step":
            return self.values[idx]
        nxt = np.minimum(idx + 1, len(inst) - 1)
        denom = np.maximum(inst[nxt] - inst[idx], 1)
        frac = (ts - inst[idx]) / denom
        if self.values.ndim == 2:
            frac = frac[:, None]
        return self.values[idx] + frac * (self.values[nxt] - self.values[idx])

    def tsample(self, period: int, origin: int) -> "TemporalValue":
        """Resample onto the lattice {origin + k*period, k >= 0}.

        Only lattice instants inside the span are emitted; the result is
        empty when no lattice instant falls within the span.
        """
        if period <= 0:
            raise ValueError("period must be positive")
        if self.is_empty:
            return TemporalValue(np.empty(0, np.int64), self._empty_payload(), self.interpolation)
        first, last = self.span
        k0 = -(-(first - origin) // period)  # ceil division
        k0 = max(k0, 0)
        k1 = (last - origin) // period
        if k1 < k0:
            return TemporalValue(np.empty(0, np.int64), self._empty_payload(), self.interpolation)
        ts = origin + period * np.arange(k0, k1 + 1, dtype=np.int64)
        vals = self.values_at(ts)
        return TemporalValue(ts, vals, self.interpolation)

    def slice(self, start: int, end: int) -> "TemporalValue":
        """Samples with start <= instant <= end (no interpolation at the cut)."""
        mask = (self.instants >= start) & (self.instants <= end)
        return TemporalValue(self.instants[mask], self.values[mask], self.interpolation)

    def _empty_payload(self) -> np.ndarray:
        if self.interpolation == "step":
            return np.empty(0, np.int64)
        if self.values.ndim == 2:
            return np.empty((0, 2), np.float64)
        return np.empty(0, np.float64)


def synchronize(series: Sequence[TemporalValue], period: int, origin: int) -> list[TemporalValue]:
    """Resample all series onto the shared lattice instants they all cover.

    The common instant set is the lattice restricted to the intersection of
    the spans. All outputs share identical instants; they are empty when the
    intersection contains no lattice instant.
    """
    if not series:
        return []
    for tv in series:
        if tv.is_empty:
            raise ValueError("cannot synchronize an empty temporal value")
    first = max(tv.instants[0] for tv in series)
    last = min(tv.instants[-1] for tv in series)
    out = []
    for tv in series:
        clipped = tv.tsample(period, origin)
        out.append(clipped.slice(first, last) if not clipped.is_empty else clipped)
    lengths = {len(tv) for tv in out}
    if len(lengths) > 1:  # all series saw the same lattice over the same window
        raise AssertionError("synchronize produced mismatched instant sets")
    return out
