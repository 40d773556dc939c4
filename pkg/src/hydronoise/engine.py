"""Noise-field computation: the propagation loop and its brute-force oracle.

For every trip and every 60 s instant inside the window the engine derives
the source level from speed and activity, bounds the audible range with the
closed-form propagation radius (source cell's ambient), queries the cell
centroids inside that disc, and accumulates received intensity per
(cell, minute). Accumulation happens in linear intensity; a single
10*log10 at finalization produces the dB view.

Determinism: trips are processed in canonical (mmsi, trip_id) order and
each key's contributions are summed as a left fold over that order, which
makes the result bit-stable for any worker count. The brute-force oracle
walks every (instant, cell) pair with no spatial index and must agree with
the engine to well below 1e-9 dB.
"""

from __future__ import annotations

import logging
import math
import struct
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Sequence

import numpy as np

from .acoustics import (DEFAULT_CONTEXT, FrequencyParams, SoundContext,
                        propagation_radius, received_level, source_level)
from .enrich import FISHING, EnrichedTrip
from .errors import EngineError
from .grid import Grid
from .temporal import format_instant

__all__ = [
    "NoiseField",
    "CentroidIndex",
    "compute_noise_field",
    "brute_force_field",
    "field_store",
    "field_load",
    "field_export_csv",
    "max_delta_db",
]

logger = logging.getLogger(__name__)

FIELD_MAGIC = b"HYDNF1"
_FIELD_VERSION = 1
_HEADER = struct.Struct("<6sHI16sQQQ")

_COMPACT_THRESHOLD = 8_000_000


@dataclass
class NoiseField:
    """Sparse per-(cell, minute) accumulated noise at one frequency.

    Entries are sorted by (minute, cell). Cells and minutes never touched
    by any vessel are absent, not zero: absence means no excess noise.
    """

    frequency: int
    grid_hash: bytes
    window: tuple[int, int]
    cell_ids: np.ndarray
    minutes: np.ndarray  # epoch minutes
    intensity: np.ndarray
    rl_db: np.ndarray | None = None
    finalized: bool = False
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.cell_ids)
        if len(self.minutes) != n or len(self.intensity) != n:
            raise ValueError("column lengths differ")

    @property
    def n_entries(self) -> int:
        return len(self.cell_ids)

    def finalize(self) -> "NoiseField":
        if not self.finalized:
            if np.any(self.intensity <= 0):
                raise EngineError("non-positive intensity in noise field")
            self.rl_db = 10.0 * np.log10(self.intensity)
            self.finalized = True
        return self

    def _keys(self) -> np.ndarray:
        return (self.minutes.astype(np.uint64) << np.uint64(32)) | self.cell_ids.astype(np.uint64)

    def rl_at(self, cell_id: int, t: int) -> float | None:
        """Finalized received level at (cell, instant), None where absent."""
        if not self.finalized:
            raise EngineError("field not finalized")
        key = np.uint64(t // 60) << np.uint64(32) | np.uint64(cell_id)
        keys = self._keys()
        i = int(np.searchsorted(keys, key))
        if i < len(keys) and keys[i] == key:
            return float(self.rl_db[i])
        return None


class CentroidIndex:
    """Disc range queries over the regular centroid lattice.

    No tree is needed: candidate rows and column spans follow from floor
    arithmetic, so a query costs O(area of the disc in cells) with a thin
    conservative ring that the exact distance test then removes.
    """

    def __init__(self, grid: Grid) -> None:
        self._spec = grid.spec
        self._cx = grid.centroid_x
        self._cy = grid.centroid_y

    def query_disc(self, x: float, y: float, r: float) -> tuple[np.ndarray, np.ndarray, int]:
        """Cell ids with centroid distance strictly below r, their distances,
        and the number of candidate centroids examined."""
        s = self._spec
        cs = s.cell_size
        if r <= 0:
            return (np.empty(0, np.int64), np.empty(0, np.float64), 0)
        row_lo = max(int(math.floor((y - r - s.origin_y) / cs - 0.5)), 0)
        row_hi = min(int(math.ceil((y + r - s.origin_y) / cs - 0.5)), s.n_rows - 1)
        if row_hi < row_lo:
            return (np.empty(0, np.int64), np.empty(0, np.float64), 0)
        rows = np.arange(row_lo, row_hi + 1, dtype=np.int64)
        dy = self._cy[rows] - y
        hw = np.sqrt(np.maximum(r * r - dy * dy, 0.0))
        col_lo = np.maximum(np.floor((x - hw - s.origin_x) / cs - 0.5), 0).astype(np.int64)
        col_hi = np.minimum(np.ceil((x + hw - s.origin_x) / cs - 0.5), s.n_cols - 1).astype(np.int64)
        counts = np.maximum(col_hi - col_lo + 1, 0)
        total = int(counts.sum())
        if total == 0:
            return (np.empty(0, np.int64), np.empty(0, np.float64), 0)
        row_rep = np.repeat(rows, counts)
        starts = np.cumsum(counts) - counts
        cols = np.repeat(col_lo, counts) + (np.arange(total) - np.repeat(starts, counts))
        dx = self._cx[cols] - x
        dyr = np.repeat(dy, counts)
        d = np.sqrt(dx * dx + dyr * dyr)
        m = d < r
        ids = row_rep[m] * s.n_cols + cols[m]
        return ids, d[m], total


class _SparseAccumulator:
    """Ordered sparse (key -> intensity) sums with periodic compaction.

    Appended blocks are reduced with np.add.at, which applies additions in
    array order; per key this realizes a left fold over appearance order,
    so compaction timing never changes the floating-point result.
    """

    def __init__(self, threshold: int = _COMPACT_THRESHOLD) -> None:
        self._keys: list[np.ndarray] = []
        self._vals: list[np.ndarray] = []
        self._n = 0
        self._threshold = threshold

    def append(self, keys: np.ndarray, vals: np.ndarray) -> None:
        if len(keys) == 0:
            return
        self._keys.append(keys)
        self._vals.append(vals)
        self._n += len(keys)
        if self._n > self._threshold:
            self._compact()

    def _compact(self) -> None:
        if not self._keys:
            return
        keys = np.concatenate(self._keys)
        vals = np.concatenate(self._vals)
        uniq, inv = np.unique(keys, return_inverse=True)
        sums = np.zeros(len(uniq), dtype=np.float64)
        np.add.at(sums, inv, vals)
        self._keys = [uniq]
        self._vals = [sums]
        self._n = len(uniq)

    def result(self) -> tuple[np.ndarray, np.ndarray]:
        self._compact()
        if not self._keys:
            return np.empty(0, np.uint64), np.empty(0, np.float64)
        return self._keys[0], self._vals[0]

    def stream(self) -> tuple[np.ndarray, np.ndarray]:
        """Pending segments concatenated in append order, unreduced.

        Any compacted prefix sits before later raw elements of the same key,
        so folding the stream elsewhere reproduces this accumulator's own
        fold bit for bit. Reduced results must never be merged across
        accumulators (that reassociates the additions); streams may.
        """
        if not self._keys:
            return np.empty(0, np.uint64), np.empty(0, np.float64)
        return np.concatenate(self._keys), np.concatenate(self._vals)


def _months_for(instants: np.ndarray) -> np.ndarray:
    """Calendar month (UTC) per instant, vectorized over unique days."""
    days = instants // 86400
    uniq = np.unique(days)
    months = {int(d): datetime.fromtimestamp(int(d) * 86400, tz=timezone.utc).month
              for d in uniq}
    return np.array([months[int(d)] for d in days], dtype=np.int64)


def _window_months(window: tuple[int, int]) -> set[int]:
    w0, w1 = window
    days = np.arange(w0 // 86400, w1 // 86400 + 1, dtype=np.int64)
    return set(int(m) for m in _months_for(days * 86400))


def _canonical(trips: Iterable[EnrichedTrip]) -> list[EnrichedTrip]:
    return sorted(trips, key=lambda e: (e.trip.mmsi, e.trip.trip_id,
                                        int(e.trip.trip.instants[0])))


def _check_window(window: tuple[int, int]) -> tuple[int, int]:
    w0, w1 = int(window[0]), int(window[1])
    if w1 < w0:
        raise EngineError("window end precedes start")
    if w0 % 60 or w1 % 60:
        raise EngineError("window bounds must be 60 s aligned")
    return w0, w1


def _process_chunk(trips: Sequence[EnrichedTrip], grid: Grid, fp: FrequencyParams,
                   ctx: SoundContext, w0: int, w1: int,
                   collect_visits: bool) -> tuple[np.ndarray, np.ndarray, dict]:
    n_cells = grid.n_cells
    index = CentroidIndex(grid)
    alpha = grid.alpha[fp.f]
    acc = _SparseAccumulator()
    diag = {"instants": 0, "outside_grid": 0, "missing_depth": 0,
            "contributions": 0, "centroid_visits": 0}
    visits: list[tuple[float, int]] = []
    for enriched in trips:
        trip = enriched.trip
        if trip.activity is None:
            raise EngineError(f"trip {trip.mmsi}/{trip.trip_id} is not enriched")
        inst = trip.trip.instants
        sel = (inst >= w0) & (inst <= w1)
        ts = inst[sel]
        if len(ts) == 0:
            continue
        if np.any(ts % 60):
            raise EngineError("trip instants must sit on the 60 s lattice")
        xy = trip.trip.values[sel]
        speed = trip.speed.values[sel]
        fishing = (trip.activity.values[sel] == FISHING).astype(np.float64)
        months = _months_for(ts)
        src_cells = grid.cell_of(xy[:, 0], xy[:, 1])
        sl0 = enriched.source.sl0_db[fp.f]
        for i in range(len(ts)):
            diag["instants"] += 1
            cid = int(src_cells[i])
            if cid < 0:
                diag["outside_grid"] += 1
                continue
            depth = float(grid.depth[cid])
            if not depth > 0:  # land or missing bathymetry under the vessel
                diag["missing_depth"] += 1
                continue
            amb = grid.ambient[(fp.f, int(months[i]))]
            an_src = float(amb[cid])
            sl = source_level(sl0, float(speed[i]), float(fishing[i]), fp, ctx)
            rt = depth * fp.trans_mult
            r = propagation_radius(sl, rt, an_src)
            ids, d, examined = index.query_disc(float(xy[i, 0]), float(xy[i, 1]), r)
            diag["centroid_visits"] += examined
            if collect_visits:
                visits.append((r, examined))
            keep = grid.sea_mask[ids]
            ids = ids[keep]
            if len(ids) == 0:
                continue
            d_eval = np.maximum(d[keep], 1.0)
            rl = received_level(sl, d_eval, rt, alpha[ids], amb[ids])
            inten = 10.0 ** (rl / 10.0)
            keys = np.uint64((ts[i] - w0) // 60) * np.uint64(n_cells) + ids.astype(np.uint64)
            acc.append(keys, inten)
            diag["contributions"] += len(ids)
    if collect_visits:
        diag["per_instant_visits"] = visits
    keys, vals = acc.stream()
    return keys, vals, diag


def _merge_diag(total: dict, part: dict) -> None:
    for k, v in part.items():
        if k == "per_instant_visits":
            total.setdefault(k, []).extend(v)
        else:
            total[k] = total.get(k, 0) + v


def _assemble(frequency: int, grid: Grid, window: tuple[int, int],
              keys: np.ndarray, sums: np.ndarray, diag: dict) -> NoiseField:
    n_cells = np.uint64(grid.n_cells)
    minutes = (np.uint64(window[0] // 60) + keys // n_cells).astype(np.uint32)
    cells = (keys % n_cells).astype(np.uint32)
    fieldobj = NoiseField(
        frequency=frequency,
        grid_hash=grid.spec_hash(),
        window=window,
        cell_ids=cells,
        minutes=minutes,
        intensity=sums,
        diagnostics=diag,
    )
    return fieldobj.finalize()


def compute_noise_field(trips: Iterable[EnrichedTrip], grid: Grid, fp: FrequencyParams,
                        window: tuple[int, int], *, ctx: SoundContext = DEFAULT_CONTEXT,
                        n_workers: int = 1, collect_visits: bool = False) -> NoiseField:
    """Run the propagation loop over the window; returns a finalized field."""
    w0, w1 = _check_window(window)
    if fp.f not in grid.alpha:
        raise EngineError(f"grid carries no absorption for frequency {fp.f}")
    for m in sorted(_window_months((w0, w1))):
        if (fp.f, m) not in grid.ambient:
            raise EngineError(f"missing ambient surface for frequency {fp.f}, month {m}")
    ordered = _canonical(trips)
    diag: dict = {}
    acc = _SparseAccumulator()
    if n_workers <= 1 or len(ordered) < 2:
        keys, vals, d = _process_chunk(ordered, grid, fp, ctx, w0, w1, collect_visits)
        acc.append(keys, vals)
        _merge_diag(diag, d)
    else:
        n_chunks = min(n_workers, len(ordered))
        bounds = np.linspace(0, len(ordered), n_chunks + 1, dtype=int)
        chunks = [ordered[a:b] for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            futures = [pool.submit(_process_chunk, c, grid, fp, ctx, w0, w1, collect_visits)
                       for c in chunks]
            # append raw streams strictly in chunk order: the final fold then
            # adds every contribution in exactly the serial order
            for fut in futures:
                keys, vals, d = fut.result()
                acc.append(keys, vals)
                _merge_diag(diag, d)
    keys, sums = acc.result()
    logger.info("noise field f=%d Hz: %d entries, %d contributions, %d instants",
                fp.f, len(keys), diag.get("contributions", 0), diag.get("instants", 0))
    return _assemble(fp.f, grid, (w0, w1), keys, sums, diag)


def brute_force_field(trips: Iterable[EnrichedTrip], grid: Grid, fp: FrequencyParams,
                      window: tuple[int, int], *, ctx: SoundContext = DEFAULT_CONTEXT,
                      guard: int = 10 ** 8) -> NoiseField:
    """Reference oracle: every (instant, cell) pair, no index, dict sums."""
    w0, w1 = _check_window(window)
    ordered = _canonical(trips)
    n_minutes = (w1 - w0) // 60 + 1
    cost = grid.n_cells * n_minutes * max(len(ordered), 1)
    if cost > guard:
        raise EngineError(f"oracle guard exceeded: {cost} > {guard} evaluations")
    for m in sorted(_window_months((w0, w1))):
        if (fp.f, m) not in grid.ambient:
            raise EngineError(f"missing ambient surface for frequency {fp.f}, month {m}")
    all_ids = np.arange(grid.n_cells, dtype=np.int64)
    cx, cy = grid.centroid_arrays(all_ids)
    sea = grid.sea_mask
    alpha = grid.alpha[fp.f]
    n_cells = grid.n_cells
    acc: dict[int, float] = {}
    for enriched in ordered:
        trip = enriched.trip
        if trip.activity is None:
            raise EngineError(f"trip {trip.mmsi}/{trip.trip_id} is not enriched")
        inst = trip.trip.instants
        sel = (inst >= w0) & (inst <= w1)
        ts = inst[sel]
        if len(ts) == 0:
            continue
        if np.any(ts % 60):
            raise EngineError("trip instants must sit on the 60 s lattice")
        xy = trip.trip.values[sel]
        speed = trip.speed.values[sel]
        fishing = (trip.activity.values[sel] == FISHING).astype(np.float64)
        months = _months_for(ts)
        src_cells = grid.cell_of(xy[:, 0], xy[:, 1])
        sl0 = enriched.source.sl0_db[fp.f]
        for i in range(len(ts)):
            cid = int(src_cells[i])
            if cid < 0:
                continue
            depth = float(grid.depth[cid])
            if not depth > 0:
                continue
            amb = grid.ambient[(fp.f, int(months[i]))]
            an_src = float(amb[cid])
            sl = source_level(sl0, float(speed[i]), float(fishing[i]), fp, ctx)
            rt = depth * fp.trans_mult
            r = propagation_radius(sl, rt, an_src)
            dx = cx - float(xy[i, 0])
            dy = cy - float(xy[i, 1])
            d = np.sqrt(dx * dx + dy * dy)
            m = (d < r) & sea
            ids = all_ids[m]
            if len(ids) == 0:
                continue
            d_eval = np.maximum(d[m], 1.0)
            rl = received_level(sl, d_eval, rt, alpha[ids], amb[ids])
            inten = 10.0 ** (rl / 10.0)
            base = ((ts[i] - w0) // 60) * n_cells
            for k, v in zip((base + ids).tolist(), inten.tolist()):
                acc[k] = acc.get(k, 0.0) + v
    keys = np.array(sorted(acc), dtype=np.uint64)
    sums = np.array([acc[int(k)] for k in keys], dtype=np.float64)
    return _assemble(fp.f, grid, (w0, w1), keys, sums, {"oracle": True})


def max_delta_db(a: NoiseField, b: NoiseField) -> float:
    """Largest |rl difference| between two finalized fields.

    Returns inf when the fields disagree on which (cell, minute) entries
    exist at all.
    """
    for f in (a, b):
        if not f.finalized:
            raise EngineError("fields must be finalized before comparison")
    ka, kb = a._keys(), b._keys()
    if len(ka) != len(kb) or not np.array_equal(ka, kb):
        only_a = len(np.setdiff1d(ka, kb))
        only_b = len(np.setdiff1d(kb, ka))
        logger.warning("field key sets differ: %d only in first, %d only in second",
                       only_a, only_b)
        return math.inf
    if len(ka) == 0:
        return 0.0
    return float(np.max(np.abs(a.rl_db - b.rl_db)))


def field_store(fieldobj: NoiseField, path: str) -> None:
    """Write the binary columnar field file (magic HYDNF1, little endian)."""
    if not fieldobj.finalized:
        raise EngineError("cannot store an unfinalized field")
    n = fieldobj.n_entries
    header = _HEADER.pack(FIELD_MAGIC, _FIELD_VERSION, fieldobj.frequency,
                          fieldobj.grid_hash, fieldobj.window[0], fieldobj.window[1], n)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(fieldobj.cell_ids.astype("<u4").tobytes())
        fh.write(fieldobj.minutes.astype("<u4").tobytes())
        fh.write(fieldobj.rl_db.astype("<f8").tobytes())


def field_load(path: str, expected_grid_hash: bytes | None = None) -> NoiseField:
    """Read a field file back; verifies magic, version, and grid hash."""
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) < _HEADER.size:
            raise EngineError(f"{path}: truncated field file")
        magic, version, freq, grid_hash, w0, w1, n = _HEADER.unpack(raw)
        if magic != FIELD_MAGIC:
            raise EngineError(f"{path}: not a field file (bad magic)")
        if version != _FIELD_VERSION:
            raise EngineError(f"{path}: unsupported field version {version}")
        if expected_grid_hash is not None and grid_hash != expected_grid_hash:
            raise EngineError(f"{path}: field was computed on a different grid")
        cells = np.frombuffer(fh.read(4 * n), dtype="<u4").astype(np.uint32)
        minutes = np.frombuffer(fh.read(4 * n), dtype="<u4").astype(np.uint32)
        rl = np.frombuffer(fh.read(8 * n), dtype="<f8").astype(np.float64)
        if len(cells) != n or len(minutes) != n or len(rl) != n:
            raise EngineError(f"{path}: truncated field body")
    fieldobj = NoiseField(
        frequency=freq,
        grid_hash=grid_hash,
        window=(int(w0), int(w1)),
        cell_ids=cells,
        minutes=minutes,
        intensity=10.0 ** (rl / 10.0),
        rl_db=rl,
        finalized=True,
    )
    return fieldobj


def field_export_csv(fieldobj: NoiseField, stream) -> int:
    """Write `cell_id,timestamp_iso8601,rl_db` rows; returns the row count."""
    if not fieldobj.finalized:
        raise EngineError("cannot export an unfinalized field")
    stream.write("cell_id,timestamp_iso8601,rl_db\n")
    for cid, minute, rl in zip(fieldobj.cell_ids.tolist(),
                               fieldobj.minutes.tolist(), fieldobj.rl_db.tolist()):
        stream.write(f"{cid},{format_instant(minute * 60)},{rl!r}\n")
    return fieldobj.n_entries
