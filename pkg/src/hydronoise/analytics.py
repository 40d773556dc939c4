"""Per-cell statistics and bivariate classification of a noise field.

A day is active for a cell when at least one minute of that day has a
received level above ambient (rl > 0 dB). Averages run over positive
minutes only and daily peaks over active days only, so silence never
dilutes the noise statistics; persistence is the active fraction of the
days that pass the optional weekday filter.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .enrich import EnrichedTrip
from .errors import AnalyticsError
from .engine import NoiseField

__all__ = [
    "CellStats",
    "BivariateClass",
    "cell_stats",
    "bivariate_classify",
    "area_summary",
    "filter_trips",
    "write_stats_csv",
    "AVERAGE_BANDS",
    "PEAK_BANDS",
    "PERSISTENCE_BANDS",
]

# band edges: lower bound inclusive, upper exclusive, top band closed below
AVERAGE_BANDS = (("<4dB", 4.0), ("4-8dB", 8.0), (">=8dB", None))
PEAK_BANDS = (("<10dB", 10.0), ("10-18dB", 18.0), ("18-26dB", 26.0), (">=26dB", None))
PERSISTENCE_BANDS = (("<25%", 0.25), ("25-50%", 0.5), (">=50%", None))

_EPOCH_ORD = dt.date(1970, 1, 1).toordinal()


@dataclass(frozen=True)
class CellStats:
    cell_id: int
    avg_excess_db: float | None
    active_days: int
    total_days: int
    persistence: float
    mean_daily_peak_db: float | None


@dataclass(frozen=True)
class BivariateClass:
    noise_band: str
    persistence_band: str


def _epoch_day(d: dt.date) -> int:
    return d.toordinal() - _EPOCH_ORD


def cell_stats(field: NoiseField, period: tuple[dt.date, dt.date],
               day_filter: set[int] | None = None,
               sea_cell_ids: Sequence[int] | None = None) -> list[CellStats]:
    """Aggregate a finalized field over a date range (both ends inclusive).

    ``day_filter`` holds weekday numbers (Monday=0) counted in UTC; both
    total_days and the entries considered respect it. ``sea_cell_ids``
    widens the output to cells the field never touched, reported with zero
    activity and absent averages.
    """
    if not field.finalized:
        raise AnalyticsError("field must be finalized")
    start, end = period
    if end < start:
        raise AnalyticsError("empty period")
    d0, d1 = _epoch_day(start), _epoch_day(end)
    w0_day, w1_day = field.window[0] // 86400, field.window[1] // 86400
    if d0 < w0_day or d1 > w1_day:
        raise AnalyticsError("period extends beyond the field window")
    if day_filter is not None and not day_filter <= set(range(7)):
        raise AnalyticsError("day_filter must contain weekday numbers 0..6")

    all_days = np.arange(d0, d1 + 1, dtype=np.int64)
    if day_filter is not None:
        all_days = all_days[np.isin((all_days + 3) % 7, sorted(day_filter))]
    total_days = len(all_days)
    if total_days == 0:
        raise AnalyticsError("no day of the period passes the filter")

    days = (field.minutes // 1440).astype(np.int64)
    in_period = (days >= d0) & (days <= d1)
    if day_filter is not None:
        in_period &= np.isin((days + 3) % 7, sorted(day_filter))
    positive = in_period & (field.rl_db > 0.0)

    pc = field.cell_ids[positive].astype(np.int64)
    pdy = days[positive]
    prl = field.rl_db[positive]

    # per-cell mean over positive minutes
    cells_avg, inv = np.unique(pc, return_inverse=True)
    sums = np.zeros(len(cells_avg))
    np.add.at(sums, inv, prl)
    counts = np.bincount(inv, minlength=len(cells_avg))
    avg = sums / counts

    # per-(cell, day) maxima, then per-cell counts and means
    pair = pc * np.int64(1 << 32) + (pdy - d0)
    pairs, pinv = np.unique(pair, return_inverse=True)
    peaks = np.full(len(pairs), -np.inf)
    np.maximum.at(peaks, pinv, prl)
    pair_cells = (pairs >> np.int64(32)).astype(np.int64)
    cells_act, act_inv = np.unique(pair_cells, return_inverse=True)
    active = np.bincount(act_inv, minlength=len(cells_act))
    peak_sum = np.zeros(len(cells_act))
    np.add.at(peak_sum, act_inv, peaks)
    peak_mean = peak_sum / active

    if sea_cell_ids is not None:
        universe = np.unique(np.asarray(sea_cell_ids, dtype=np.int64))
    else:
        universe = np.unique(field.cell_ids.astype(np.int64))

    avg_map = dict(zip(cells_avg.tolist(), avg.tolist()))
    act_map = dict(zip(cells_act.tolist(), active.tolist()))
    peak_map = dict(zip(cells_act.tolist(), peak_mean.tolist()))

    out = []
    for cid in universe.tolist():
        a_days = int(act_map.get(cid, 0))
        out.append(CellStats(
            cell_id=cid,
            avg_excess_db=avg_map.get(cid),
            active_days=a_days,
            total_days=total_days,
            persistence=a_days / total_days,
            mean_daily_peak_db=peak_map.get(cid),
        ))
    return out


def _band(value: float, bands) -> str:
    for label, upper in bands:
        if upper is None or value < upper:
            return label
    raise AssertionError("bands must terminate with an open top band")


def bivariate_classify(stats: CellStats, scheme: str = "average") -> BivariateClass:
    """Joint noise/persistence class of one cell.

    ``scheme`` picks the noise value: "average" uses avg_excess_db against
    the 4/8 dB bands, "peak" uses mean_daily_peak_db against the
    10/18/26 dB bands. Silent cells land in the lowest bands.
    """
    if scheme == "average":
        value, bands = stats.avg_excess_db, AVERAGE_BANDS
    elif scheme == "peak":
        value, bands = stats.mean_daily_peak_db, PEAK_BANDS
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    noise = _band(value if value is not None else -np.inf, bands)
    persistence = _band(stats.persistence, PERSISTENCE_BANDS)
    return BivariateClass(noise_band=noise, persistence_band=persistence)


def area_summary(stats: Sequence[CellStats], scheme: str = "average",
                 ) -> dict[tuple[str, str], float]:
    """Fraction of cells per bivariate class; every class is present."""
    if not stats:
        raise AnalyticsError("area_summary needs at least one cell")
    noise_bands = AVERAGE_BANDS if scheme == "average" else PEAK_BANDS
    out = {(nb[0], pb[0]): 0 for nb in noise_bands for pb in PERSISTENCE_BANDS}
    for st in stats:
        cls = bivariate_classify(st, scheme)
        out[(cls.noise_band, cls.persistence_band)] += 1
    n = len(stats)
    return {k: v / n for k, v in out.items()}


def filter_trips(trips: Iterable[EnrichedTrip], *,
                 hp_range: tuple[float, float] | None = None,
                 mmsi: set[int] | None = None,
                 loa_range: tuple[float, float] | None = None,
                 gears: set[str] | None = None,
                 activity: set[int] | None = None) -> list[EnrichedTrip]:
    """Trips passing all supplied predicates (ranges inclusive).

    The activity predicate keeps a trip when any of its activity samples
    carries one of the requested codes.
    """
    out = []
    for et in trips:
        p = et.profile
        if hp_range is not None and not hp_range[0] <= p.engine_hp <= hp_range[1]:
            continue
        if mmsi is not None and p.mmsi not in mmsi:
            continue
        if loa_range is not None and not loa_range[0] <= p.loa <= loa_range[1]:
            continue
        if gears is not None and p.gear not in gears:
            continue
        if activity is not None:
            act = et.trip.activity
            if act is None or not np.any(np.isin(act.values, sorted(activity))):
                continue
        out.append(et)
    return out


def write_stats_csv(stats: Sequence[CellStats], scheme: str, stream,
                    config_hash: str | None = None) -> None:
    """Write the stats table with band columns; floats at full precision."""
    if config_hash:
        stream.write(f"# config_hash={config_hash}\n")
    stream.write("cell_id,avg_excess_db,active_days,total_days,"
                 "persistence,mean_daily_peak_db,noise_band,persistence_band\n")
    for st in stats:
        cls = bivariate_classify(st, scheme)
        avg = "" if st.avg_excess_db is None else repr(st.avg_excess_db)
        peak = "" if st.mean_daily_peak_db is None else repr(st.mean_daily_peak_db)
        stream.write(f"{st.cell_id},{avg},{st.active_days},{st.total_days},"
                     f"{st.persistence!r},{peak},{cls.noise_band},{cls.persistence_band}\n")
