"""AIS parsing, vessel registry, port areas, and trip reconstruction.

Movement between consecutive AIS records is linear; a trip ends where the
vessel sits inside a port area and the transmission gap to the next record
exceeds the configured threshold.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np
import shapely

from .errors import IngestError
from .proj import Projection, haversine_m
from .temporal import TemporalValue, parse_instant, synchronize

__all__ = [
    "AisRecord",
    "VesselProfile",
    "PortArea",
    "Trip",
    "parse_ais",
    "parse_registry",
    "load_ports",
    "split_trips",
    "build_speed",
    "group_by_vessel",
    "reconstruct_trips",
]

logger = logging.getLogger(__name__)

AIS_COLUMNS = ("mmsi", "timestamp_iso8601", "lon", "lat", "sog_kn", "cog_deg")
REGISTRY_COLUMNS = ("mmsi", "name", "loa_m", "engine_hp", "gear")

DEFAULT_GAP_S = 1800

KNOT_MS = 1852.0 / 3600.0


@dataclass(frozen=True)
class AisRecord:
    mmsi: int
    t: int
    lon: float
    lat: float
    sog: float  # knots; NaN when the field was empty
    cog: float  # degrees; NaN when the field was empty


@dataclass(frozen=True)
class VesselProfile:
    mmsi: int
    name: str
    loa: float
    engine_hp: float
    gear: str


@dataclass(frozen=True)
class PortArea:
    """A named port polygon in planar (projected) coordinates."""

    name: str
    polygon: shapely.Polygon

    def covers(self, x: float, y: float) -> bool:
        return bool(shapely.covers(self.polygon, shapely.points(x, y)))


@dataclass(frozen=True)
class Trip:
    """One voyage: planar positions, speed, and (once enriched) activity.

    The three temporal attributes share a single instant set after
    synchronization; ``activity`` stays None until enrichment.
    """

    trip_id: int
    mmsi: int
    trip: TemporalValue
    speed: TemporalValue
    activity: TemporalValue | None
    length_m: float
    duration_s: int

    def with_activity(self, activity: TemporalValue) -> "Trip":
        return replace(self, activity=activity)


def _planar_length(points: TemporalValue) -> float:
    xy = points.values
    if len(xy) < 2:
        return 0.0
    seg = np.diff(xy, axis=0)
    return float(np.sum(np.sqrt(seg[:, 0] ** 2 + seg[:, 1] ** 2)))


def parse_ais(stream: Iterable[str]) -> list[AisRecord]:
    """Parse the AIS CSV; malformed rows are logged and skipped.

    More than 10% malformed rows, or none at all, aborts: that signals the
    wrong file rather than noise in a good one.
    """
    try:
        reader = csv.reader(stream)
        header = next(reader, None)
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestError(f"unreadable AIS stream: {exc}") from exc
    if header is None:
        raise IngestError("empty AIS file")
    if [h.strip().lower() for h in header] != list(AIS_COLUMNS):
        raise IngestError(f"AIS header must be {','.join(AIS_COLUMNS)}")

    records: list[AisRecord] = []
    bad = 0
    total = 0
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not col.strip() for col in row):
            continue
        total += 1
        try:
            records.append(_parse_ais_row(row))
        except (ValueError, IndexError) as exc:
            bad += 1
            logger.warning("AIS line %d: %s; row skipped", lineno, exc)
    if total == 0:
        raise IngestError("AIS file contains no data rows")
    if bad > 0.10 * total:
        raise IngestError(f"{bad}/{total} AIS rows malformed; wrong file?")
    return records


def _parse_ais_row(row: Sequence[str]) -> AisRecord:
    if len(row) != len(AIS_COLUMNS):
        raise ValueError(f"expected {len(AIS_COLUMNS)} columns, got {len(row)}")
    mmsi = int(row[0])
    t = parse_instant(row[1])
    lon = float(row[2])
    lat = float(row[3])
    if not -180.0 <= lon <= 180.0:
        raise ValueError(f"lon {lon} out of range")
    if not -90.0 <= lat <= 90.0:
        raise ValueError(f"lat {lat} out of range")
    sog = float(row[4]) if row[4].strip() else math.nan
    if sog < 0:  # NaN comparisons are False, missing stays allowed
        raise ValueError(f"negative sog {sog}")
    cog = float(row[5]) if row[5].strip() else math.nan
    return AisRecord(mmsi, t, lon, lat, sog, cog)


def parse_registry(stream: Iterable[str]) -> dict[int, VesselProfile]:
    """Parse the vessel registry CSV into an mmsi-keyed map."""
    reader = csv.reader(stream)
    header = next(reader, None)
    if header is None:
        raise IngestError("empty registry file")
    if [h.strip().lower() for h in header] != list(REGISTRY_COLUMNS):
        raise IngestError(f"registry header must be {','.join(REGISTRY_COLUMNS)}")
    out: dict[int, VesselProfile] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not col.strip() for col in row):
            continue
        try:
            mmsi = int(row[0])
            loa = float(row[2])
            hp = float(row[3])
            if not hp > 0:
                raise ValueError(f"engine_hp {hp} not positive")
            if not loa > 0:
                raise ValueError(f"loa {loa} not positive")
            out[mmsi] = VesselProfile(mmsi, row[1].strip(), loa, hp, row[4].strip())
        except (ValueError, IndexError) as exc:
            logger.warning("registry line %d: %s; row skipped", lineno, exc)
    return out


def load_ports(path: str, projection: Projection) -> list[PortArea]:
    """Load port polygons from a GeoJSON FeatureCollection, projected planar."""
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    if doc.get("type") != "FeatureCollection":
        raise IngestError("ports file must be a GeoJSON FeatureCollection")
    ports: list[PortArea] = []
    for feature in doc.get("features", []):
        geom = feature.get("geometry") or {}
        name = str((feature.get("properties") or {}).get("name", f"port-{len(ports)}"))
        rings: list[list[list[float]]]
        if geom.get("type") == "Polygon":
            polys = [geom["coordinates"]]
        elif geom.get("type") == "MultiPolygon":
            polys = geom["coordinates"]
        else:
            logger.warning("port %s: unsupported geometry %r; skipped", name, geom.get("type"))
            continue
        for rings in polys:
            try:
                shell = np.asarray(rings[0], dtype=np.float64)
                ex, ey = projection.forward(shell[:, 0], shell[:, 1])
                holes = []
                for ring in rings[1:]:
                    arr = np.asarray(ring, dtype=np.float64)
                    hx, hy = projection.forward(arr[:, 0], arr[:, 1])
                    holes.append(np.column_stack([hx, hy]))
                poly = shapely.Polygon(np.column_stack([ex, ey]), holes)
            except (IndexError, ValueError, TypeError) as exc:
                raise IngestError(f"port polygon {name!r} is malformed: {exc}") from exc
            if not poly.is_valid:
                raise IngestError(f"port polygon {name!r} is not simple/closed")
            ports.append(PortArea(name, poly))
    return ports


def in_any_port(ports: Sequence[PortArea], xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Boundary-inclusive membership of planar points in any port polygon."""
    pts = shapely.points(xs, ys)
    inside = np.zeros(len(np.atleast_1d(pts)), dtype=bool)
    for port in ports:
        inside |= shapely.covers(port.polygon, pts)
    return inside


def group_by_vessel(records: Iterable[AisRecord]) -> dict[int, list[AisRecord]]:
    """Group by mmsi, sort by instant, drop duplicate (mmsi, t) keeping the first."""
    grouped: dict[int, list[AisRecord]] = {}
    for rec in records:
        grouped.setdefault(rec.mmsi, []).append(rec)
    out: dict[int, list[AisRecord]] = {}
    for mmsi, recs in grouped.items():
        recs.sort(key=lambda r: r.t)
        seen: set[int] = set()
        kept = []
        for r in recs:
            if r.t in seen:
                continue
            seen.add(r.t)
            kept.append(r)
        out[mmsi] = kept
    return out


def build_speed(trip_points: TemporalValue, sog_samples: Sequence[float]) -> TemporalValue:
    """Speed series in knots from SOG, with a positional fallback.

    ``trip_points`` carries lon/lat degrees at the record instants. Where
    SOG is missing the speed comes from the great-circle distance between
    neighbouring records divided by their time gap (forward difference,
    backward for the last record).
    """
    ts = trip_points.instants
    lonlat = trip_points.values
    sog = np.asarray(sog_samples, dtype=np.float64)
    if len(sog) != len(ts):
        raise ValueError("sog_samples must align with trip_points instants")
    n = len(ts)
    if n == 1:
        fallback = np.zeros(1)
    else:
        d = haversine_m(lonlat[:-1, 0], lonlat[:-1, 1], lonlat[1:, 0], lonlat[1:, 1])
        dt = np.diff(ts).astype(np.float64)
        seg_kn = np.atleast_1d(d) / dt / KNOT_MS
        fallback = np.concatenate([seg_kn, seg_kn[-1:]])
    speed = np.where(np.isfinite(sog), sog, fallback)
    return TemporalValue(ts, speed, "linear")


def split_trips(records: Sequence[AisRecord], ports: Sequence[PortArea],
                gap_s: int = DEFAULT_GAP_S, projection: Projection | None = None,
                first_trip_id: int = 1) -> list[Trip]:
    """Split one vessel's cleaned records into trips.

    A boundary falls between records i and i+1 when record i sits inside a
    port area and the gap to i+1 exceeds gap_s. Trips shorter than two
    records are dropped. Positions are projected to planar metres; speed
    comes from build_speed.
    """
    if projection is None:
        raise ValueError("a projection is required to build planar trips")
    if not records:
        return []
    ts = np.array([r.t for r in records], dtype=np.int64)
    if np.any(np.diff(ts) <= 0):
        raise ValueError("records must be sorted by instant with duplicates removed")
    mmsi = records[0].mmsi
    lons = np.array([r.lon for r in records])
    lats = np.array([r.lat for r in records])
    sogs = np.array([r.sog for r in records])
    xs, ys = projection.forward(lons, lats)
    inside = in_any_port(ports, xs, ys) if ports else np.zeros(len(records), dtype=bool)

    gaps = np.diff(ts) > gap_s
    cut_after = np.flatnonzero(inside[:-1] & gaps)
    starts = np.concatenate([[0], cut_after + 1])
    ends = np.concatenate([cut_after + 1, [len(records)]])

    trips: list[Trip] = []
    next_id = first_trip_id
    for a, b in zip(starts, ends):
        if b - a < 2:
            continue
        seg_t = ts[a:b]
        points = TemporalValue(seg_t, np.column_stack([xs[a:b], ys[a:b]]), "linear")
        lonlat = TemporalValue(seg_t, np.column_stack([lons[a:b], lats[a:b]]), "linear")
        speed = build_speed(lonlat, sogs[a:b])
        trips.append(Trip(
            trip_id=next_id,
            mmsi=mmsi,
            trip=points,
            speed=speed,
            activity=None,
            length_m=_planar_length(points),
            duration_s=int(seg_t[-1] - seg_t[0]),
        ))
        next_id += 1
    return trips


def reconstruct_trips(records: Iterable[AisRecord], ports: Sequence[PortArea],
                      projection: Projection, gap_s: int = DEFAULT_GAP_S,
                      period: int = 60, origin: int | None = None,
                      ) -> tuple[list[Trip], dict[str, int]]:
    """Full reconstruction: group, split, and synchronize onto the lattice.

    Returns the synchronized trips plus counters (vessels, records, trips).
    The sampling origin defaults to midnight UTC of the earliest record's
    day. Trips left with fewer than two lattice instants are dropped.
    """
    by_vessel = group_by_vessel(records)
    n_records = sum(len(v) for v in by_vessel.values())
    if origin is None:
        if not by_vessel:
            return [], {"vessels": 0, "records": 0, "trips": 0}
        earliest = min(v[0].t for v in by_vessel.values())
        origin = earliest - earliest % 86400
    out: list[Trip] = []
    for mmsi in sorted(by_vessel):
        raw = split_trips(by_vessel[mmsi], ports, gap_s, projection)
        kept_id = 1
        for trip in raw:
            pts, spd = synchronize([trip.trip, trip.speed], period, origin)
            if len(pts) < 2:
                continue
            out.append(Trip(
                trip_id=kept_id,
                mmsi=mmsi,
                trip=pts,
                speed=spd,
                activity=None,
                length_m=_planar_length(pts),
                duration_s=int(pts.instants[-1] - pts.instants[0]),
            ))
            kept_id += 1
    stats = {"vessels": len(by_vessel), "records": n_records, "trips": len(out)}
    return out, stats
