"""Trips archive: enriched trips as JSON Lines.

One trip per line; a header line carries format version and the config
hash of the run that produced it. Floats serialize via repr, so the
archive round-trips bit-exactly.
"""

from __future__ import annotations

import json
from typing import Iterable

import numpy as np

from .enrich import EnrichedTrip, SourceProfile
from .errors import IngestError
from .ingest import Trip, VesselProfile
from .temporal import TemporalValue

__all__ = ["save_trips", "load_trips"]

_FORMAT = "hydronoise-trips"
_VERSION = 1


def save_trips(path: str, trips: Iterable[EnrichedTrip],
               config_hash: str | None = None) -> int:
    """Write the archive; returns the number of trips written."""
    n = 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"format": _FORMAT, "version": _VERSION,
                             "config_hash": config_hash}) + "\n")
        for et in trips:
            t = et.trip
            if t.activity is None:
                raise IngestError(f"trip {t.mmsi}/{t.trip_id} is not enriched")
            row = {
                "mmsi": t.mmsi,
                "trip_id": t.trip_id,
                "instants": t.trip.instants.tolist(),
                "x": t.trip.values[:, 0].tolist(),
                "y": t.trip.values[:, 1].tolist(),
                "speed": t.speed.values.tolist(),
                "activity": t.activity.values.tolist(),
                "length_m": t.length_m,
                "duration_s": t.duration_s,
                "profile": {
                    "name": et.profile.name,
                    "loa_m": et.profile.loa,
                    "engine_hp": et.profile.engine_hp,
                    "gear": et.profile.gear,
                },
                "sl0_db": {str(f): v for f, v in et.source.sl0_db.items()},
            }
            fh.write(json.dumps(row) + "\n")
            n += 1
    return n


def load_trips(path: str) -> tuple[list[EnrichedTrip], str | None]:
    """Read an archive back; returns (trips, config_hash of the producer)."""
    out: list[EnrichedTrip] = []
    config_hash: str | None = None
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        if not header:
            raise IngestError(f"{path}: empty trips archive")
        try:
            meta = json.loads(header)
        except json.JSONDecodeError as exc:
            raise IngestError(f"{path}: bad archive header: {exc}") from exc
        if meta.get("format") != _FORMAT:
            raise IngestError(f"{path}: not a trips archive")
        if meta.get("version") != _VERSION:
            raise IngestError(f"{path}: unsupported archive version {meta.get('version')}")
        config_hash = meta.get("config_hash")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            try:
                row = json.loads(line)
                out.append(_decode(row))
            except (json.JSONDecodeError, KeyError, ValueError) as exc:
                raise IngestError(f"{path}:{lineno}: corrupt trip record: {exc}") from exc
    return out, config_hash


def _decode(row: dict) -> EnrichedTrip:
    instants = np.asarray(row["instants"], dtype=np.int64)
    xy = np.column_stack([np.asarray(row["x"], dtype=np.float64),
                          np.asarray(row["y"], dtype=np.float64)])
    trip = Trip(
        trip_id=int(row["trip_id"]),
        mmsi=int(row["mmsi"]),
        trip=TemporalValue(instants, xy, "linear"),
        speed=TemporalValue(instants, np.asarray(row["speed"], dtype=np.float64), "linear"),
        activity=TemporalValue(instants, np.asarray(row["activity"], dtype=np.int64), "step"),
        length_m=float(row["length_m"]),
        duration_s=int(row["duration_s"]),
    )
    prof = row["profile"]
    profile = VesselProfile(
        mmsi=int(row["mmsi"]),
        name=str(prof["name"]),
        loa=float(prof["loa_m"]),
        engine_hp=float(prof["engine_hp"]),
        gear=str(prof["gear"]),
    )
    source = SourceProfile(
        mmsi=int(row["mmsi"]),
        sl0_db={int(f): float(v) for f, v in row["sl0_db"].items()},
    )
    return EnrichedTrip(trip=trip, profile=profile, source=source)
