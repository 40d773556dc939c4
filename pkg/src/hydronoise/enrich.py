"""Semantic enrichment: activity classification and vessel source levels.

Activity is a per-segment step attribute: in-port (0), entering (1),
exiting (2), fishing (3), navigation (4). Fishing vs navigation is decided
by the segment's average speed against a configurable band; port entry and
exit are read off the segment endpoints alone.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .acoustics import DEFAULT_FREQUENCIES, FrequencyParams
from .ingest import PortArea, Trip, VesselProfile, in_any_port
from .temporal import TemporalValue

__all__ = [
    "IN_PORT",
    "ENTERING",
    "EXITING",
    "FISHING",
    "NAVIGATION",
    "ACTIVITY_CODES",
    "ActivityThresholds",
    "SourceProfile",
    "EnrichedTrip",
    "classify_activity",
    "compute_sl0",
    "attach_aspects",
    "enrich_trips",
]

logger = logging.getLogger(__name__)

IN_PORT = 0
ENTERING = 1
EXITING = 2
FISHING = 3
NAVIGATION = 4
ACTIVITY_CODES = (IN_PORT, ENTERING, EXITING, FISHING, NAVIGATION)

REFERENCE_ENGINE_HP = 835.0
# 3 dB per doubling of engine power
POWER_DOUBLING_COEFF = 3.0 / math.log10(2.0)


@dataclass(frozen=True)
class ActivityThresholds:
    """Fishing-speed band in knots, both ends inclusive."""

    fish_min_kn: float = 1.0
    fish_max_kn: float = 6.0

    def __post_init__(self) -> None:
        if not 0 <= self.fish_min_kn <= self.fish_max_kn:
            raise ValueError("need 0 <= fish_min_kn <= fish_max_kn")


@dataclass(frozen=True)
class SourceProfile:
    """Per-frequency base source levels of one vessel."""

    mmsi: int
    sl0_db: Mapping[int, float]

    def __post_init__(self) -> None:
        for f, v in self.sl0_db.items():
            if not math.isfinite(v):
                raise ValueError(f"sl0_db[{f}] must be finite")


@dataclass(frozen=True)
class EnrichedTrip:
    """A trip with activity attached, plus its vessel and source profiles."""

    trip: Trip
    profile: VesselProfile
    source: SourceProfile


def classify_activity(trip: Trip, ports: Sequence[PortArea],
                      thresholds: ActivityThresholds = ActivityThresholds()) -> TemporalValue:
    """Step activity series on the trip's instants.

    Each segment between consecutive instants gets one code from its
    endpoint port membership, falling back to the speed band; the final
    instant repeats the last segment's code so the step series covers the
    whole span.
    """
    pts = trip.trip
    speeds = trip.speed
    if not np.array_equal(pts.instants, speeds.instants):
        raise ValueError("trip and speed must be synchronized before classification")
    n = len(pts)
    xy = pts.values
    inside = (in_any_port(ports, xy[:, 0], xy[:, 1]) if ports
              else np.zeros(n, dtype=bool))
    v = speeds.values
    if n == 1:
        code = IN_PORT if inside[0] else _speed_code(float(v[0]), thresholds)
        return TemporalValue(pts.instants, np.array([code], dtype=np.int64), "step")

    in0, in1 = inside[:-1], inside[1:]
    avg = (v[:-1] + v[1:]) / 2.0
    seg = np.where(
        in0 & in1, IN_PORT,
        np.where(
            in0 & ~in1, EXITING,
            np.where(
                ~in0 & in1, ENTERING,
                np.where((avg >= thresholds.fish_min_kn) & (avg <= thresholds.fish_max_kn),
                         FISHING, NAVIGATION),
            ),
        ),
    ).astype(np.int64)
    codes = np.concatenate([seg, seg[-1:]])
    return TemporalValue(pts.instants, codes, "step")


def _speed_code(speed: float, thresholds: ActivityThresholds) -> int:
    if thresholds.fish_min_kn <= speed <= thresholds.fish_max_kn:
        return FISHING
    return NAVIGATION


def compute_sl0(engine_hp: float, frequency: int,
                params: Mapping[int, FrequencyParams] = DEFAULT_FREQUENCIES) -> float:
    """Base source level: the frequency's anchor plus 3 dB per power doubling.

    The anchor is the reference vessel's level (835 Hp) at that frequency.
    """
    if not engine_hp > 0:
        raise ValueError("engine_hp must be positive")
    if frequency not in params:
        raise ValueError(f"unknown frequency {frequency}; configured: {sorted(params)}")
    anchor = params[frequency].anchor_sl0
    return anchor + POWER_DOUBLING_COEFF * math.log10(engine_hp / REFERENCE_ENGINE_HP)


def attach_aspects(trip: Trip, registry: VesselProfile,
                   frequencies: Mapping[int, FrequencyParams] = DEFAULT_FREQUENCIES,
                   ports: Sequence[PortArea] = (),
                   thresholds: ActivityThresholds = ActivityThresholds()) -> EnrichedTrip:
    """Attach activity, per-frequency SL0, and long-term aspects to a trip."""
    activity = classify_activity(trip, ports, thresholds)
    enriched = trip.with_activity(activity)
    source = SourceProfile(
        mmsi=registry.mmsi,
        sl0_db={f: compute_sl0(registry.engine_hp, f, frequencies) for f in frequencies},
    )
    return EnrichedTrip(trip=enriched, profile=registry, source=source)


def enrich_trips(trips: Iterable[Trip], registry: Mapping[int, VesselProfile],
                 frequencies: Mapping[int, FrequencyParams] = DEFAULT_FREQUENCIES,
                 ports: Sequence[PortArea] = (),
                 thresholds: ActivityThresholds = ActivityThresholds()) -> list[EnrichedTrip]:
    """Enrich every trip with a registry entry; skip and warn on the rest."""
    out: list[EnrichedTrip] = []
    missing: set[int] = set()
    for trip in trips:
        profile = registry.get(trip.mmsi)
        if profile is None:
            if trip.mmsi not in missing:
                missing.add(trip.mmsi)
                logger.warning("mmsi %d has no registry entry; its trips are skipped", trip.mmsi)
            continue
        out.append(attach_aspects(trip, profile, frequencies, ports, thresholds))
    return out
