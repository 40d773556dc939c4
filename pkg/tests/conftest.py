"""Shared builders for synthetic grids and trips used across the suite."""

from __future__ import annotations

import datetime as dt
import random

import numpy as np
import pytest

from hydronoise.acoustics import DEFAULT_FREQUENCIES
from hydronoise.enrich import EnrichedTrip, SourceProfile, compute_sl0
from hydronoise.grid import Grid, GridSpec
from hydronoise.ingest import Trip, VesselProfile
from hydronoise.temporal import TemporalValue

T0 = int(dt.datetime(2020, 6, 1, 6, 0, tzinfo=dt.timezone.utc).timestamp())

ORIGIN_X = 500000.0
ORIGIN_Y = 6000000.0


def make_grid(n_cols=20, n_rows=20, cell=1000.0, depth=40.0, ambient=65.0,
              months=(6,), frequencies=DEFAULT_FREQUENCIES,
              origin=(ORIGIN_X, ORIGIN_Y), epsg=32633) -> Grid:
    """Uniform-depth grid with constant ambient per configured month.

    depth may be a scalar or a full (n_cells,) array; ambient a scalar or a
    mapping frequency -> scalar.
    """
    spec = GridSpec(origin_x=origin[0], origin_y=origin[1], n_cols=n_cols,
                    n_rows=n_rows, cell_size=cell, epsg=epsg)
    if np.isscalar(depth):
        depth_arr = np.full(spec.n_cells, float(depth))
    else:
        depth_arr = np.asarray(depth, dtype=float)
    g = Grid(spec, depth_arr, frequencies)
    for f in frequencies:
        amb = ambient[f] if isinstance(ambient, dict) else ambient
        for m in months:
            g.set_ambient(f, m, amb)
    return g


def make_enriched(mmsi, trip_id, xs, ys, speeds, activity, t0=T0, hp=1200.0,
                  loa=30.0, gear="trawl", frequencies=DEFAULT_FREQUENCIES,
                  period=60) -> EnrichedTrip:
    """EnrichedTrip from planar coordinates already on the sample lattice."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    n = len(xs)
    instants = t0 + period * np.arange(n, dtype=np.int64)
    pts = TemporalValue(instants, np.column_stack([xs, ys]), "linear")
    spd = TemporalValue(instants, np.asarray(speeds, dtype=float), "linear")
    act = TemporalValue(instants, np.asarray(activity, dtype=np.int64), "step")
    seg = np.hypot(np.diff(xs), np.diff(ys)).sum() if n > 1 else 0.0
    trip = Trip(trip_id=trip_id, mmsi=mmsi, trip=pts, speed=spd, activity=act,
                length_m=float(seg), duration_s=int(instants[-1] - instants[0]))
    profile = VesselProfile(mmsi=mmsi, name=f"V{mmsi}", loa=loa,
                            engine_hp=hp, gear=gear)
    source = SourceProfile(mmsi=mmsi, sl0_db={
        f: compute_sl0(hp, f, frequencies) for f in frequencies})
    return EnrichedTrip(trip=trip, profile=profile, source=source)


def random_fleet(rng: random.Random, grid: Grid, n_vessels: int, n_minutes: int,
                 t0=T0, speed_range=(0.5, 14.0), hp_range=(400.0, 2500.0)):
    """Random-walk fleet inside the grid bbox with mixed activity codes."""
    x0, y0, x1, y1 = grid.spec.bbox
    margin = grid.spec.cell_size
    trips = []
    for k in range(n_vessels):
        x = rng.uniform(x0 + margin, x1 - margin)
        y = rng.uniform(y0 + margin, y1 - margin)
        heading = rng.uniform(0, 2 * np.pi)
        xs, ys, speeds, acts = [], [], [], []
        for _ in range(n_minutes):
            v = rng.uniform(*speed_range)
            heading += rng.uniform(-0.5, 0.5)
            xs.append(x)
            ys.append(y)
            speeds.append(v)
            acts.append(rng.choice([0, 1, 2, 3, 3, 4, 4]))
            x += v * (1852.0 / 3600.0) * 60.0 * np.cos(heading)
            y += v * (1852.0 / 3600.0) * 60.0 * np.sin(heading)
            if not (x0 + margin < x < x1 - margin):
                heading = np.pi - heading
                x = min(max(x, x0 + margin), x1 - margin)
            if not (y0 + margin < y < y1 - margin):
                heading = -heading
                y = min(max(y, y0 + margin), y1 - margin)
        trips.append(make_enriched(
            mmsi=200000000 + k, trip_id=1, xs=xs, ys=ys, speeds=speeds,
            activity=acts, t0=t0, hp=rng.uniform(*hp_range)))
    return trips


@pytest.fixture
def small_grid() -> Grid:
    return make_grid()
