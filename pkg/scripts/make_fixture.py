#!/usr/bin/env python3
"""Regenerate the deterministic synthetic fixture under fixtures/synthetic/.

Everything is derived from fixed waypoints and a fixed RNG seed, so rerunning
the script reproduces the committed files byte for byte.
"""

from __future__ import annotations

import datetime as dt
import json
import math
import os
import random

from hydronoise.proj import projection_for_epsg

OUT = os.path.join(os.path.dirname(__file__), "..", "fixtures", "synthetic")

PROJ = projection_for_epsg(32633)
ORIGIN_LON, ORIGIN_LAT = 14.5, 54.0
E0, N0 = PROJ.forward(ORIGIN_LON, ORIGIN_LAT)
KNOT = 1852.0 / 3600.0

T0 = int(dt.datetime(2020, 6, 1, tzinfo=dt.timezone.utc).timestamp())


def iso(t: int) -> str:
    return dt.datetime.fromtimestamp(t, tz=dt.timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def lonlat(x: float, y: float) -> tuple[float, float]:
    return PROJ.inverse(E0 + x, N0 + y)


def walk(waypoints, t_start: int, cadence: int, rng: random.Random):
    """Sample a piecewise-linear track; yields (t, x, y, sog_kn, cog_deg).

    waypoints: [(x, y), ...] with per-leg speeds in knots attached as
    [(x, y, v_to_next), ...]; the last tuple's speed is ignored.  The final
    waypoint always gets a sample so port arrivals land exactly in the port.
    """
    legs = []
    total = 0.0
    for (x0, y0, v), (x1, y1, _) in zip(waypoints, waypoints[1:]):
        d = math.hypot(x1 - x0, y1 - y0)
        dur = d / (v * KNOT)
        legs.append((total, total + dur, x0, y0, x1, y1, v))
        total += dur

    def pos_at(rel: float):
        for (a, b, x0, y0, x1, y1, v) in legs:
            if rel <= b or (a, b, x0, y0, x1, y1, v) is legs[-1]:
                f = 0.0 if b == a else min(max((rel - a) / (b - a), 0.0), 1.0)
                cog = math.degrees(math.atan2(x1 - x0, y1 - y0)) % 360.0
                return x0 + f * (x1 - x0), y0 + f * (y1 - y0), v, cog
        raise AssertionError

    out = []
    rel = 0.0
    while rel < total:
        x, y, v, cog = pos_at(rel)
        sog = max(v + rng.uniform(-0.2, 0.2), 0.0)
        out.append((t_start + int(rel), x, y, round(sog, 1), round(cog, 1)))
        rel += cadence
    x, y, v, cog = pos_at(total)
    t_end = t_start + int(math.ceil(total))
    if t_end > out[-1][0]:
        out.append((t_end, x, y, round(max(v + rng.uniform(-0.2, 0.2), 0.0), 1),
                    round(cog, 1)))
    return out


def build_ais():
    rng = random.Random(20200601)
    rows = []

    # Vessel 1: west port -> fishing detour -> east port, 40 min dwell, return.
    v1_out = walk([(1200, 7800, 9.0), (6000, 7800, 3.2), (11000, 9500, 8.5),
                   (18800, 7800, 0.0)], T0 + 6 * 3600 + 37, 120, rng)
    depart = v1_out[-1][0] + 2400
    v1_back = walk([(18800, 7800, 10.0), (1200, 7800, 0.0)], depart, 120, rng)
    for rec in v1_out + v1_back:
        rows.append((219001001,) + rec)

    # Vessel 2: plain west-east transit, no port calls.
    for rec in walk([(800, 4000, 11.0), (19200, 4000, 0.0)],
                    T0 + 6 * 3600 + 623, 120, rng):
        rows.append((219001002,) + rec)

    # Vessel 3: enters from outside the eastern grid edge.
    for rec in walk([(21000, 11000, 13.0), (500, 11000, 0.0)],
                    T0 + 6 * 3600 + 311, 120, rng):
        rows.append((219001003,) + rec)

    # Unregistered vessel: parsed fine, dropped at enrichment.
    for rec in walk([(9000, 5500, 7.0), (10500, 5500, 0.0)],
                    T0 + 6 * 3600 + 1800, 120, rng):
        rows.append((999999999,) + rec)

    lines = ["mmsi,timestamp_iso8601,lon,lat,sog_kn,cog_deg"]
    for i, (mmsi, t, x, y, sog, cog) in enumerate(rows):
        lon, lat = lonlat(x, y)
        sog_txt = "" if (mmsi == 219001002 and i % 7 == 3) else f"{sog}"
        lines.append(f"{mmsi},{iso(t)},{lon:.8f},{lat:.8f},{sog_txt},{cog}")
    # Two malformed rows and one blank line, all skipped by the parser.
    lines.insert(40, f"219001002,{iso(T0 + 6 * 3600 + 700)},14.6,54.05,-3.0,90.0")
    lines.insert(80, "219001003,not-a-time,14.7,54.06,5.0,270.0")
    lines.insert(120, "")
    return "\n".join(lines) + "\n", len(rows)


def build_registry():
    return "\n".join([
        "mmsi,name,loa_m,engine_hp,gear",
        "219001001,NORDKAP,27.5,1200,trawl",
        "219001002,SILVER SPRAY,18.2,600,seine",
        "219001003,BALTIC TRADER,46.0,2400,cargo",
        "219001004,GHOST,12.0,0,none",
        "999999998,UNSEEN,30.0,900,cargo",
    ]) + "\n"


def rect_feature(name, x0, y0, x1, y1):
    ring = [lonlat(x0, y0), lonlat(x1, y0), lonlat(x1, y1), lonlat(x0, y1),
            lonlat(x0, y0)]
    return {"type": "Feature",
            "properties": {"name": name},
            "geometry": {"type": "Polygon",
                         "coordinates": [[[round(a, 8), round(b, 8)] for a, b in ring]]}}


def build_ports():
    return json.dumps({"type": "FeatureCollection", "features": [
        rect_feature("West Harbour", 500, 7000, 2000, 8500),
        rect_feature("East Harbour", 18000, 7000, 19500, 8500),
    ]}, indent=1) + "\n"


def depth_at(x: float, y: float) -> float:
    if x < 3500 and y > 13000:
        return -3.0  # dry corner
    u, v = x / 20000.0, y / 15000.0
    return 35.0 + 20.0 * math.sin(2.2 * math.pi * u) * math.cos(1.7 * math.pi * v) + 10.0 * v


def build_bathymetry():
    lines = ["lon,lat,depth_m"]
    y = -300.0
    while y <= 15300.0:
        x = -300.0
        while x <= 20300.0:
            lon, lat = lonlat(x, y)
            lines.append(f"{lon:.8f},{lat:.8f},{depth_at(x, y):.2f}")
            x += 250.0
        y += 250.0
    return "\n".join(lines) + "\n"


def build_stations():
    positions = {"ST-A": (2500, 2500), "ST-B": (17000, 3000), "ST-C": (4000, 12500),
                 "ST-D": (16500, 12000), "ST-E": (10000, 7500)}
    base = {63: 63.0, 125: 61.0, 400: 58.0, 4000: 54.0}
    offset = {"ST-A": 1.2, "ST-B": -0.8, "ST-C": 0.4, "ST-D": -1.5, "ST-E": 2.1}
    lines = ["name,lon,lat,frequency_hz,month,l90_db"]
    for name, (x, y) in positions.items():
        lon, lat = lonlat(x, y)
        for f in (63, 125, 400, 4000):
            for month, bump in ((6, 0.0), (7, 0.3)):
                lines.append(f"{name},{lon:.8f},{lat:.8f},{f},{month},"
                             f"{base[f] + offset[name] + bump:.1f}")
    return "\n".join(lines) + "\n"


CONFIG = """\
[grid]
origin_lon = 14.5
origin_lat = 54.0
n_cols = 40
n_rows = 30
cell_m = 500
epsg = 32633

[pipeline]
gap_s = 1800
fish_min_kn = 1.0
fish_max_kn = 6.0
idw_power = 2.0
sample_period_s = 60
sample_origin = midnight

[paths]
ais = ais.csv
registry = registry.csv
ports = ports.geojson
bathymetry = bathymetry.csv
stations = stations.csv
output_dir = out
"""


def main():
    os.makedirs(OUT, exist_ok=True)
    ais, n_ais = build_ais()
    files = {
        "ais.csv": ais,
        "registry.csv": build_registry(),
        "ports.geojson": build_ports(),
        "bathymetry.csv": build_bathymetry(),
        "stations.csv": build_stations(),
        "config.ini": CONFIG,
    }
    for name, content in files.items():
        path = os.path.join(OUT, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
        print(f"{name}: {len(content.splitlines())} lines")
    print(f"valid ais rows: {n_ais}")


if __name__ == "__main__":
    main()
