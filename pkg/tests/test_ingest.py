import io
import json
import math

import numpy as np
import pytest
from shapely.geometry import box

from hydronoise.errors import IngestError
from hydronoise.ingest import (AisRecord, PortArea, build_speed,
                               group_by_vessel, in_any_port, load_ports,
                               parse_ais, parse_registry, reconstruct_trips,
                               split_trips)
from hydronoise.proj import haversine_m, projection_for_epsg
from hydronoise.temporal import TemporalValue, parse_instant

PROJ = projection_for_epsg(32633)
T0 = parse_instant("2020-06-01T06:00:00Z")
PORT_LON, PORT_LAT = 15.0, 54.0
PORT_X, PORT_Y = PROJ.forward(PORT_LON, PORT_LAT)
PORT = PortArea("Harbour", box(PORT_X - 400, PORT_Y - 400, PORT_X + 400, PORT_Y + 400))


def rec(t, lon=PORT_LON, lat=PORT_LAT, sog=5.0, mmsi=219000001):
    return AisRecord(mmsi, t, lon, lat, sog, 90.0)


AIS_HEADER = "mmsi,timestamp_iso8601,lon,lat,sog_kn,cog_deg\n"


def ais_stream(*rows):
    return io.StringIO(AIS_HEADER + "".join(r + "\n" for r in rows))


class TestParseAis:
    def test_happy_path(self):
        out = parse_ais(ais_stream(
            "219000001,2020-06-01T06:00:00Z,15.0,54.0,5.5,90.0",
            "219000001,2020-06-01T06:01:00Z,15.01,54.0,,",
        ))
        assert len(out) == 2
        assert out[0].mmsi == 219000001 and out[0].t == T0
        assert out[0].sog == 5.5
        assert math.isnan(out[1].sog) and math.isnan(out[1].cog)

    def test_header_checked(self):
        with pytest.raises(IngestError):
            parse_ais(io.StringIO("a,b,c\n1,2,3\n"))

    def test_empty_file(self):
        with pytest.raises(IngestError):
            parse_ais(io.StringIO(""))

    def test_header_only(self):
        with pytest.raises(IngestError):
            parse_ais(io.StringIO(AIS_HEADER))

    def test_blank_rows_skipped(self):
        out = parse_ais(ais_stream(
            "219000001,2020-06-01T06:00:00Z,15.0,54.0,5.5,90.0",
            "",
            "219000001,2020-06-01T06:01:00Z,15.0,54.0,5.5,90.0",
        ))
        assert len(out) == 2

    def test_bad_rows_skipped_with_warning(self, caplog):
        rows = ["219000001,2020-06-01T06:%02d:00Z,15.0,54.0,5.5,90.0" % m
                for m in range(10)]
        rows[4] = "219000001,2020-06-01T06:20:00Z,15.0,95.0,5.5,90.0"  # bad lat
        with caplog.at_level("WARNING"):
            out = parse_ais(ais_stream(*rows))
        assert len(out) == 9
        assert any("row skipped" in m for m in caplog.messages)

    def test_negative_sog_rejected(self):
        rows = ["219000001,2020-06-01T06:%02d:00Z,15.0,54.0,5.5,90.0" % m
                for m in range(10)]
        rows[0] = "219000001,2020-06-01T06:30:00Z,15.0,54.0,-1.0,90.0"
        assert len(parse_ais(ais_stream(*rows))) == 9

    def test_too_many_bad_rows_aborts(self):
        rows = ["219000001,2020-06-01T06:00:00Z,15.0,54.0,5.5,90.0",
                "broken", "also broken"]
        with pytest.raises(IngestError):
            parse_ais(ais_stream(*rows))


class TestParseRegistry:
    def test_happy_path(self):
        out = parse_registry(io.StringIO(
            "mmsi,name,loa_m,engine_hp,gear\n"
            "219000001,NORDKAP,27.5,1200,trawl\n"))
        v = out[219000001]
        assert (v.name, v.loa, v.engine_hp, v.gear) == ("NORDKAP", 27.5, 1200.0, "trawl")

    def test_bad_rows_skipped(self, caplog):
        with caplog.at_level("WARNING"):
            out = parse_registry(io.StringIO(
                "mmsi,name,loa_m,engine_hp,gear\n"
                "219000001,A,20.0,800,trawl\n"
                "219000002,B,20.0,0,trawl\n"
                "219000003,C,-5.0,800,trawl\n"))
        assert list(out) == [219000001]
        assert len([m for m in caplog.messages if "skipped" in m]) == 2

    def test_header_checked(self):
        with pytest.raises(IngestError):
            parse_registry(io.StringIO("who,what\n1,2\n"))


class TestPorts:
    def test_load_and_covers(self, tmp_path):
        d = 0.004  # ~260 m in longitude at 54 N
        ring = [[PORT_LON - d, PORT_LAT - d], [PORT_LON + d, PORT_LAT - d],
                [PORT_LON + d, PORT_LAT + d], [PORT_LON - d, PORT_LAT + d],
                [PORT_LON - d, PORT_LAT - d]]
        doc = {"type": "FeatureCollection", "features": [
            {"type": "Feature", "properties": {"name": "Main"},
             "geometry": {"type": "Polygon", "coordinates": [ring]}}]}
        p = tmp_path / "ports.geojson"
        p.write_text(json.dumps(doc))
        ports = load_ports(str(p), PROJ)
        assert [pt.name for pt in ports] == ["Main"]
        assert ports[0].covers(PORT_X, PORT_Y)
        far_x, far_y = PROJ.forward(PORT_LON + 1.0, PORT_LAT)
        assert not ports[0].covers(far_x, far_y)

    def test_boundary_inclusive(self):
        edge = in_any_port([PORT], np.array([PORT_X + 400.0]), np.array([PORT_Y]))
        assert bool(edge[0])

    def test_invalid_geojson(self, tmp_path):
        p = tmp_path / "bad.geojson"
        p.write_text(json.dumps({"type": "FeatureCollection", "features": [
            {"type": "Feature", "properties": {"name": "X"},
             "geometry": {"type": "Polygon", "coordinates": []}}]}))
        with pytest.raises(IngestError):
            load_ports(str(p), PROJ)


class TestGroupByVessel:
    def test_sorts_and_dedupes(self):
        records = [rec(T0 + 120), rec(T0), rec(T0, sog=9.9), rec(T0 + 60, mmsi=7)]
        out = group_by_vessel(records)
        assert sorted(out) == [7, 219000001]
        ts = [r.t for r in out[219000001]]
        assert ts == [T0, T0 + 120]
        assert out[219000001][0].sog == 5.0  # first duplicate wins


class TestBuildSpeed:
    def test_sog_preferred(self):
        pts = TemporalValue(np.array([0, 60], dtype=np.int64),
                            np.array([[0.0, 0.0], [0.01, 0.0]]), "linear")
        out = build_speed(pts, [7.5, 8.5])
        assert out.values.tolist() == [7.5, 8.5]

    def test_derived_fallback(self):
        pts = TemporalValue(np.array([0, 60], dtype=np.int64),
                            np.array([[0.0, 0.0], [0.01, 0.0]]), "linear")
        out = build_speed(pts, [float("nan"), float("nan")])
        want = haversine_m(0.0, 0.0, 0.01, 0.0) / 60.0 / (1852.0 / 3600.0)
        assert out.values.tolist() == pytest.approx([want, want], rel=1e-12)

    def test_last_uses_backward_difference(self):
        pts = TemporalValue(np.array([0, 60, 120], dtype=np.int64),
                            np.array([[0.0, 0.0], [0.01, 0.0], [0.03, 0.0]]),
                            "linear")
        out = build_speed(pts, [float("nan")] * 3)
        assert out.values[2] == pytest.approx(out.values[1], rel=1e-12)
        assert out.values[1] == pytest.approx(2 * out.values[0], rel=1e-9)

    def test_single_point(self):
        pts = TemporalValue(np.array([0], dtype=np.int64),
                            np.array([[0.0, 0.0]]), "linear")
        assert build_speed(pts, [float("nan")]).values.tolist() == [0.0]


class TestSplitTrips:
    def offshore(self, k):
        # ~0.01 deg lon per step, safely outside the 400 m port box
        return rec(T0 + 60 * k, lon=PORT_LON + 0.05 + 0.01 * k, lat=PORT_LAT)

    def test_single_trip_without_gaps(self):
        records = [self.offshore(k) for k in range(5)]
        trips = split_trips(records, [PORT], 1800, PROJ)
        assert len(trips) == 1
        assert len(trips[0].trip) == 5
        assert trips[0].length_m > 0

    def test_gap_at_sea_does_not_split(self):
        records = [self.offshore(0), self.offshore(1),
                   rec(T0 + 60 + 7200, lon=PORT_LON + 0.2),
                   rec(T0 + 120 + 7200, lon=PORT_LON + 0.21)]
        assert len(split_trips(records, [PORT], 1800, PROJ)) == 1

    def test_gap_in_port_splits(self):
        records = [self.offshore(0), rec(T0 + 120),  # arrives in port
                   rec(T0 + 120 + 2400),  # departs after a 40 min dwell
                   self.offshore(50)]
        trips = split_trips(records, [PORT], 1800, PROJ)
        assert [len(t.trip) for t in trips] == [2, 2]
        assert [t.trip_id for t in trips] == [1, 2]

    def test_gap_must_exceed_threshold(self):
        records = [self.offshore(0), rec(T0 + 120), rec(T0 + 120 + 1800),
                   self.offshore(40)]
        assert len(split_trips(records, [PORT], 1800, PROJ)) == 1

    def test_short_segments_dropped(self):
        records = [rec(T0), rec(T0 + 2400), self.offshore(41), self.offshore(42)]
        trips = split_trips(records, [PORT], 1800, PROJ)
        assert len(trips) == 1 and len(trips[0].trip) == 3

    def test_unsorted_rejected(self):
        with pytest.raises(ValueError):
            split_trips([self.offshore(1), self.offshore(0)], [PORT], 1800, PROJ)

    def test_projection_required(self):
        with pytest.raises(ValueError):
            split_trips([self.offshore(0), self.offshore(1)], [PORT], 1800, None)

    def test_planar_positions_match_projection(self):
        records = [self.offshore(0), self.offshore(1)]
        trip = split_trips(records, [], 1800, PROJ)[0]
        ex, ey = PROJ.forward(records[0].lon, records[0].lat)
        assert trip.trip.values[0].tolist() == pytest.approx([ex, ey], abs=1e-9)


class TestReconstruct:
    def test_lattice_alignment_and_counts(self):
        records = []
        for k in range(6):
            records.append(rec(T0 + 37 + 119 * k, lon=PORT_LON + 0.05 + 0.005 * k))
        records.append(rec(T0 + 37, mmsi=7, lon=PORT_LON + 0.1))
        records.append(rec(T0 + 300, mmsi=7, lon=PORT_LON + 0.12))
        trips, stats = reconstruct_trips(records, [], PROJ)
        assert stats == {"vessels": 2, "records": 8, "trips": 2}
        for t in trips:
            assert np.all(t.trip.instants % 60 == 0)
            assert t.trip.instants.tolist() == t.speed.instants.tolist()

    def test_short_lattice_trips_dropped(self):
        records = [rec(T0 + 31, lon=PORT_LON + 0.05),
                   rec(T0 + 89, lon=PORT_LON + 0.051)]  # spans one tick only
        trips, stats = reconstruct_trips(records, [], PROJ)
        assert trips == [] and stats["trips"] == 0

    def test_custom_origin_and_period(self):
        records = [rec(T0 + 13 + 100 * k, lon=PORT_LON + 0.05 + 0.003 * k)
                   for k in range(8)]
        trips, _ = reconstruct_trips(records, [], PROJ, period=90, origin=T0)
        assert len(trips) == 1
        assert np.all((trips[0].trip.instants - T0) % 90 == 0)

    def test_trip_ids_restart_per_vessel(self):
        records = []
        for k in range(3):
            records.append(rec(T0 + 60 * k, lon=PORT_LON + 0.05 + 0.01 * k))
        records.append(rec(T0 + 1000))
        records.append(rec(T0 + 1000 + 2000))
        for k in range(3):
            records.append(rec(T0 + 1000 + 2000 + 60 * (k + 1),
                               lon=PORT_LON + 0.05 + 0.01 * k))
        for k in range(3):
            records.append(rec(T0 + 60 * k, mmsi=7, lon=PORT_LON + 0.3 + 0.01 * k))
        trips, _ = reconstruct_trips(records, [PORT], PROJ)
        ids = {(t.mmsi, t.trip_id) for t in trips}
        assert ids == {(219000001, 1), (219000001, 2), (7, 1)}
