import numpy as np
import pytest

from conftest import ORIGIN_X, ORIGIN_Y, make_grid
from hydronoise.errors import GridError
from hydronoise.grid import (BathymetryCloud, BathymetryRaster, GridSpec,
                             HydrophoneStation, build_grid, idw_ambient, l90,
                             load_stations)
from hydronoise.proj import projection_for_epsg

PROJ = projection_for_epsg(32633)


class TestGridSpec:
    def test_counts_and_bbox(self):
        s = GridSpec(0.0, 0.0, 4, 3, 500.0)
        assert s.n_cells == 12
        assert s.bbox == (0.0, 0.0, 2000.0, 1500.0)

    def test_validation(self):
        with pytest.raises(ValueError):
            GridSpec(0.0, 0.0, 0, 3, 500.0)
        with pytest.raises(ValueError):
            GridSpec(0.0, 0.0, 4, 3, 0.0)

    def test_hash_stable_and_sensitive(self):
        a = GridSpec(0.0, 0.0, 4, 3, 500.0, 32633)
        assert len(a.spec_hash()) == 16
        assert a.spec_hash() == GridSpec(0.0, 0.0, 4, 3, 500.0, 32633).spec_hash()
        for other in (GridSpec(1.0, 0.0, 4, 3, 500.0, 32633),
                      GridSpec(0.0, 0.0, 5, 3, 500.0, 32633),
                      GridSpec(0.0, 0.0, 4, 3, 250.0, 32633),
                      GridSpec(0.0, 0.0, 4, 3, 500.0, 32634)):
            assert a.spec_hash() != other.spec_hash()


class TestCellLookup:
    def test_corner_and_centroid(self):
        g = make_grid(n_cols=10, n_rows=8, cell=1000.0)
        assert g.cell_of(ORIGIN_X, ORIGIN_Y) == 0
        assert g.cell_of(ORIGIN_X + 500.0, ORIGIN_Y + 500.0) == 0
        assert g.cell_of(ORIGIN_X + 1000.0, ORIGIN_Y) == 1  # edge goes right
        assert g.cell_of(ORIGIN_X + 500.0, ORIGIN_Y + 1500.0) == 10

    def test_outside(self):
        g = make_grid(n_cols=10, n_rows=8, cell=1000.0)
        assert g.cell_of(ORIGIN_X - 0.001, ORIGIN_Y) == -1
        assert g.cell_of(ORIGIN_X + 10000.0, ORIGIN_Y) == -1
        assert g.cell_of(ORIGIN_X, ORIGIN_Y + 8000.0) == -1

    def test_centroid_round_trip(self):
        g = make_grid(n_cols=7, n_rows=5, cell=250.0)
        for cid in [0, 3, 6, 17, 34]:
            assert g.cell_of(*g.centroid(cid)) == cid

    def test_centroid_arrays(self):
        g = make_grid(n_cols=7, n_rows=5, cell=250.0)
        ids = np.array([0, 8, 34])
        xs, ys = g.centroid_arrays(ids)
        for k, cid in enumerate(ids):
            assert (xs[k], ys[k]) == g.centroid(int(cid))

    def test_polygon_ring(self):
        g = make_grid(n_cols=4, n_rows=4, cell=1000.0)
        ring = g.cell_polygon_lonlat(5)
        assert len(ring) == 5 and ring[0] == ring[-1]
        ex, ey = PROJ.forward(*ring[0])
        assert (ex, ey) == pytest.approx((ORIGIN_X + 1000.0, ORIGIN_Y + 1000.0),
                                         abs=1e-6)


class TestAmbient:
    def test_scalar_broadcast_skips_land(self):
        depth = np.full(12, 30.0)
        depth[5] = -1.0
        g = make_grid(n_cols=4, n_rows=3, depth=depth, ambient=None, months=())
        g.set_ambient(63, 6, 55.0)
        surf = g.ambient[(63, 6)]
        assert surf[0] == 55.0
        assert np.isnan(surf[5])

    def test_array_shape_checked(self):
        g = make_grid(n_cols=4, n_rows=3, ambient=None, months=())
        with pytest.raises(ValueError):
            g.set_ambient(63, 6, np.zeros(7))


class TestBuildGrid:
    def make_cloud(self, spec, depth_fn):
        xs, ys, ds = [], [], []
        x0, y0, x1, y1 = spec.bbox
        x = x0 - 200.0
        while x <= x1 + 200.0:
            y = y0 - 200.0
            while y <= y1 + 200.0:
                xs.append(x)
                ys.append(y)
                ds.append(depth_fn(x, y))
                y += 200.0
            x += 200.0
        return BathymetryCloud(np.array(xs), np.array(ys), np.array(ds))

    def test_land_and_sea(self):
        spec = GridSpec(ORIGIN_X, ORIGIN_Y, 6, 4, 500.0)
        cloud = self.make_cloud(
            spec, lambda x, y: -2.0 if x < ORIGIN_X + 1000.0 else 25.0)
        g = build_grid(spec, cloud)
        assert not g.sea_mask[0] and not g.sea_mask[1]
        assert g.sea_mask[2]
        assert g.depth[g.sea_ids].min() == 25.0

    def test_coverage_required(self):
        spec = GridSpec(ORIGIN_X, ORIGIN_Y, 6, 4, 500.0)
        small = BathymetryCloud(np.array([ORIGIN_X]), np.array([ORIGIN_Y]),
                                np.array([10.0]))
        with pytest.raises(GridError):
            build_grid(spec, small)


class TestRaster:
    ASC = """\
ncols 4
nrows 3
xllcorner 14.0
yllcorner 53.0
cellsize 0.5
NODATA_value -9999
1 2 3 4
5 6 7 8
9 10 11 -9999
"""

    def make(self, tmp_path):
        p = tmp_path / "depth.asc"
        p.write_text(self.ASC)
        return BathymetryRaster.from_asc(str(p), PROJ)

    def probe(self, r, lon, lat):
        x, y = PROJ.forward(lon, lat)
        return r.depth_at_planar(np.array([x]), np.array([y]))[0]

    def test_rows_are_north_first(self, tmp_path):
        r = self.make(tmp_path)
        assert self.probe(r, 14.25, 53.25) == 9.0  # south-west sample
        assert self.probe(r, 15.75, 54.25) == 4.0  # north-east sample
        assert self.probe(r, 14.25, 54.25) == 1.0

    def test_nodata_and_outside_nan(self, tmp_path):
        r = self.make(tmp_path)
        assert np.isnan(self.probe(r, 15.75, 53.25))
        assert np.isnan(self.probe(r, 14.25, 52.0))

    def test_covers(self, tmp_path):
        r = self.make(tmp_path)
        inside = GridSpec(*PROJ.forward(14.8, 53.5), 4, 4, 1000.0)
        assert r.covers(inside.bbox)
        outside = GridSpec(*PROJ.forward(10.0, 45.0), 4, 4, 1000.0)
        assert not r.covers(outside.bbox)

    def test_header_required(self, tmp_path):
        p = tmp_path / "broken.asc"
        p.write_text("ncols 2\n1 2\n")
        with pytest.raises(GridError):
            BathymetryRaster.from_asc(str(p), PROJ)


class TestL90:
    def test_frozen_decile(self):
        assert l90(list(range(1, 11))) == pytest.approx(1.9, abs=1e-12)

    def test_matches_percentile(self):
        rng = np.random.default_rng(3)
        x = rng.normal(60.0, 5.0, size=501)
        assert l90(x) == pytest.approx(float(np.percentile(x, 10.0)), abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            l90([])


def station(name, x, y, value, f=63, months=(6,)):
    return HydrophoneStation(name, (x, y), {(f, m): value for m in months})


class TestStationsCsv:
    def test_load_groups_by_name(self, tmp_path):
        p = tmp_path / "stations.csv"
        p.write_text(
            "name,lon,lat,frequency_hz,month,l90_db\n"
            "A,15.0,54.0,63,6,61.0\n"
            "A,15.0,54.0,63,7,61.5\n"
            "A,15.0,54.0,125,6,59.0\n"
            "B,15.2,54.1,63,6,64.0\n")
        out = load_stations(str(p), PROJ)
        byname = {s.name: s for s in out}
        assert set(byname) == {"A", "B"}
        assert byname["A"].l90 == {(63, 6): 61.0, (63, 7): 61.5, (125, 6): 59.0}
        ex, ey = PROJ.forward(15.2, 54.1)
        assert byname["B"].position == pytest.approx((ex, ey))

    def test_bad_rows_skipped(self, tmp_path, caplog):
        p = tmp_path / "stations.csv"
        p.write_text(
            "name,lon,lat,frequency_hz,month,l90_db\n"
            "A,15.0,54.0,63,13,61.0\n"
            "B,15.2,54.1,63,6,64.0\n")
        with caplog.at_level("WARNING"):
            out = load_stations(str(p), PROJ)
        assert [s.name for s in out] == ["B"]


class TestIdw:
    def test_single_station_constant(self):
        g = make_grid(n_cols=10, n_rows=10, ambient=None, months=())
        st = station("A", ORIGIN_X + 5500.0, ORIGIN_Y + 5500.0, 63.5)
        surf = idw_ambient([st], g, 63, 6)
        np.testing.assert_allclose(surf[g.sea_ids], 63.5, rtol=0, atol=1e-12)

    def test_station_cell_seeded_exactly(self):
        g = make_grid(n_cols=10, n_rows=10, ambient=None, months=())
        a = station("A", ORIGIN_X + 1200.0, ORIGIN_Y + 1800.0, 60.78)
        b = station("B", ORIGIN_X + 8300.0, ORIGIN_Y + 8900.0, 82.62)
        surf = idw_ambient([a, b], g, 63, 6)
        assert surf[g.cell_of(ORIGIN_X + 1200.0, ORIGIN_Y + 1800.0)] == 60.78
        assert surf[g.cell_of(ORIGIN_X + 8300.0, ORIGIN_Y + 8900.0)] == 82.62

    def test_bounded_by_extremes(self):
        g = make_grid(n_cols=20, n_rows=20, ambient=None, months=())
        a = station("A", ORIGIN_X + 1200.0, ORIGIN_Y + 1800.0, 60.78)
        b = station("B", ORIGIN_X + 18300.0, ORIGIN_Y + 18900.0, 82.62)
        surf = idw_ambient([a, b], g, 63, 6)
        vals = surf[g.sea_ids]
        assert vals.min() >= 60.78 and vals.max() <= 82.62

    def test_surface_stored_per_frequency_month(self):
        g = make_grid(n_cols=5, n_rows=5, ambient=None, months=())
        st = HydrophoneStation("A", (ORIGIN_X + 2000.0, ORIGIN_Y + 2000.0),
                               {(63, 6): 60.0, (63, 7): 61.0})
        idw_ambient([st], g, 63, 6)
        idw_ambient([st], g, 63, 7)
        assert g.ambient[(63, 6)][g.sea_ids[0]] == 60.0
        assert g.ambient[(63, 7)][g.sea_ids[0]] == 61.0

    def test_no_data_rejected(self):
        g = make_grid(n_cols=5, n_rows=5, ambient=None, months=())
        st = station("A", ORIGIN_X + 2000.0, ORIGIN_Y + 2000.0, 60.0, f=125)
        with pytest.raises(GridError):
            idw_ambient([st], g, 63, 6)

    def test_higher_power_favours_near_station(self):
        g = make_grid(n_cols=20, n_rows=1, ambient=None, months=())
        a = station("A", ORIGIN_X + 500.0, ORIGIN_Y + 500.0, 50.0)
        b = station("B", ORIGIN_X + 19500.0, ORIGIN_Y + 500.0, 90.0)
        probe = g.cell_of(ORIGIN_X + 4500.0, ORIGIN_Y + 500.0)  # nearer to A
        soft = idw_ambient([a, b], g, 63, 6, power=1.0)[probe]
        sharp = idw_ambient([a, b], g, 63, 6, power=4.0)[probe]
        assert sharp < soft  # pulled toward the nearby 50 dB station

    def test_land_stays_nan(self):
        depth = np.full(25, 30.0)
        depth[7] = np.nan
        g = make_grid(n_cols=5, n_rows=5, depth=depth, ambient=None, months=())
        st = station("A", ORIGIN_X + 2000.0, ORIGIN_Y + 2000.0, 60.0)
        surf = idw_ambient([st], g, 63, 6)
        assert np.isnan(surf[7])
