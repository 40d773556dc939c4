"""Spatial lattice with depth, absorption, and ambient-noise surfaces.

The grid is a regular array of square cells in a projected planar frame.
Cell ids are row-major: id = row * n_cols + col, with floor arithmetic
mapping any planar point to its containing cell in O(1). Depth comes from
bathymetry sampled at cell centroids; cells with depth <= 0 or no data are
land and excluded from listening. Ambient noise is one surface per
(frequency, month), interpolated from hydrophone L90 values by inverse
distance weighting.
"""

from __future__ import annotations

import csv
import hashlib
import logging
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Protocol, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .acoustics import DEFAULT_FREQUENCIES, FrequencyParams
from .errors import GridError
from .proj import Projection, projection_for_epsg

__all__ = [
    "GridSpec",
    "Cell",
    "Grid",
    "HydrophoneStation",
    "Bathymetry",
    "BathymetryCloud",
    "BathymetryRaster",
    "build_grid",
    "l90",
    "idw_ambient",
    "load_stations",
    "load_bathymetry",
]

logger = logging.getLogger(__name__)

DEFAULT_CELL_SIZE = 1000.0
DEFAULT_IDW_POWER = 2.0


@dataclass(frozen=True)
class GridSpec:
    """Geometry of the lattice in projected planar metres."""

    origin_x: float
    origin_y: float
    n_cols: int
    n_rows: int
    cell_size: float = DEFAULT_CELL_SIZE
    epsg: int = 32633

    def __post_init__(self) -> None:
        if self.n_cols <= 0 or self.n_rows <= 0:
            raise ValueError("cell counts must be positive")
        if not self.cell_size > 0:
            raise ValueError("cell_size must be positive")

    @property
    def n_cells(self) -> int:
        return self.n_cols * self.n_rows

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return (self.origin_x, self.origin_y,
                self.origin_x + self.n_cols * self.cell_size,
                self.origin_y + self.n_rows * self.cell_size)

    def spec_hash(self) -> bytes:
        canon = (f"{self.origin_x!r},{self.origin_y!r},{self.n_cols},"
                 f"{self.n_rows},{self.cell_size!r},{self.epsg}")
        return hashlib.sha256(canon.encode()).digest()[:16]


@dataclass(frozen=True)
class Cell:
    """Read-only view of one grid cell."""

    id: int
    centroid: tuple[float, float]
    depth: float
    alpha: Mapping[int, float]
    ambient: Mapping[tuple[int, int], float]


@dataclass(frozen=True)
class HydrophoneStation:
    """A monitoring station with L90 levels per (frequency, month)."""

    name: str
    position: tuple[float, float]
    l90: Mapping[tuple[int, int], float]


class Bathymetry(Protocol):
    def covers(self, bbox: tuple[float, float, float, float]) -> bool: ...
    def depth_at_planar(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray: ...


class BathymetryCloud:
    """lon/lat/depth point cloud sampled by nearest neighbour in planar space."""

    def __init__(self, xs: np.ndarray, ys: np.ndarray, depths: np.ndarray) -> None:
        if len(xs) == 0:
            raise GridError("bathymetry cloud is empty")
        self._xy = np.column_stack([xs, ys])
        self._depth = np.asarray(depths, dtype=np.float64)
        self._tree = cKDTree(self._xy)

    @classmethod
    def from_csv(cls, path: str, projection: Projection) -> "BathymetryCloud":
        lons, lats, depths = [], [], []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip().lower() for h in header] != ["lon", "lat", "depth_m"]:
                raise GridError("bathymetry CSV header must be lon,lat,depth_m")
            for row in reader:
                if not row or all(not c.strip() for c in row):
                    continue
                lons.append(float(row[0]))
                lats.append(float(row[1]))
                depths.append(float(row[2]))
        xs, ys = projection.forward(np.asarray(lons), np.asarray(lats))
        return cls(np.atleast_1d(xs), np.atleast_1d(ys), np.asarray(depths))

    def covers(self, bbox: tuple[float, float, float, float]) -> bool:
        x0, y0, x1, y1 = bbox
        cx0, cy0 = self._xy.min(axis=0)
        cx1, cy1 = self._xy.max(axis=0)
        return cx0 <= x0 and cy0 <= y0 and cx1 >= x1 and cy1 >= y1

    def depth_at_planar(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        _, idx = self._tree.query(np.column_stack([xs, ys]))
        return self._depth[idx]


class BathymetryRaster:
    """Single-band ESRI ASCII grid in WGS84 lon/lat."""

    def __init__(self, data: np.ndarray, xll: float, yll: float, cellsize: float,
                 nodata: float, projection: Projection) -> None:
        self._data = data  # row 0 is the northernmost line
        self._xll = xll
        self._yll = yll
        self._cs = cellsize
        self._nodata = nodata
        self._proj = projection

    @classmethod
    def from_asc(cls, path: str, projection: Projection) -> "BathymetryRaster":
        headers: dict[str, float] = {}
        rows: list[np.ndarray] = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                parts = line.split()
                if not parts:
                    continue
                key = parts[0].lower()
                if key in ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize", "nodata_value"):
                    headers[key] = float(parts[1])
                else:
                    rows.append(np.array(parts, dtype=np.float64))
        for req in ("ncols", "nrows", "xllcorner", "yllcorner", "cellsize"):
            if req not in headers:
                raise GridError(f"raster header missing {req}")
        data = np.vstack(rows)
        if data.shape != (int(headers["nrows"]), int(headers["ncols"])):
            raise GridError("raster body does not match declared nrows/ncols")
        return cls(data, headers["xllcorner"], headers["yllcorner"],
                   headers["cellsize"], headers.get("nodata_value", -9999.0), projection)

    @property
    def _extent(self) -> tuple[float, float, float, float]:
        nrows, ncols = self._data.shape
        return (self._xll, self._yll, self._xll + ncols * self._cs, self._yll + nrows * self._cs)

    def covers(self, bbox: tuple[float, float, float, float]) -> bool:
        x0, y0, x1, y1 = bbox
        corners_x = np.array([x0, x1, x0, x1])
        corners_y = np.array([y0, y0, y1, y1])
        lon, lat = self._proj.inverse(corners_x, corners_y)
        e = self._extent
        return bool(np.all((lon >= e[0]) & (lon <= e[2]) & (lat >= e[1]) & (lat <= e[3])))

    def depth_at_planar(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        lon, lat = self._proj.inverse(np.asarray(xs), np.asarray(ys))
        nrows, ncols = self._data.shape
        col = np.floor((lon - self._xll) / self._cs).astype(np.int64)
        row_up = np.floor((lat - self._yll) / self._cs).astype(np.int64)
        row = nrows - 1 - row_up
        ok = (col >= 0) & (col < ncols) & (row >= 0) & (row < nrows)
        out = np.full(np.shape(col), np.nan)
        vals = self._data[row[ok], col[ok]]
        vals = np.where(vals == self._nodata, np.nan, vals)
        out[ok] = vals
        return out


def load_bathymetry(path: str, projection: Projection) -> Bathymetry:
    """Pick the reader from the file extension: .asc raster, else CSV cloud."""
    if str(path).lower().endswith(".asc"):
        return BathymetryRaster.from_asc(path, projection)
    return BathymetryCloud.from_csv(path, projection)


class Grid:
    """The lattice plus its per-cell attributes and ambient surfaces."""

    def __init__(self, spec: GridSpec, depth: np.ndarray,
                 frequencies: Mapping[int, FrequencyParams] = DEFAULT_FREQUENCIES) -> None:
        depth = np.asarray(depth, dtype=np.float64)
        if depth.shape != (spec.n_cells,):
            raise ValueError(f"depth must have shape ({spec.n_cells},)")
        self.spec = spec
        self.projection: Projection = projection_for_epsg(spec.epsg)
        self.depth = depth
        self.sea_mask = np.isfinite(depth) & (depth > 0)
        self.sea_ids = np.flatnonzero(self.sea_mask)
        cs = spec.cell_size
        self.centroid_x = spec.origin_x + (np.arange(spec.n_cols) + 0.5) * cs
        self.centroid_y = spec.origin_y + (np.arange(spec.n_rows) + 0.5) * cs
        self.alpha: dict[int, np.ndarray] = {
            f: np.full(spec.n_cells, fp.alpha) for f, fp in frequencies.items()
        }
        self.ambient: dict[tuple[int, int], np.ndarray] = {}

    @property
    def n_cells(self) -> int:
        return self.spec.n_cells

    def spec_hash(self) -> bytes:
        return self.spec.spec_hash()

    def cell_of(self, x, y):
        """Containing cell id for planar points; -1 outside the extent."""
        s = self.spec
        col = np.floor((np.asarray(x) - s.origin_x) / s.cell_size).astype(np.int64)
        row = np.floor((np.asarray(y) - s.origin_y) / s.cell_size).astype(np.int64)
        ok = (col >= 0) & (col < s.n_cols) & (row >= 0) & (row < s.n_rows)
        cid = np.where(ok, row * s.n_cols + col, -1)
        if np.ndim(x) == 0 and np.ndim(y) == 0:
            return int(cid)
        return cid

    def centroid(self, cell_id: int) -> tuple[float, float]:
        row, col = divmod(int(cell_id), self.spec.n_cols)
        return float(self.centroid_x[col]), float(self.centroid_y[row])

    def centroid_arrays(self, cell_ids: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        rows, cols = np.divmod(np.asarray(cell_ids, dtype=np.int64), self.spec.n_cols)
        return self.centroid_x[cols], self.centroid_y[rows]

    def set_ambient(self, frequency: int, month: int, values) -> None:
        """Install an ambient surface; scalars broadcast over sea cells."""
        arr = np.full(self.n_cells, np.nan)
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 0:
            arr[self.sea_mask] = float(values)
        else:
            if values.shape != (self.n_cells,):
                raise ValueError(f"ambient surface must have shape ({self.n_cells},)")
            arr[self.sea_mask] = values[self.sea_mask]
        self.ambient[(int(frequency), int(month))] = arr

    def cell(self, cell_id: int) -> Cell:
        return Cell(
            id=int(cell_id),
            centroid=self.centroid(cell_id),
            depth=float(self.depth[cell_id]),
            alpha={f: float(a[cell_id]) for f, a in self.alpha.items()},
            ambient={k: float(v[cell_id]) for k, v in self.ambient.items()},
        )

    def sea_cells(self) -> Iterator[Cell]:
        for cid in self.sea_ids:
            yield self.cell(int(cid))

    def cell_polygon_lonlat(self, cell_id: int) -> list[tuple[float, float]]:
        """Cell corner ring in lon/lat, closed, counter-clockwise."""
        s = self.spec
        row, col = divmod(int(cell_id), s.n_cols)
        x0 = s.origin_x + col * s.cell_size
        y0 = s.origin_y + row * s.cell_size
        xs = np.array([x0, x0 + s.cell_size, x0 + s.cell_size, x0, x0])
        ys = np.array([y0, y0, y0 + s.cell_size, y0 + s.cell_size, y0])
        lon, lat = self.projection.inverse(xs, ys)
        return list(zip(lon.tolist(), lat.tolist()))


def build_grid(spec: GridSpec, bathymetry: Bathymetry,
               frequencies: Mapping[int, FrequencyParams] = DEFAULT_FREQUENCIES) -> Grid:
    """Sample depth at every centroid and assemble the grid."""
    if not bathymetry.covers(spec.bbox):
        raise GridError("bathymetry does not cover the grid extent")
    cx, cy = np.meshgrid(
        spec.origin_x + (np.arange(spec.n_cols) + 0.5) * spec.cell_size,
        spec.origin_y + (np.arange(spec.n_rows) + 0.5) * spec.cell_size,
    )
    depth = bathymetry.depth_at_planar(cx.ravel(), cy.ravel())
    grid = Grid(spec, depth, frequencies)
    n_land = spec.n_cells - len(grid.sea_ids)
    logger.info("grid built: %d cells, %d sea, %d land/missing",
                spec.n_cells, len(grid.sea_ids), n_land)
    return grid


def l90(series: Sequence[float]) -> float:
    """Level exceeded 90% of the time: the 10th percentile of the samples."""
    arr = np.asarray(series, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("l90 of an empty series")
    return float(np.percentile(arr, 10.0))


def load_stations(path: str, projection: Projection) -> list[HydrophoneStation]:
    """Read the stations CSV (name,lon,lat,frequency_hz,month,l90_db)."""
    per_name: dict[str, dict] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        expected = ["name", "lon", "lat", "frequency_hz", "month", "l90_db"]
        if header is None or [h.strip().lower() for h in header] != expected:
            raise GridError(f"stations header must be {','.join(expected)}")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                name = row[0].strip()
                lon, lat = float(row[1]), float(row[2])
                freq = int(row[3])
                month = int(row[4])
                value = float(row[5])
                if not 1 <= month <= 12:
                    raise ValueError(f"month {month} out of range")
                if not np.isfinite(value):
                    raise ValueError("l90 must be finite")
            except (ValueError, IndexError) as exc:
                logger.warning("stations line %d: %s; row skipped", lineno, exc)
                continue
            entry = per_name.setdefault(name, {"lon": lon, "lat": lat, "l90": {}})
            entry["l90"][(freq, month)] = value
    stations = []
    for name, entry in per_name.items():
        x, y = projection.forward(entry["lon"], entry["lat"])
        stations.append(HydrophoneStation(name, (x, y), entry["l90"]))
    return stations


def idw_ambient(stations: Sequence[HydrophoneStation], grid: Grid,
                frequency: int, month: int,
                power: float = DEFAULT_IDW_POWER) -> np.ndarray:
    """Interpolate an ambient surface onto the grid's sea cells.

    Station-bearing cells are seeded with the station value; every other
    sea cell gets the inverse-distance weighted mean of all stations with
    data for (frequency, month). The surface is stored on the grid and
    returned (NaN over land).
    """
    key = (int(frequency), int(month))
    sources = [s for s in stations if key in s.l90]
    if not sources:
        raise GridError(f"no station has L90 data for frequency {frequency}, month {month}")

    sx = np.array([s.position[0] for s in sources])
    sy = np.array([s.position[1] for s in sources])
    sval = np.array([s.l90[key] for s in sources], dtype=np.float64)

    out = np.full(grid.n_cells, np.nan)
    cx, cy = grid.centroid_arrays(grid.sea_ids)
    d2 = (cx[:, None] - sx[None, :]) ** 2 + (cy[:, None] - sy[None, :]) ** 2

    # seed the cells that physically contain a station
    seeded: dict[int, tuple[float, float]] = {}
    for x, y, v in zip(sx, sy, sval):
        cid = grid.cell_of(float(x), float(y))
        if cid >= 0 and grid.sea_mask[cid]:
            ctn = grid.centroid(cid)
            d_ctr = (x - ctn[0]) ** 2 + (y - ctn[1]) ** 2
            prev = seeded.get(cid)
            if prev is None or d_ctr < prev[0]:  # nearest station wins the cell
                seeded[cid] = (d_ctr, v)
    for cid, (_, v) in seeded.items():
        out[cid] = v

    unseeded = np.array([cid not in seeded for cid in grid.sea_ids])
    with np.errstate(divide="ignore"):
        w = d2[unseeded] ** (-power / 2.0)
    vals = (w @ sval) / w.sum(axis=1)
    out[grid.sea_ids[unseeded]] = vals

    grid.ambient[key] = out
    return out
