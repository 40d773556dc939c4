"""Geographic to planar coordinate conversion.

Implements the UTM transverse Mercator projection on the WGS84 ellipsoid
using the Krueger n-series (terms through n^6, sub-millimetre within a UTM
zone and its neighbours), plus great-circle distance on the mean sphere.
Only the UTM EPSG families 326xx (north) and 327xx (south) are supported;
this covers the projected CRS the grid configuration accepts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = ["Projection", "projection_for_epsg", "haversine_m", "EARTH_RADIUS_M"]

# WGS84
_A = 6378137.0
_F = 1.0 / 298.257223563

EARTH_RADIUS_M = 6371000.0

_K0 = 0.9996
_FALSE_EASTING = 500000.0
_FALSE_NORTHING_SOUTH = 10000000.0

_N = _F / (2.0 - _F)

# rectifying radius
_ABAR = _A / (1.0 + _N) * (1.0 + _N**2 / 4.0 + _N**4 / 64.0 + _N**6 / 256.0)

# forward series (conformal -> rectifying)
_ALPHA = (
    _N / 2.0 - 2.0 * _N**2 / 3.0 + 5.0 * _N**3 / 16.0 + 41.0 * _N**4 / 180.0
    - 127.0 * _N**5 / 288.0 + 7891.0 * _N**6 / 37800.0,
    13.0 * _N**2 / 48.0 - 3.0 * _N**3 / 5.0 + 557.0 * _N**4 / 1440.0
    + 281.0 * _N**5 / 630.0 - 1983433.0 * _N**6 / 1935360.0,
    61.0 * _N**3 / 240.0 - 103.0 * _N**4 / 140.0 + 15061.0 * _N**5 / 26880.0
    + 167603.0 * _N**6 / 181440.0,
    49561.0 * _N**4 / 161280.0 - 179.0 * _N**5 / 168.0 + 6601661.0 * _N**6 / 7257600.0,
    34729.0 * _N**5 / 80640.0 - 3418889.0 * _N**6 / 1995840.0,
    212378941.0 * _N**6 / 319334400.0,
)

# inverse series (rectifying -> conformal)
_BETA = (
    _N / 2.0 - 2.0 * _N**2 / 3.0 + 37.0 * _N**3 / 96.0 - _N**4 / 360.0
    - 81.0 * _N**5 / 512.0 + 96199.0 * _N**6 / 604800.0,
    _N**2 / 48.0 + _N**3 / 15.0 - 437.0 * _N**4 / 1440.0 + 46.0 * _N**5 / 105.0
    - 1118711.0 * _N**6 / 3870720.0,
    17.0 * _N**3 / 480.0 - 37.0 * _N**4 / 840.0 - 209.0 * _N**5 / 4480.0
    + 5569.0 * _N**6 / 90720.0,
    4397.0 * _N**4 / 161280.0 - 11.0 * _N**5 / 504.0 - 830251.0 * _N**6 / 7257600.0,
    4583.0 * _N**5 / 161280.0 - 108847.0 * _N**6 / 3991680.0,
    20648693.0 * _N**6 / 638668800.0,
)

# conformal -> geodetic latitude
_DELTA = (
    2.0 * _N - 2.0 * _N**2 / 3.0 - 2.0 * _N**3 + 116.0 * _N**4 / 45.0
    + 26.0 * _N**5 / 45.0 - 2854.0 * _N**6 / 675.0,
    7.0 * _N**2 / 3.0 - 8.0 * _N**3 / 5.0 - 227.0 * _N**4 / 45.0
    + 2704.0 * _N**5 / 315.0 + 2323.0 * _N**6 / 945.0,
    56.0 * _N**3 / 15.0 - 136.0 * _N**4 / 35.0 - 1262.0 * _N**5 / 105.0
    + 73814.0 * _N**6 / 2835.0,
    4279.0 * _N**4 / 630.0 - 332.0 * _N**5 / 35.0 - 399572.0 * _N**6 / 14175.0,
    4174.0 * _N**5 / 315.0 - 144838.0 * _N**6 / 6237.0,
    601676.0 * _N**6 / 22275.0,
)

_E2SQRT = 2.0 * math.sqrt(_N) / (1.0 + _N)


@dataclass(frozen=True)
class Projection:
    """A UTM zone mapping lon/lat degrees to easting/northing metres."""

    epsg: int
    zone: int
    north: bool

    @property
    def central_meridian_deg(self) -> float:
        return -183.0 + 6.0 * self.zone

    @property
    def false_northing(self) -> float:
        return 0.0 if self.north else _FALSE_NORTHING_SOUTH

    def forward(self, lon, lat):
        """Project lon/lat (degrees, scalar or array) to (easting, northing)."""
        lon = np.asarray(lon, dtype=np.float64)
        lat = np.asarray(lat, dtype=np.float64)
        if np.any(np.abs(lat) > 84.5):
            raise ValueError("latitude outside the UTM domain")
        phi = np.radians(lat)
        lam = np.radians(lon) - math.radians(self.central_meridian_deg)

        sphi = np.sin(phi)
        # conformal latitude via the Gudermannian form
        t = np.sinh(np.arctanh(sphi) - _E2SQRT * np.arctanh(_E2SQRT * sphi))
        xi = np.arctan2(t, np.cos(lam))
        eta = np.arcsinh(np.sin(lam) / np.hypot(t, np.cos(lam)))

        x = xi.copy()
        y = eta.copy()
        for j, aj in enumerate(_ALPHA, start=1):
            x += aj * np.sin(2 * j * xi) * np.cosh(2 * j * eta)
            y += aj * np.cos(2 * j * xi) * np.sinh(2 * j * eta)

        easting = _FALSE_EASTING + _K0 * _ABAR * y
        northing = self.false_northing + _K0 * _ABAR * x
        if np.ndim(lon) == 0 and np.ndim(lat) == 0:
            return float(easting), float(northing)
        return easting, northing

    def inverse(self, easting, northing):
        """Invert (easting, northing) metres back to lon/lat degrees."""
        easting = np.asarray(easting, dtype=np.float64)
        northing = np.asarray(northing, dtype=np.float64)
        xi = (northing - self.false_northing) / (_K0 * _ABAR)
        eta = (easting - _FALSE_EASTING) / (_K0 * _ABAR)

        xip = xi.copy()
        etap = eta.copy()
        for j, bj in enumerate(_BETA, start=1):
            xip -= bj * np.sin(2 * j * xi) * np.cosh(2 * j * eta)
            etap -= bj * np.cos(2 * j * xi) * np.sinh(2 * j * eta)

        chi = np.arcsin(np.sin(xip) / np.cosh(etap))
        phi = chi.copy()
        for j, dj in enumerate(_DELTA, start=1):
            phi += dj * np.sin(2 * j * chi)

        lam = np.arctan2(np.sinh(etap), np.cos(xip))
        lon = np.degrees(lam) + self.central_meridian_deg
        lat = np.degrees(phi)
        if np.ndim(easting) == 0 and np.ndim(northing) == 0:
            return float(lon), float(lat)
        return lon, lat


def projection_for_epsg(epsg: int) -> Projection:
    """Resolve a UTM EPSG code (326xx north, 327xx south) to a projection."""
    zone = epsg % 100
    family = epsg // 100
    if family not in (326, 327) or not 1 <= zone <= 60:
        raise ValueError(
            f"unsupported EPSG:{epsg}; expected a UTM code in 32601..32660 or 32701..32760"
        )
    return Projection(epsg=epsg, zone=zone, north=(family == 326))


def haversine_m(lon1, lat1, lon2, lat2):
    """Great-circle distance in metres on the mean-radius sphere."""
    lon1, lat1, lon2, lat2 = (np.radians(np.asarray(v, dtype=np.float64))
                              for v in (lon1, lat1, lon2, lat2))
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = np.sin(dlat / 2.0) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(dlon / 2.0) ** 2
    d = 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(h))
    if np.ndim(d) == 0:
        return float(d)
    return d
