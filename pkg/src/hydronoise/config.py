"""INI configuration: grid geometry, model constants, thresholds, paths.

Frequency sections are named ``[frequency.<hz>]`` and accept the keys
``anchor_sl0_db, fishing_inc_db, trans_mult, alpha_db_per_m``; without any
such section the four standard frequencies with their default constants
apply. Relative paths resolve against the config file's directory.
"""

from __future__ import annotations

import configparser
import hashlib
import os
from dataclasses import dataclass, field
from typing import Mapping

from .acoustics import DEFAULT_FREQUENCIES, FrequencyParams, SoundContext
from .enrich import ActivityThresholds
from .errors import ConfigError
from .grid import DEFAULT_IDW_POWER, GridSpec
from .ingest import DEFAULT_GAP_S
from .proj import projection_for_epsg
from .temporal import parse_instant

__all__ = ["Config", "load_config"]

_STANDARD_FREQUENCIES = (63, 125, 400, 4000)

_PATH_KEYS = ("ais", "registry", "ports", "bathymetry", "stations", "output_dir")


@dataclass(frozen=True)
class Config:
    origin_lon: float
    origin_lat: float
    n_cols: int
    n_rows: int
    cell_m: float
    epsg: int
    frequencies: Mapping[int, FrequencyParams]
    fish_min_kn: float
    fish_max_kn: float
    gap_s: int
    idw_power: float
    sample_period_s: int
    sample_origin: str  # "midnight" or an ISO instant
    v0_kn: float
    speed_coeff_db: float
    paths: Mapping[str, str]
    config_hash: str

    def grid_spec(self) -> GridSpec:
        proj = projection_for_epsg(self.epsg)
        ox, oy = proj.forward(self.origin_lon, self.origin_lat)
        return GridSpec(ox, oy, self.n_cols, self.n_rows, self.cell_m, self.epsg)

    def sound_context(self) -> SoundContext:
        return SoundContext(v0=self.v0_kn, speed_coeff=self.speed_coeff_db)

    def thresholds(self) -> ActivityThresholds:
        return ActivityThresholds(self.fish_min_kn, self.fish_max_kn)

    def sample_origin_epoch(self, earliest: int) -> int:
        """Resolve the sampling origin: a fixed instant, or the midnight
        UTC of the earliest record's day."""
        if self.sample_origin == "midnight":
            return earliest - earliest % 86400
        return parse_instant(self.sample_origin)

    def path(self, key: str) -> str:
        try:
            return self.paths[key]
        except KeyError:
            raise ConfigError(f"config defines no path for {key!r}") from None


def load_config(path: str) -> Config:
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = parser.read(path)
    if not read:
        raise ConfigError(f"cannot read config file {path!r}")
    base = os.path.dirname(os.path.abspath(path))

    try:
        g = parser["grid"]
        origin_lon = g.getfloat("origin_lon")
        origin_lat = g.getfloat("origin_lat")
        n_cols = g.getint("n_cols")
        n_rows = g.getint("n_rows")
        cell_m = g.getfloat("cell_m", 1000.0)
        epsg = g.getint("epsg", 32633)
        if None in (origin_lon, origin_lat, n_cols, n_rows):
            raise ConfigError("grid section needs origin_lon, origin_lat, n_cols, n_rows")
    except KeyError as exc:
        raise ConfigError(f"config missing [grid] section ({exc})") from exc
    except ValueError as exc:
        raise ConfigError(f"bad [grid] value: {exc}") from exc

    p = parser["pipeline"] if parser.has_section("pipeline") else {}

    def _pf(key: str, default: float) -> float:
        try:
            return float(p.get(key, default))
        except ValueError as exc:
            raise ConfigError(f"bad [pipeline] value for {key}: {exc}") from exc

    frequencies: dict[int, FrequencyParams] = {}
    for section in parser.sections():
        if not section.startswith("frequency."):
            continue
        try:
            f = int(section.split(".", 1)[1])
        except ValueError as exc:
            raise ConfigError(f"bad frequency section name [{section}]") from exc
        sec = parser[section]
        defaults = DEFAULT_FREQUENCIES.get(f)
        if defaults is None and not all(
                k in sec for k in ("anchor_sl0_db", "fishing_inc_db", "trans_mult", "alpha_db_per_m")):
            raise ConfigError(
                f"frequency {f} is not standard; section [{section}] must give full params")
        try:
            frequencies[f] = FrequencyParams(
                f=f,
                anchor_sl0=sec.getfloat("anchor_sl0_db", defaults.anchor_sl0 if defaults else None),
                fishing_inc=sec.getfloat("fishing_inc_db", defaults.fishing_inc if defaults else None),
                trans_mult=sec.getfloat("trans_mult", defaults.trans_mult if defaults else None),
                alpha=sec.getfloat("alpha_db_per_m", defaults.alpha if defaults else None),
            )
        except ValueError as exc:
            raise ConfigError(f"bad value in [{section}]: {exc}") from exc
    if not frequencies:
        frequencies = dict(DEFAULT_FREQUENCIES)

    paths: dict[str, str] = {}
    if parser.has_section("paths"):
        for key, value in parser["paths"].items():
            if key not in _PATH_KEYS:
                raise ConfigError(f"unknown path key {key!r} (expected one of {_PATH_KEYS})")
            paths[key] = os.path.normpath(os.path.join(base, value))

    canon = []
    for section in sorted(parser.sections()):
        for key in sorted(parser[section]):
            canon.append(f"{section}.{key}={parser[section][key]}")
    digest = hashlib.sha256("\n".join(canon).encode()).hexdigest()[:16]

    cfg = Config(
        origin_lon=origin_lon,
        origin_lat=origin_lat,
        n_cols=n_cols,
        n_rows=n_rows,
        cell_m=cell_m,
        epsg=epsg,
        frequencies=frequencies,
        fish_min_kn=_pf("fish_min_kn", 1.0),
        fish_max_kn=_pf("fish_max_kn", 6.0),
        gap_s=int(_pf("gap_s", DEFAULT_GAP_S)),
        idw_power=_pf("idw_power", DEFAULT_IDW_POWER),
        sample_period_s=int(_pf("sample_period_s", 60)),
        sample_origin=str(p.get("sample_origin", "midnight")) if p else "midnight",
        v0_kn=_pf("v0_kn", 3.9),
        speed_coeff_db=_pf("speed_coeff_db", 15.39),
        paths=paths,
        config_hash=digest,
    )
    if cfg.fish_min_kn > cfg.fish_max_kn:
        raise ConfigError("fish_min_kn must not exceed fish_max_kn")
    if cfg.sample_period_s <= 0:
        raise ConfigError("sample_period_s must be positive")
    return cfg
