"""Command-line pipeline: ingest, ambient, compute, analyze, frames.

Exit codes: 0 on success, 1 on runtime failures inside the pipeline, 2 on
usage problems (bad flags, missing configured files).
"""

from __future__ import annotations

import datetime as dt
import functools
import json
import logging
import os
from typing import Mapping, Sequence

import click
import numpy as np

from . import analytics, archive
from .config import Config, load_config
from .engine import (brute_force_field, compute_noise_field, field_export_csv,
                     field_load, field_store, max_delta_db)
from .enrich import enrich_trips
from .errors import ConfigError, HydronoiseError
from .grid import Grid, build_grid, idw_ambient, load_bathymetry, load_stations
from .ingest import load_ports, parse_ais, parse_registry, reconstruct_trips
from .proj import projection_for_epsg
from .temporal import format_instant, parse_instant

logger = logging.getLogger(__name__)

_WEEKDAY_NAMES = {"mon": 0, "tue": 1, "wed": 2, "thu": 3, "fri": 4, "sat": 5, "sun": 6}


def _fail_on_pipeline_error(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except HydronoiseError as exc:
            raise click.ClickException(str(exc))
    return wrapper


@click.group()
@click.option("--config", "-c", "config_path", required=True,
              type=click.Path(), help="Path to the INI config file.")
@click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True,
              help="Worker processes for the compute stage.")
@click.option("--deterministic", is_flag=True,
              help="Force single-worker canonical-order summation.")
@click.pass_context
def main(ctx: click.Context, config_path: str, threads: int, deterministic: bool) -> None:
    """Shipping-noise mapping pipeline."""
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(config_path)
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    ctx.obj = {"cfg": cfg, "threads": 1 if deterministic else threads}


def _cfg(ctx: click.Context) -> Config:
    return ctx.obj["cfg"]


def _input_path(cfg: Config, key: str) -> str:
    try:
        path = cfg.path(key)
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    if not os.path.exists(path):
        raise click.UsageError(f"{key} file not found: {path}")
    return path


def _output_dir(cfg: Config) -> str:
    try:
        out = cfg.path("output_dir")
    except ConfigError as exc:
        raise click.UsageError(str(exc))
    os.makedirs(out, exist_ok=True)
    return out


def _build_grid(cfg: Config) -> Grid:
    spec = cfg.grid_spec()
    proj = projection_for_epsg(spec.epsg)
    bathy = load_bathymetry(_input_path(cfg, "bathymetry"), proj)
    return build_grid(spec, bathy, cfg.frequencies)


def _ambient_surfaces(cfg: Config, grid: Grid, months: Sequence[int],
                      frequencies: Sequence[int]) -> None:
    stations = load_stations(_input_path(cfg, "stations"), grid.projection)
    for f in frequencies:
        for m in months:
            idw_ambient(stations, grid, f, m, cfg.idw_power)


def _window_option(value: str, name: str) -> int:
    try:
        t = parse_instant(value)
    except ValueError as exc:
        raise click.UsageError(f"bad {name}: {exc}")
    if t % 60:
        raise click.UsageError(f"{name} must be aligned to whole minutes")
    return t


def _months_between(w0: int, w1: int) -> list[int]:
    months = set()
    day = w0 - w0 % 86400
    while day <= w1:
        months.add(dt.datetime.fromtimestamp(day, tz=dt.timezone.utc).month)
        day += 86400
    return sorted(months)


def _cells_geojson(grid: Grid, cell_ids: Sequence[int], props: Mapping[int, dict],
                   config_hash: str) -> dict:
    features = []
    for cid in cell_ids:
        features.append({
            "type": "Feature",
            "geometry": {"type": "Polygon",
                         "coordinates": [[list(c) for c in grid.cell_polygon_lonlat(cid)]]},
            "properties": {"cell_id": int(cid), **props.get(int(cid), {})},
        })
    return {"type": "FeatureCollection",
            "metadata": {"config_hash": config_hash},
            "features": features}


@main.command("ingest")
@click.pass_context
@_fail_on_pipeline_error
def cmd_ingest(ctx: click.Context) -> None:
    """Parse AIS + registry, reconstruct trips, write the trips archive."""
    cfg = _cfg(ctx)
    out = _output_dir(cfg)
    proj = projection_for_epsg(cfg.epsg)
    with open(_input_path(cfg, "ais"), newline="", encoding="utf-8") as fh:
        records = parse_ais(fh)
    with open(_input_path(cfg, "registry"), newline="", encoding="utf-8") as fh:
        registry = parse_registry(fh)
    ports = load_ports(_input_path(cfg, "ports"), proj)
    origin = cfg.sample_origin_epoch(min(r.t for r in records))
    trips, stats = reconstruct_trips(records, ports, proj, cfg.gap_s,
                                     cfg.sample_period_s, origin)
    enriched = enrich_trips(trips, registry, cfg.frequencies, ports, cfg.thresholds())
    path = os.path.join(out, "trips.jsonl")
    archive.save_trips(path, enriched, cfg.config_hash)
    click.echo("vessels,ais,trips")
    click.echo(f"{stats['vessels']},{stats['records']},{len(enriched)}")
    click.echo(f"trips archive: {path}")


@main.command("ambient")
@click.option("--month", type=click.IntRange(1, 12), required=True,
              help="Calendar month of the surfaces.")
@click.pass_context
@_fail_on_pipeline_error
def cmd_ambient(ctx: click.Context, month: int) -> None:
    """Interpolate ambient-noise surfaces for one month, all frequencies."""
    cfg = _cfg(ctx)
    out = _output_dir(cfg)
    grid = _build_grid(cfg)
    _ambient_surfaces(cfg, grid, [month], sorted(cfg.frequencies))
    for f in sorted(cfg.frequencies):
        surface = grid.ambient[(f, month)]
        csv_path = os.path.join(out, f"ambient_{f}_{month:02d}.csv")
        with open(csv_path, "w", encoding="utf-8") as fh:
            fh.write(f"# config_hash={cfg.config_hash}\n")
            fh.write("cell_id,ambient_db\n")
            for cid in grid.sea_ids.tolist():
                fh.write(f"{cid},{float(surface[cid])!r}\n")
        props = {int(cid): {"ambient_db": float(surface[cid])}
                 for cid in grid.sea_ids.tolist()}
        geo_path = os.path.join(out, f"ambient_{f}_{month:02d}.geojson")
        with open(geo_path, "w", encoding="utf-8") as fh:
            json.dump(_cells_geojson(grid, grid.sea_ids.tolist(), props,
                                     cfg.config_hash), fh)
        click.echo(f"ambient f={f} Hz month={month}: {csv_path}")


@main.command("compute")
@click.option("--start", required=True, help="Window start, ISO 8601 UTC.")
@click.option("--end", required=True, help="Window end, ISO 8601 UTC (inclusive).")
@click.option("--frequency", type=int, required=True, help="Frequency in Hz.")
@click.option("--oracle", is_flag=True,
              help="Also run the brute-force oracle and report max |delta|.")
@click.option("--trips-archive", type=click.Path(), default=None,
              help="Trips archive path (default: <output_dir>/trips.jsonl).")
@click.option("--hp-min", type=float, default=None, help="Min engine power filter.")
@click.option("--hp-max", type=float, default=None, help="Max engine power filter.")
@click.option("--mmsi", "mmsis", type=int, multiple=True, help="Keep only these MMSI.")
@click.option("--loa-min", type=float, default=None, help="Min length overall filter.")
@click.option("--loa-max", type=float, default=None, help="Max length overall filter.")
@click.option("--gear", "gears", multiple=True, help="Keep only these gear codes.")
@click.option("--activity", "activities", type=int, multiple=True,
              help="Keep trips containing these activity codes.")
@click.pass_context
@_fail_on_pipeline_error
def cmd_compute(ctx: click.Context, start: str, end: str, frequency: int, oracle: bool,
                trips_archive: str | None, hp_min: float | None, hp_max: float | None,
                mmsis: tuple[int, ...], loa_min: float | None, loa_max: float | None,
                gears: tuple[str, ...], activities: tuple[int, ...]) -> None:
    """Run the propagation engine over a window and persist the field."""
    cfg = _cfg(ctx)
    out = _output_dir(cfg)
    w0 = _window_option(start, "--start")
    w1 = _window_option(end, "--end")
    if w1 < w0:
        raise click.UsageError("--end precedes --start")
    if frequency not in cfg.frequencies:
        raise click.UsageError(
            f"frequency {frequency} not configured (have {sorted(cfg.frequencies)})")
    archive_path = trips_archive or os.path.join(out, "trips.jsonl")
    if not os.path.exists(archive_path):
        raise click.UsageError(f"trips archive not found: {archive_path} (run ingest first)")
    trips, _ = archive.load_trips(archive_path)
    hp_range = (hp_min if hp_min is not None else -np.inf,
                hp_max if hp_max is not None else np.inf) \
        if (hp_min is not None or hp_max is not None) else None
    loa_range = (loa_min if loa_min is not None else -np.inf,
                 loa_max if loa_max is not None else np.inf) \
        if (loa_min is not None or loa_max is not None) else None
    trips = analytics.filter_trips(
        trips,
        hp_range=hp_range,
        mmsi=set(mmsis) or None,
        loa_range=loa_range,
        gears=set(gears) or None,
        activity=set(activities) or None,
    )
    grid = _build_grid(cfg)
    months = _months_between(w0, w1)
    _ambient_surfaces(cfg, grid, months, [frequency])
    fp = cfg.frequencies[frequency]
    field = compute_noise_field(trips, grid, fp, (w0, w1), ctx=cfg.sound_context(),
                                n_workers=ctx.obj["threads"])
    tag = f"{format_instant(w0)}_{format_instant(w1)}".replace(":", "").replace("-", "")
    path = os.path.join(out, f"field_{frequency}_{tag}.hnf")
    field_store(field, path)
    csv_path = path[:-4] + ".csv"
    with open(csv_path, "w", encoding="utf-8") as fh:
        fh.write(f"# config_hash={cfg.config_hash}\n")
        field_export_csv(field, fh)
    click.echo(f"field: {field.n_entries} entries over {len(trips)} trips -> {path}")
    if oracle:
        reference = brute_force_field(trips, grid, fp, (w0, w1), ctx=cfg.sound_context())
        delta = max_delta_db(field, reference)
        click.echo(f"max_delta_db = {delta:.6e}")
        if delta <= 1e-9:
            click.echo("max_delta_db <= 1e-9")
        else:
            click.echo("max_delta_db > 1e-9 (ORACLE MISMATCH)")
            raise click.ClickException("engine disagrees with the brute-force oracle")


@main.command("analyze")
@click.option("--field", "field_path", required=True, type=click.Path(),
              help="Field file from `compute`.")
@click.option("--start", required=True, help="Period start date (YYYY-MM-DD).")
@click.option("--end", required=True, help="Period end date (YYYY-MM-DD).")
@click.option("--days", default=None,
              help="Weekday filter, e.g. 'mon,tue,wed,thu' or '0,1,2,3'.")
@click.option("--scheme", type=click.Choice(["average", "peak"]), default="average",
              show_default=True, help="Noise banding scheme.")
@click.pass_context
@_fail_on_pipeline_error
def cmd_analyze(ctx: click.Context, field_path: str, start: str, end: str,
                days: str | None, scheme: str) -> None:
    """Per-cell statistics, bivariate classes, and area summary."""
    cfg = _cfg(ctx)
    out = _output_dir(cfg)
    if not os.path.exists(field_path):
        raise click.UsageError(f"field file not found: {field_path}")
    try:
        period = (dt.date.fromisoformat(start), dt.date.fromisoformat(end))
    except ValueError as exc:
        raise click.UsageError(f"bad period date: {exc}")
    day_filter = _parse_days(days)
    grid = _build_grid(cfg)
    field = field_load(field_path, expected_grid_hash=grid.spec_hash())
    stats = analytics.cell_stats(field, period, day_filter,
                                 sea_cell_ids=grid.sea_ids.tolist())
    stem = os.path.join(out, f"stats_{field.frequency}_{start}_{end}_{scheme}")
    with open(stem + ".csv", "w", encoding="utf-8") as fh:
        analytics.write_stats_csv(stats, scheme, fh, cfg.config_hash)
    props = {}
    for st in stats:
        cls = analytics.bivariate_classify(st, scheme)
        props[st.cell_id] = {
            "avg_excess_db": st.avg_excess_db,
            "active_days": st.active_days,
            "total_days": st.total_days,
            "persistence": st.persistence,
            "mean_daily_peak_db": st.mean_daily_peak_db,
            "noise_band": cls.noise_band,
            "persistence_band": cls.persistence_band,
        }
    with open(stem + ".geojson", "w", encoding="utf-8") as fh:
        json.dump(_cells_geojson(grid, [s.cell_id for s in stats], props,
                                 cfg.config_hash), fh)
    click.echo(f"stats: {len(stats)} cells -> {stem}.csv")
    for (nb, pb), frac in sorted(analytics.area_summary(stats, scheme).items()):
        click.echo(f"class {nb} / {pb}: {frac:.4f}")


def _parse_days(days: str | None) -> set[int] | None:
    if days is None:
        return None
    out: set[int] = set()
    for token in days.split(","):
        token = token.strip().lower()
        if not token:
            continue
        if token in _WEEKDAY_NAMES:
            out.add(_WEEKDAY_NAMES[token])
        else:
            try:
                v = int(token)
            except ValueError:
                raise click.UsageError(f"bad weekday {token!r}")
            if not 0 <= v <= 6:
                raise click.UsageError(f"weekday {v} out of range 0..6")
            out.add(v)
    return out or None


@main.command("frames")
@click.option("--field", "field_path", required=True, type=click.Path(),
              help="Field file from `compute`.")
@click.option("--start", required=True, help="First frame instant, ISO 8601 UTC.")
@click.option("--end", required=True, help="Last frame instant, ISO 8601 UTC.")
@click.option("--step", type=click.IntRange(min=1), default=60, show_default=True,
              help="Frame step in seconds.")
@click.pass_context
@_fail_on_pipeline_error
def cmd_frames(ctx: click.Context, field_path: str, start: str, end: str, step: int) -> None:
    """Emit one GeoJSON frame per step instant for animation tooling."""
    cfg = _cfg(ctx)
    out = _output_dir(cfg)
    if not os.path.exists(field_path):
        raise click.UsageError(f"field file not found: {field_path}")
    t0 = _window_option(start, "--start")
    t1 = _window_option(end, "--end")
    if t1 < t0:
        raise click.UsageError("--end precedes --start")
    grid = _build_grid(cfg)
    field = field_load(field_path, expected_grid_hash=grid.spec_hash())
    frames_dir = os.path.join(out, "frames")
    os.makedirs(frames_dir, exist_ok=True)
    count = 0
    for t in range(t0, t1 + 1, step):
        minute = t // 60
        sel = field.minutes == minute
        cells = field.cell_ids[sel].tolist()
        props = {int(c): {"rl_db": float(r), "timestamp": format_instant(t)}
                 for c, r in zip(cells, field.rl_db[sel].tolist())}
        doc = _cells_geojson(grid, cells, props, cfg.config_hash)
        doc["metadata"]["timestamp"] = format_instant(t)
        name = format_instant(t).replace(":", "").replace("-", "")
        with open(os.path.join(frames_dir, f"frame_{name}.geojson"), "w",
                  encoding="utf-8") as fh:
            json.dump(doc, fh)
        count += 1
    click.echo(f"{count} frames -> {frames_dir}")


if __name__ == "__main__":
    main()
