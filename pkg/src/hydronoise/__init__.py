"""Underwater shipping-noise mapping from AIS vessel traffic.

The pipeline turns raw AIS position reports into minute-resolution maps of
received noise level on a regular planar grid, then aggregates those maps
into per-cell exposure statistics:

``ingest``    parse AIS + vessel registry, reconstruct per-vessel trips on a
              common minute lattice, classify activity.
``ambient``   interpolate background-noise surfaces from hydrophone L90s.
``compute``   run the propagation engine (with an optional brute-force
              cross-check) and persist the sparse noise field.
``analyze``   per-cell statistics, bivariate noise/persistence classes.
``frames``    GeoJSON animation frames of the field.

Each stage is importable on its own; the ``hydronoise`` console script wires
them together behind an INI config.
"""

from .acoustics import (DEFAULT_CONTEXT, DEFAULT_FREQUENCIES, FrequencyParams,
                        SoundContext, propagation_radius, received_level,
                        source_level, sum_levels, transmission_loss)
from .analytics import (CellStats, area_summary, bivariate_classify,
                        cell_stats, filter_trips)
from .archive import load_trips, save_trips
from .config import Config, load_config
from .engine import (CentroidIndex, NoiseField, brute_force_field,
                     compute_noise_field, field_export_csv, field_load,
                     field_store, max_delta_db)
from .enrich import (EnrichedTrip, attach_aspects, classify_activity,
                     compute_sl0, enrich_trips)
from .errors import (AnalyticsError, ConfigError, EngineError, GridError,
                     HydronoiseError, IngestError)
from .grid import (Bathymetry, BathymetryCloud, BathymetryRaster, Grid,
                   GridSpec, HydrophoneStation, build_grid, idw_ambient, l90,
                   load_bathymetry, load_stations)
from .ingest import (AisRecord, PortArea, Trip, VesselProfile, parse_ais,
                     parse_registry, load_ports, reconstruct_trips,
                     split_trips)
from .proj import Projection, haversine_m, projection_for_epsg
from .temporal import TemporalValue, format_instant, parse_instant, synchronize

__version__ = "0.1.0"

__all__ = [
    "AisRecord", "AnalyticsError", "Bathymetry", "BathymetryCloud",
    "BathymetryRaster", "CellStats", "CentroidIndex", "Config", "ConfigError",
    "DEFAULT_CONTEXT", "DEFAULT_FREQUENCIES", "EngineError", "EnrichedTrip",
    "FrequencyParams", "Grid", "GridError", "GridSpec", "HydronoiseError",
    "HydrophoneStation", "IngestError", "NoiseField", "PortArea", "Projection",
    "SoundContext", "TemporalValue", "Trip", "VesselProfile", "area_summary",
    "attach_aspects", "bivariate_classify", "brute_force_field", "build_grid",
    "cell_stats", "classify_activity", "compute_noise_field", "compute_sl0",
    "enrich_trips", "field_export_csv", "field_load", "field_store",
    "filter_trips", "format_instant", "haversine_m", "idw_ambient", "l90",
    "load_bathymetry", "load_config", "load_ports", "load_stations",
    "load_trips", "max_delta_db", "parse_ais", "parse_instant",
    "parse_registry", "projection_for_epsg", "propagation_radius",
    "received_level", "reconstruct_trips", "save_trips", "source_level",
    "split_trips", "sum_levels", "synchronize", "transmission_loss",
    "__version__",
]
