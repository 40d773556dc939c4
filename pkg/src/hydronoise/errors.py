"""Exception hierarchy shared across the package."""


class HydronoiseError(Exception):
    """Base class for all pipeline errors."""


class ConfigError(HydronoiseError):
    """Bad or inconsistent configuration."""


class IngestError(HydronoiseError):
    """Unreadable or structurally invalid input data."""


class GridError(HydronoiseError):
    """Grid construction or ambient-surface failure."""


class EngineError(HydronoiseError):
    """Noise-field computation failure."""


class AnalyticsError(HydronoiseError):
    """Statistics derivation failure."""
