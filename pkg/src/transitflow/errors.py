"""Exception types raised across the package."""


class TransitFlowError(Exception):
    """Base class for all package errors."""


class FrameRangeError(TransitFlowError):
    """A point lies outside the validity radius of a local frame."""


class SourceReadError(TransitFlowError):
    """Transient failure while reading from a stream source."""


class StoreWriteError(TransitFlowError):
    """The tuple store could not persist an append."""


class GtfsLoadError(TransitFlowError):
    """A required GTFS file is missing or unreadable."""


class GtfsValidationError(TransitFlowError):
    """GTFS references do not resolve (dangling trip/station ids)."""

    def __init__(self, message: str, offending_ids: list[str] | None = None):
        self.offending_ids = offending_ids or []
        if self.offending_ids:
            message = f"{message}: {', '.join(self.offending_ids)}"
        super().__init__(message)


class GeometryError(TransitFlowError):
    """Route or road geometry is degenerate or missing required tags."""


class UnknownRouteError(TransitFlowError):
    """A trip references a route absent from the reference data."""


class ConfigError(TransitFlowError):
    """A configuration file or defect profile is invalid or infeasible."""


class RunArtifactError(TransitFlowError):
    """A pipeline run directory is missing required artifacts."""
