"""Exception hierarchy shared by all modules."""


class GeoSandwichError(Exception):
    """Base class for every error raised by this package."""


class GeometryError(GeoSandwichError):
    pass


class InvalidPoint(GeometryError, ValueError):
    pass


class InvalidTangent(GeometryError, ValueError):
    pass


class NonUniqueGeodesic(GeometryError):
    """The two points are at or beyond the injectivity radius."""


class LeftChartDomain(GeometryError):
    pass


class SpeedDriftExceeded(GeometryError):
    """Integrated geodesic lost constant speed; use more steps."""


class UnsupportedManifold(GeoSandwichError):
    pass


class UnknownCatalogId(GeoSandwichError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class IncompatibleManifold(GeoSandwichError):
    pass


class InvalidParameter(GeoSandwichError, ValueError):
    pass


class NumericallyUnstable(GeoSandwichError):
    pass


class RadiusExceedsSphere(GeoSandwichError, ValueError):
    pass


class PreconditionFailed(GeoSandwichError):
    def __init__(self, message, sample=None):
        super().__init__(message)
        self.sample = sample


class NotFiniteVolume(GeoSandwichError):
    pass


class NotClosed(GeoSandwichError):
    pass


class NoBracketFound(GeoSandwichError):
    pass


class ConfigError(GeoSandwichError):
    """Scenario file could not be parsed or validated (CLI exit code 2)."""


class UnknownCheck(ConfigError):
    pass


class ConfigParse(ConfigError):
    """Scenario text is not valid TOML; the message carries the line."""
