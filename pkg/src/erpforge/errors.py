"""Exception hierarchy shared by all erpforge modules."""


class ErpError(Exception):
    """Base class for data errors raised by erpforge."""


class SizeError(ErpError, ValueError):
    """Too few (or too many) trials, samples or items for an operation."""


class WindowError(ErpError, ValueError):
    """A time window does not fit the time axis or is too short."""


class ChannelError(ErpError, KeyError):
    """Requested channel name is not present."""

    def __str__(self):
        return str(self.args[0]) if self.args else ""


class ShapeError(ErpError, ValueError):
    """Array shapes, channel sets or time axes disagree."""


class DomainError(ErpError, ValueError):
    """Argument outside its mathematical domain (e.g. sigma <= 0)."""


class DegenerateError(ErpError, ValueError):
    """Statistic undefined because of zero variance, zero energy or zero area."""


class DegenerateWeightsError(DegenerateError):
    """All robust weights were clipped to zero."""


class ConfigError(ErpError, ValueError):
    """Invalid configuration value."""


class TemplateLookupError(ErpError, LookupError):
    """No library entry for the requested task."""


class FormatError(ErpError, ValueError):
    """Malformed or truncated input file."""
