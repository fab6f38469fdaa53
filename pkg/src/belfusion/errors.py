"""Exception hierarchy shared across the toolkit."""


class FusionError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(FusionError):
    """A value violates a structural constraint (bad mass, bad frame, bad config)."""


class ParseError(FusionError):
    """Malformed textual input: element expressions, BBA files, rule or policy specs."""
