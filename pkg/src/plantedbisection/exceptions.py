"""Exception hierarchy shared by all modules."""


class PlantedBisectionError(Exception):
    """Base class for errors raised by this package."""


class InvalidAssignmentError(PlantedBisectionError, ValueError):
    """A bit vector is not a balanced two-colouring of an even vertex set."""


class DimensionError(PlantedBisectionError, ValueError):
    """Objects built for different ``n`` were combined."""


class EnumerationTooLargeError(PlantedBisectionError, ValueError):
    """Full enumeration of the parameter space would exceed the configured cap."""

    def __init__(self, n, size, cap):
        self.n = n
        self.size = size
        self.cap = cap
        super().__init__(
            f"enumerating n={n} needs {size} assignments, above the cap of {cap}"
        )


class UndefinedPosteriorError(PlantedBisectionError, ValueError):
    """Every assignment gives the observed graph probability zero."""


class ConfigError(PlantedBisectionError, ValueError):
    """Invalid chain or experiment configuration."""


class ParameterError(PlantedBisectionError, ValueError):
    """A bound evaluator was called outside its parameter domain."""


class ParseError(PlantedBisectionError, ValueError):
    """Malformed input file. ``lineno`` is 1-based."""

    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}: "
        if lineno is not None:
            where += f"line {lineno}: "
        super().__init__(where + message)
