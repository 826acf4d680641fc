"""Exception hierarchy shared by every stage of the pipeline."""


class BusmobError(Exception):
    """Base class; the CLI maps these to exit code 1."""


class InvalidCoordinateError(BusmobError, ValueError):
    pass


class InsufficientPointsError(BusmobError, ValueError):
    pass


class DegenerateSegmentError(BusmobError, ValueError):
    pass


class ParseError(BusmobError):
    """Malformed input document. ``line`` is 1-based when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class IntegrityError(BusmobError):
    """Dangling or inconsistent references between records."""


class EmptyNetworkError(BusmobError):
    pass


class UnknownEdgeError(BusmobError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class NoCandidateError(BusmobError):
    pass


class NoOrientedCandidateError(BusmobError):
    pass


class UnmatchableRouteError(BusmobError):
    pass


class BrokenRouteError(BusmobError):
    pass


class DuplicateIdError(BusmobError):
    pass


class OrderError(BusmobError):
    pass


class GridError(BusmobError):
    pass


class PairingError(BusmobError, ValueError):
    pass


class EmptySampleError(BusmobError, ValueError):
    pass
