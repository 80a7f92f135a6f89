"""Exception types raised across the pipeline."""


class RootsegError(Exception):
    """Base class for all errors raised by rootseg."""


class DegenerateRange(RootsegError, ValueError):
    pass


class InvalidStructuringElement(RootsegError, ValueError):
    pass


class OutOfBounds(RootsegError, ValueError):
    pass


class UnsupportedFormat(RootsegError, ValueError):
    pass


class IoFailure(RootsegError, OSError):
    pass


class InvalidLength(RootsegError, ValueError):
    pass


class EmptyImage(RootsegError, ValueError):
    pass


class ExtentMismatch(RootsegError, ValueError):
    pass


class OracleTooLarge(RootsegError, ValueError):
    pass


class EmptySkeleton(RootsegError, ValueError):
    pass


class MissingPair(RootsegError, FileNotFoundError):
    pass


class InvalidParams(RootsegError, ValueError):
    pass
