"""Exception types shared across the toolkit."""


class EvtrackError(Exception):
    """Base class for all toolkit errors."""


# --- event stream parsing ---

class MissingHeader(EvtrackError):
    pass


class MalformedRecord(EvtrackError):
    pass


class CoordinateOutOfRange(EvtrackError):
    pass


class NonMonotonicTimestamp(EvtrackError):
    pass


# --- parameter validation ---

class InvalidParameter(EvtrackError):
    pass


# --- clustering ---

class EmptyCluster(EvtrackError):
    pass


# --- k-d tree ---

class DuplicateId(EvtrackError):
    pass


class EmptyTree(EvtrackError):
    pass


# --- tracking ---

class DegenerateHeading(EvtrackError):
    pass


# --- metrics ---

class FrameAlignmentError(EvtrackError):
    pass


class NoMatches(EvtrackError):
    pass


class NoHeadings(EvtrackError):
    pass


class NoGroundTruth(EvtrackError):
    pass


# --- homography ---

class DegenerateConfiguration(EvtrackError):
    pass


class PointAtInfinity(EvtrackError):
    pass


# --- simulator ---

class OverlapAtStart(EvtrackError):
    pass


class PathOutOfBounds(EvtrackError):
    pass
