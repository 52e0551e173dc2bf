"""Exception types shared across the package."""


class DrivewiseError(Exception):
    """Base class for all package-specific errors."""


class ParseError(DrivewiseError):
    """A network / demand / config document could not be parsed."""


class TopologyError(DrivewiseError):
    """A graph document references missing junctions or duplicates an edge."""


class UnknownEdge(DrivewiseError):
    """An edge id does not exist in the network or state."""


class MissingDynamics(DrivewiseError):
    """A network state lacks a dynamics row for some edge."""


class DisconnectedRoute(DrivewiseError):
    """Consecutive route edges do not share a junction."""


class NoPath(DrivewiseError):
    """Destination unreachable from source."""


class NoLight(DrivewiseError):
    """Junction queried for signal timing has no traffic light."""


class EmptyTraversal(DrivewiseError):
    """Behavior classification was asked to label zero samples."""


class NoNormalBehavior(DrivewiseError):
    """Preference extraction found no normal-labeled traversal."""


class EmptyRoute(DrivewiseError):
    """An operation requires a route with at least one edge."""


class NonPositiveTime(DrivewiseError):
    """Ideal or actual travel time must be strictly positive."""


class ShapeMismatch(DrivewiseError):
    """Parameter / gradient / feature shapes are inconsistent."""


class StaleCache(DrivewiseError):
    """A backward pass was given a cache from different parameters."""


class EmptyCandidates(DrivewiseError):
    """Action selection received an empty candidate set."""


class InsufficientBuffer(DrivewiseError):
    """Replay buffer holds fewer transitions than the batch size."""


class ConfigError(DrivewiseError):
    """Invalid experiment configuration."""


class IncompatibleCheckpoint(DrivewiseError):
    """Checkpoint does not match the expected format or model shape."""


class EmptyRegistry(DrivewiseError):
    """Model registry holds no entries."""


class TripNotActive(DrivewiseError):
    """Re-planning was requested for a finished or cancelled trip."""
