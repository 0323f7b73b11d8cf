"""Exception hierarchy shared across the engine."""


class TrainsimError(Exception):
    """Base class for all engine errors."""


class InvalidInputError(TrainsimError):
    """Caller-supplied value violates a precondition."""


class DegenerateInterpolationError(TrainsimError):
    """Blended rotation collapsed below the renormalizable threshold."""


class ProtocolError(TrainsimError):
    """Wire bytes carry a bad magic or unsupported version."""


class FramingError(TrainsimError):
    """Wire bytes are truncated or internally inconsistent."""


class PacketTooLargeError(TrainsimError):
    """More records than the packet header can describe."""


class SchemaError(TrainsimError):
    """Document or payload does not match its declared shape."""


class ValidationError(TrainsimError):
    """Document is well-formed but semantically invalid (e.g. a cycle)."""


class OrderingError(TrainsimError):
    """Event arrived for a node or timestamp that cannot accept it."""


class DependencyError(TrainsimError):
    """Undo requested for a node with completed successors."""


class ConfigurationError(TrainsimError):
    """Missing or inconsistent configuration."""


class UnsupportedTopologyError(TrainsimError):
    """Mesh region is non-manifold where the operation needs a manifold."""


class InvalidTearError(TrainsimError):
    """Tear point too far from the surface to project."""


class IntegrityError(TrainsimError):
    """Recorded data failed its checksum or structural check."""


class RangeError(TrainsimError):
    """Index or timestamp outside the valid span."""


class NoDataError(TrainsimError):
    """Query against an empty buffer."""


class InputError(TrainsimError):
    """Required input file missing or unreadable."""
