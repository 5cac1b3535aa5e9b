"""Exception types shared by all modules."""


class EndwalkError(Exception):
    """Base class for library errors."""


class TemplateError(EndwalkError):
    """A template file or object is malformed."""


class ResourceLimit(EndwalkError):
    """A configured size cap was exceeded."""


class HorizonExceeded(EndwalkError):
    """A requested length lies beyond the exact horizon of a patch."""


class PreconditionFailed(EndwalkError):
    """An operation was called outside its domain."""


class MalformedArrangement(EndwalkError):
    """An arrangement violates one of the compatibility or arrangement conditions."""


class InvariantViolation(EndwalkError):
    """A structural invariant failed; this points at a bug or a bad template."""


class MissingDependency(EndwalkError):
    """A numeric value needed for a Jacobian is divergent or missing."""


class BracketFailure(EndwalkError):
    """No upper bracket for the critical point was found below the ceiling."""


class Inconclusive(EndwalkError):
    """Not enough data to reach a conclusion at the requested confidence."""
