"""Domain errors shared across modules."""


class TTKitError(Exception):
    """Base class for all domain errors."""


class IncompatibleLetters(TTKitError):
    """Consecutive path letters do not share an endpoint."""


class EmptyLoop(TTKitError):
    """A cyclic word reduced to a trivial or elliptic element."""


class ResourceLimit(TTKitError):
    """An enumeration or event loop exceeded its configured cap."""


class ZeroLengthEdge(TTKitError):
    """Stretch requested on a zero-length edge outside a designated collapse."""


class NotStabilized(TTKitError):
    """Gate closure did not stabilize within the iteration bound."""


class TargetUnreachable(TTKitError):
    """Requested flow target lies below the candidate-computed displacement."""


class NoProgress(TTKitError):
    """Perturbation loop cycled without reaching its goal."""


class NotInvariant(TTKitError):
    """The subgraph is not invariant under the map (up to homotopy)."""


class DeltaTooLarge(TTKitError):
    """Fold amount exceeds the foldable initial-segment length."""


class IllegalFoldAtNonFree(TTKitError):
    """Fold requested at a non-free vertex or through a marker."""


class AttachmentMismatch(TTKitError):
    """Regeneration attachment data does not match the collapsed vertex."""


class NumericalPolicyViolation(TTKitError):
    """Operation requires the exact backend."""


class DegenerateCandidate(TTKitError):
    """A candidate loop is collapsed at both endpoints of a segment."""


class BudgetExhausted(TTKitError):
    """A search loop ran out of its step budget."""
