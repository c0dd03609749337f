"""Exception types shared across the solver stack.

Domain errors (bad inputs, impossible conditioning events, blown resource
caps) all derive from NestedDPError so the CLI can map them to exit code 1.
"""


class NestedDPError(Exception):
    """Base class for all domain-level errors raised by this package."""


class ZeroProbabilityEvent(NestedDPError):
    """A conditioning event has probability zero under the model."""


class ZeroProbabilityObservation(ZeroProbabilityEvent):
    """A belief update was driven by an observation the prior rules out."""


class DomainGap(NestedDPError):
    """A prescription was queried outside its declared domain."""


class MissingKey(NestedDPError):
    """A policy lookup hit a belief realization the solve never produced."""


class ResourceLimitExceeded(NestedDPError):
    """An enumeration would exceed the configured budget.

    The message carries the estimated count so callers can re-run with a
    larger budget (NESTED_DP_BUDGET or an explicit argument).
    """

    def __init__(self, message: str, estimate: int | None = None):
        super().__init__(message)
        self.estimate = estimate


class PerfectObsViolation(NestedDPError):
    """The perfect-observation flag was set but the observation table is not
    the identity on the agent's state space."""


class UnsupportedStructure(NestedDPError):
    """An information structure falls outside the class this package can
    propagate beliefs through (agent-1 variables inside agent-2's memory,
    or new information referencing data never held privately)."""
