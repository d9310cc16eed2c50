"""Exception types shared across the package."""


class SecularTermError(ValueError):
    """A slow (secular) term reached :func:`integrate_phase`; average first."""


class NearResonanceError(ValueError):
    """Frequencies sit in the ambiguous zone between the two branches."""


class StepRejected(RuntimeError):
    """An integrator step drifted the trace beyond the allowed bound."""


class NoConvergence(RuntimeError):
    """Steady-state search exhausted its step budget."""


class RecurrenceHorizonExceeded(ValueError):
    """Requested run is longer than the discretized bath can mimic a reservoir."""


class FitIllConditioned(RuntimeError):
    """Decay fit could not determine its parameters."""
