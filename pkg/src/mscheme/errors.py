"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the operation."""


class ConfigurationError(ValueError):
    """A scheme, laser set, or run configuration is inconsistent."""


class IntegrationError(RuntimeError):
    """The time integrator failed to reach the requested tolerance.

    The last accepted state and its time are kept so callers can inspect
    or resume from them.
    """

    def __init__(self, message, last_time=None, last_state=None):
        super().__init__(message)
        self.last_time = last_time
        self.last_state = last_state
