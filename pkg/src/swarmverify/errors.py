"""Exception hierarchy shared by all modules."""


class SwarmVerifyError(Exception):
    pass


class InvalidInputError(SwarmVerifyError, ValueError):
    pass


class ModelError(SwarmVerifyError):
    """Derivative bounds came back non-finite."""


class StepCollapseError(SwarmVerifyError):
    """Face lifting could not validate any substep above the minimum."""


class MalformedMessageError(SwarmVerifyError, ValueError):
    pass


class StaleMessageError(SwarmVerifyError):
    """A received reach set no longer says anything about the future."""


class NoVerdictError(SwarmVerifyError):
    pass


class IncompleteSetError(NoVerdictError):
    pass


class WindowExpiredError(NoVerdictError):
    pass


class CapacityZeroError(SwarmVerifyError):
    pass


class ConfigError(SwarmVerifyError):
    pass
