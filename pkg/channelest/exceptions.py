"""Error hierarchy shared by the simulator library, the commands and the API."""


class ChannelEstimationError(Exception):
    """Base class for every error raised by the channelest app."""


class InvalidArgumentError(ChannelEstimationError, ValueError):
    pass


class CapacityExceededError(ChannelEstimationError):
    """Raised when an allocation cannot be placed in the free pilot tones."""

    def __init__(self, message, user=None):
        super().__init__(message)
        self.user = user


class FeasibilityError(ChannelEstimationError):
    """A training design violates one of the estimator's rank conditions."""

    def __init__(self, message, constraint=None, user=None, condition=None):
        super().__init__(message)
        self.constraint = constraint
        self.user = user
        self.condition = condition


class RankDeficientError(ChannelEstimationError):
    def __init__(self, message, condition):
        super().__init__(message)
        self.condition = condition


class InstanceTooLargeError(ChannelEstimationError):
    def __init__(self, message, count):
        super().__init__(message)
        self.count = count


class ConfigError(ChannelEstimationError):
    """Validation failure of an experiment spec; ``errors`` maps field -> messages."""

    def __init__(self, errors):
        self.errors = {field: list(messages) for field, messages in errors.items()}
        lines = [f"{field}: {' '.join(str(m) for m in messages)}" for field, messages in self.errors.items()]
        super().__init__("; ".join(lines))


class OutputError(ChannelEstimationError):
    def __init__(self, path, reason):
        super().__init__(f"could not write {path}: {reason}")
        self.path = path
