"""Exception hierarchy for qnuel."""


class NuelError(ValueError):
    """Base class for all errors raised by qnuel."""


class InvalidPlayerCount(NuelError):
    pass


class InvalidPlayer(NuelError):
    pass


class SelfTargetError(NuelError):
    pass


class InvalidProbability(NuelError):
    pass


class ShapeError(NuelError):
    pass


class ProfileError(NuelError):
    pass


class WeightError(NuelError):
    pass


class OrderingError(NuelError):
    pass


class SizeError(NuelError):
    pass


class UnsupportedConfig(NuelError):
    pass


class ConfigError(NuelError):
    pass
