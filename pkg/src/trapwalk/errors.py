"""Exception hierarchy shared by all trapwalk modules."""


class TrapwalkError(Exception):
    """Base class for all library errors."""


class ConfigError(TrapwalkError):
    """Invalid user input (bad distribution string, bad CLI configuration)."""


class ParseError(ConfigError):
    def __init__(self, message, position=None):
        self.position = position
        if position is not None:
            message = f"{message} (at position {position})"
        super().__init__(message)


class ValidationError(ConfigError):
    pass


class DomainError(TrapwalkError):
    """Argument outside the mathematical domain of an operation."""


class InfiniteMean(DomainError):
    """The operation needs E(T) < infinity."""


class ZeroEscape(DomainError):
    """p(0) = 0, so the escape-level constant is undefined."""


class HorizonTooLarge(DomainError):
    pass


class WindowError(DomainError):
    pass


class FitDiverged(TrapwalkError):
    pass
