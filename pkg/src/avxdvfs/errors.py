"""Exception types shared across the package."""


class DomainError(ValueError):
    """A numeric argument lies outside the domain of an operation."""


class ConfigError(ValueError):
    """A frequency/cost table or experiment configuration is invalid."""


class TraceParseError(ValueError):
    """A trace file line could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"{message}, line {line}"
        super().__init__(message)


class ContractViolation(RuntimeError):
    """A policy asked the engine for something the hardware model forbids."""
