class InvalidInputError(ValueError):
    """Raised when an operation receives data outside its contract."""


class ConfigError(ValueError):
    """Invalid run configuration (maps to CLI exit code 2)."""


class GenerationError(RuntimeError):
    """A synthetic image specification cannot be realised."""
