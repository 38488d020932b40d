"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Bad configuration or arguments (CLI exit code 2)."""


class ProcessingError(RuntimeError):
    """A pipeline stage failed at run time (CLI exit code 3)."""
