"""Exception types shared across the package."""


class ConfigError(Exception):
    """Bad configuration, malformed input file, or invalid user arguments."""


class SamplerError(RuntimeError):
    """Numeric failure inside a chain (non-finite posterior, etc.)."""
