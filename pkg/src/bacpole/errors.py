"""Exceptions shared across the package."""


class ConfigError(Exception):
    """Bad configuration value or incompatible shapes. CLI exit code 1."""


class NumericFault(Exception):
    """Non-finite value encountered during training. CLI exit code 2."""
