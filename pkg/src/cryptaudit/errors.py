"""Exception hierarchy shared by every module.

The CLI maps these onto process exit codes: usage and configuration
problems exit with 2, numeric failures with 3.
"""


class AuditError(Exception):
    """Base class for all toolkit errors."""


class UsageError(AuditError, ValueError):
    """Bad arguments: wrong widths, empty inputs, unknown names."""


class ConfigurationError(AuditError):
    """A configuration cannot be satisfied (dimension mismatch, exhausted search)."""


class NumericFailure(AuditError, ArithmeticError):
    """A NaN or infinity appeared in parameters, activations or losses."""

    def __init__(self, message, layer=None, epoch=None, batch=None):
        super().__init__(message)
        self.layer = layer
        self.epoch = epoch
        self.batch = batch


class EncryptionFailure(AuditError):
    """A scheme raised while encrypting one sample of a dataset."""

    def __init__(self, message, sample_index=None):
        super().__init__(message)
        self.sample_index = sample_index


class FormatError(AuditError):
    """A serialized file has the wrong magic, version, or is truncated."""
