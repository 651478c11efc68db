"""Exception types shared across the toolkit.

Everything derives from StegotraceError so callers (and the CLI) can treat
domain failures uniformly; a failed watermark verification is a *result*,
never an exception.
"""


class StegotraceError(Exception):
    """Base class for all domain errors raised by this package."""


class ShapeError(StegotraceError):
    """Array dimensions do not match what the operation requires."""


class CarrierTooSmall(StegotraceError):
    """Image or coefficient plane is below the minimum usable size."""


class CapacityError(StegotraceError):
    """Carrier cannot hold the requested number of payload bits."""


class EmptyRequest(StegotraceError):
    """A zero-length generation request."""


class KeyStoreError(StegotraceError):
    """Key material on disk is missing where required, or unreadable/corrupt."""


class InvalidIdentity(StegotraceError):
    """User identifier is empty or contains reserved delimiter characters."""


class DegenerateEmbedding(StegotraceError):
    """Embedding vector has (near-)zero norm and cannot be normalized."""


class EmptyBatch(StegotraceError):
    """Loss or metric requested over an empty sample list."""


class DegenerateDataset(StegotraceError):
    """Dataset lacks at least two classes (or two samples per class)."""


class IoError(StegotraceError):
    """Filesystem read/write failed for a report or artifact path."""
