"""Error types shared by the file formats and index storage."""


class StorageError(Exception):
    """Base class for persistent-format failures."""


class FormatError(StorageError):
    """Bad magic, unsupported version, or an invalid header field."""


class TruncatedFileError(StorageError):
    """File ended before the declared payload was complete."""


class ChecksumError(StorageError):
    """CRC32 trailer does not match the file contents."""
