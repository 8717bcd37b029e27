"""Exception hierarchy shared by every decoding stage."""


class GzparError(Exception):
    """Base class for all errors raised by gzpar."""


class FormatError(GzparError):
    """The input is not a well-formed gzip member or DEFLATE stream."""

    def __init__(self, message, bit_position=None):
        if bit_position is not None:
            message = f"{message} (at bit {bit_position})"
        super().__init__(message)
        self.bit_position = bit_position


class BadMagic(FormatError):
    pass


class UnsupportedMethod(FormatError):
    pass


class Truncated(FormatError):
    pass


class InvalidBtype(FormatError):
    pass


class InvalidCodeDescription(FormatError):
    pass


class StoredLenMismatch(FormatError):
    pass


class BadSymbol(FormatError):
    pass


class OffsetTooFar(FormatError):
    pass


class NonAsciiData(FormatError):
    pass


class BlockSizeOutOfRange(FormatError):
    pass


class MultiMember(FormatError):
    """A second gzip member follows the first one; only single-member files are handled."""

    def __init__(self, member_offset):
        super().__init__(f"second gzip member starts at byte {member_offset}; "
                         "multi-member files are not supported")
        self.member_offset = member_offset


class CrcMismatch(GzparError):
    def __init__(self, expected, actual):
        super().__init__(f"CRC32 mismatch: trailer says {expected:#010x}, data gives {actual:#010x}")
        self.expected = expected
        self.actual = actual


class NoSyncPoint(GzparError):
    """No block start could be confirmed after the requested position."""


class ChunkDecodeError(GzparError):
    """Decoding one chunk of a parallel plan failed."""

    def __init__(self, index, cause):
        super().__init__(f"chunk {index}: {cause}")
        self.index = index
        self.cause = cause


class NoResolvedBlock(GzparError):
    pass


class LengthMismatch(GzparError):
    pass
