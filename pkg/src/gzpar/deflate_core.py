"""gzip container parsing and sequential DEFLATE decompression."""

from __future__ import annotations

import os
import struct
import warnings
import zlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _inflate as K
from .errors import (BadMagic, BadSymbol, BlockSizeOutOfRange, CrcMismatch, FormatError,
                     InvalidBtype, InvalidCodeDescription, MultiMember, NonAsciiData,
                     OffsetTooFar, StoredLenMismatch, Truncated, UnsupportedMethod)

WINDOW = K.WINDOW

FTEXT, FHCRC, FEXTRA, FNAME, FCOMMENT = 1, 2, 4, 8, 16

_STATUS_ERRORS = {
    K.TRUNCATED: (Truncated, "unexpected end of compressed data"),
    K.INVALID_BTYPE: (InvalidBtype, "invalid block type 3"),
    K.BAD_CODE: (InvalidCodeDescription, "invalid Huffman code description"),
    K.STORED_LEN: (StoredLenMismatch, "stored block LEN does not match NLEN"),
    K.BAD_SYMBOL: (BadSymbol, "invalid literal/length or distance symbol"),
    K.OFFSET_TOO_FAR: (OffsetTooFar, "match offset reaches before the available history"),
    K.NON_ASCII: (NonAsciiData, "decoded byte outside the allowed set"),
    K.BLOCK_TOO_LARGE: (BlockSizeOutOfRange, "block larger than the allowed maximum"),
    K.BLOCK_TOO_SMALL: (BlockSizeOutOfRange, "block smaller than the allowed minimum"),
    K.FINAL_BLOCK: (FormatError, "block is the final block"),
}


def status_error(status, bit_position=None):
    cls, msg = _STATUS_ERRORS.get(status, (FormatError, f"decoder status {status}"))
    return cls(msg, bit_position)


class BitBuffer:
    """Compressed bytes held in a zero-padded array the kernels can over-read."""

    def __init__(self, source):
        if isinstance(source, BitBuffer):
            self.data, self.nbytes = source.data, source.nbytes
        elif isinstance(source, (str, os.PathLike)):
            size = os.path.getsize(source)
            self.data = np.zeros(size + K.INPUT_PADDING, dtype=np.uint8)
            with open(source, "rb") as fh:
                got = fh.readinto(memoryview(self.data)[:size])
            if got != size:
                raise OSError(f"short read on {source}")
            self.nbytes = size
        else:
            raw = np.frombuffer(source, dtype=np.uint8) if not isinstance(source, np.ndarray) \
                else source.astype(np.uint8, copy=False)
            self.data = np.zeros(raw.size + K.INPUT_PADDING, dtype=np.uint8)
            self.data[:raw.size] = raw
            self.nbytes = int(raw.size)

    @property
    def nbits(self):
        return 8 * self.nbytes

    def __len__(self):
        return self.nbytes

    def bytes(self, start=0, stop=None):
        stop = self.nbytes if stop is None else min(stop, self.nbytes)
        return self.data[start:stop].tobytes()


def as_buffer(source) -> BitBuffer:
    return source if isinstance(source, BitBuffer) else BitBuffer(source)


@dataclass(frozen=True)
class GzipHeader:
    compression_method: int
    flags: int
    mtime: int
    xfl: int
    os: int
    deflate_start: int
    name: Optional[bytes] = None
    comment: Optional[bytes] = None
    extra: Optional[bytes] = None


@dataclass(frozen=True)
class GzipTrailer:
    crc32: int
    isize: int


def parse_gzip_header(data) -> GzipHeader:
    """Parse an RFC 1952 member header; optional fields are skipped."""
    buf = data.bytes(0, 65536 + 1024) if isinstance(data, BitBuffer) else bytes(data[:65536 + 1024])
    if len(buf) < 10:
        raise Truncated("gzip header shorter than 10 bytes")
    if buf[0] != 0x1F or buf[1] != 0x8B:
        raise BadMagic(f"not a gzip file (magic {buf[0]:02x} {buf[1]:02x})")
    cm, flg, mtime, xfl, osid = struct.unpack_from("<BBIBB", buf, 2)
    if cm != 8:
        raise UnsupportedMethod(f"compression method {cm} is not DEFLATE")
    pos = 10
    extra = name = comment = None
    if flg & FEXTRA:
        if pos + 2 > len(buf):
            raise Truncated("truncated FEXTRA length")
        (xlen,) = struct.unpack_from("<H", buf, pos)
        pos += 2
        extra = buf[pos:pos + xlen]
        pos += xlen
    for flag in (FNAME, FCOMMENT):
        if flg & flag:
            end = buf.find(b"\0", pos)
            if end < 0:
                raise Truncated("unterminated FNAME/FCOMMENT field")
            if flag == FNAME:
                name = buf[pos:end]
            else:
                comment = buf[pos:end]
            pos = end + 1
    if flg & FHCRC:
        pos += 2
    if pos > len(buf):
        raise Truncated("gzip header runs past end of data")
    return GzipHeader(cm, flg, mtime, xfl, osid, pos, name, comment, extra)


@dataclass(frozen=True)
class BitCursor:
    byte_offset: int
    bit_offset: int = 0

    @classmethod
    def at(cls, bit):
        return cls(bit >> 3, bit & 7)

    @property
    def absolute(self):
        return 8 * self.byte_offset + self.bit_offset


@dataclass(frozen=True)
class Token:
    """One parse phrase: a literal byte, or a back-reference ``(offset, length)``."""
    literal: Optional[int] = None
    offset: int = 0
    length: int = 0

    def __post_init__(self):
        if self.literal is None:
            if not 1 <= self.offset <= WINDOW:
                raise ValueError(f"match offset {self.offset} outside [1, {WINDOW}]")
            if not 3 <= self.length <= 258:
                raise ValueError(f"match length {self.length} outside [3, 258]")
        elif not 0 <= self.literal <= 255:
            raise ValueError(f"literal {self.literal} is not a byte")

    @classmethod
    def lit(cls, byte):
        return cls(literal=byte)

    @classmethod
    def match(cls, offset, length):
        return cls(offset=offset, length=length)

    @property
    def is_literal(self):
        return self.literal is not None

    def __repr__(self):
        if self.is_literal:
            return f"lit({self.literal!r})"
        return f"match({self.offset}, {self.length})"


class Workspace:
    """Scratch tables for one decoding task; never share across threads."""

    _fixed = None

    def __init__(self):
        self.lens = np.zeros(19 + 286 + 30, dtype=np.int64)
        self.littab = np.zeros(K.TABLE_SIZE, dtype=np.int32)
        self.disttab = np.zeros(K.TABLE_SIZE, dtype=np.int32)
        self.cltab = np.zeros(128, dtype=np.int32)
        self.counts = np.zeros(32, dtype=np.int64)
        self.fixed_lit, self.fixed_dist = self.fixed_tables()

    @classmethod
    def fixed_tables(cls):
        if cls._fixed is None:
            counts = np.zeros(32, dtype=np.int64)
            lit = np.zeros(512, dtype=np.int32)
            dist = np.zeros(32, dtype=np.int32)
            K.build_table(K.fixed_lit_lengths(), 288, lit, counts, False)
            K.build_table(K.fixed_dist_lengths(), 32, dist, counts, False)
            cls._fixed = (lit, dist)
        return cls._fixed

    def tables(self):
        return (self.lens, self.littab, self.disttab, self.cltab, self.counts,
                self.fixed_lit, self.fixed_dist)


BTYPE_NAMES = {0: "Stored", 1: "FixedHuffman", 2: "DynamicHuffman"}


@dataclass
class BlockHeader:
    bfinal: bool
    btype: int
    header_bits: int
    stored_len: Optional[int] = None
    lit_len_lengths: Optional[np.ndarray] = None
    dist_lengths: Optional[np.ndarray] = None
    # decode-ready tables (private to this header)
    _littab: Optional[np.ndarray] = field(default=None, repr=False)
    _disttab: Optional[np.ndarray] = field(default=None, repr=False)
    _litmax: int = field(default=0, repr=False)
    _distmax: int = field(default=0, repr=False)

    @property
    def btype_name(self):
        return BTYPE_NAMES[self.btype]


def read_block_header(cursor: BitCursor, bits) -> tuple[BlockHeader, BitCursor]:
    """Parse the block header at ``cursor``; returns the header and the cursor after it."""
    buf = as_buffer(bits)
    ws = Workspace()
    start = cursor.absolute
    status, end, bfinal, btype, a, b = K.read_header(buf.data, buf.nbits, start, *ws.tables())
    if status != K.OK:
        raise status_error(status, start)
    header = BlockHeader(bool(bfinal), int(btype), int(end - start))
    if btype == 0:
        header.stored_len = int(a)
    else:
        if btype == 1:
            header.lit_len_lengths = K.fixed_lit_lengths()
            header.dist_lengths = K.fixed_dist_lengths()
        else:
            v = buf.data
            hlit = _read_bits(v, start + 3, 5) + 257
            hdist = _read_bits(v, start + 8, 5) + 1
            header.lit_len_lengths = ws.lens[19:19 + hlit].copy()
            header.dist_lengths = ws.lens[19 + hlit:19 + hlit + hdist].copy()
        header._littab = ws.littab[:1 << a].copy()
        header._disttab = ws.disttab[:max(1, 1 << b)].copy()
        header._litmax, header._distmax = int(a), int(b)
    return header, BitCursor.at(int(end))


def _read_bits(data, bitpos, n):
    return int(K._peek(data, bitpos)) & ((1 << n) - 1)


class Context:
    """The 32 KiB circular history window of a decoder."""

    def __init__(self, initial=b""):
        self.buffer = np.zeros(WINDOW, dtype=np.uint8)
        self.pos = 0
        self.filled = 0
        if len(initial):
            self.append(initial)

    def append(self, data):
        arr = np.frombuffer(bytes(data), dtype=np.uint8) if not isinstance(data, np.ndarray) else data
        if arr.size >= WINDOW:
            self.buffer[:] = arr[-WINDOW:]
            self.pos = 0
        else:
            first = min(arr.size, WINDOW - self.pos)
            self.buffer[self.pos:self.pos + first] = arr[:first]
            rest = arr.size - first
            self.buffer[:rest] = arr[first:]
            self.pos = (self.pos + arr.size) % WINDOW
        self.filled = min(WINDOW, self.filled + arr.size)

    def back(self, d):
        """The ``d``-th most recently written byte (``d >= 1``)."""
        if not 1 <= d <= self.filled:
            raise OffsetTooFar(f"offset {d} exceeds {self.filled} bytes of history")
        return int(self.buffer[(self.pos - d) % WINDOW])

    def history(self) -> np.ndarray:
        """The available history, oldest byte first."""
        order = np.roll(self.buffer, -self.pos)
        return order[WINDOW - self.filled:].copy()

    def __len__(self):
        return self.filled


@dataclass(frozen=True)
class BlockStats:
    start_bit: int
    end_bit: int
    out_start: int
    out_end: int
    btype: int
    bfinal: bool
    literals: int
    matches: int
    sum_offsets: int
    sum_lengths: int

    @property
    def size(self):
        return self.out_end - self.out_start

    @property
    def literal_fraction(self):
        tokens = self.literals + self.matches
        return self.literals / tokens if tokens else 1.0

    @classmethod
    def from_row(cls, row, out_shift=0):
        return cls(int(row[K.S_START_BIT]), int(row[K.S_END_BIT]),
                   int(row[K.S_OUT_START]) - out_shift, int(row[K.S_OUT_END]) - out_shift,
                   int(row[K.S_BTYPE]), bool(row[K.S_BFINAL]), int(row[K.S_LITERALS]),
                   int(row[K.S_MATCHES]), int(row[K.S_SUM_OFFSETS]), int(row[K.S_SUM_LENGTHS]))


def decode_block(cursor: BitCursor, bits, header: BlockHeader, ctx: Context, sink=None):
    """Decode the body of one block whose header was just read.

    ``ctx`` supplies (and receives) history; decoded bytes are also appended to
    ``sink`` (any object with ``write`` or ``extend``).  Returns
    ``(BlockStats, cursor_after_block)``; output offsets in the stats are
    relative to the block start.
    """
    buf = as_buffer(bits)
    hist = ctx.history()
    start = cursor.absolute
    if header.btype == 0:
        n = header.stored_len
        out = np.zeros(hist.size + n, dtype=np.uint8)
        out[:hist.size] = hist
        status, end, outpos = K.decode_stored(buf.data, buf.nbits, start, n, out, hist.size,
                                              False, np.ones(256, np.bool_))
        nlit, nmatch, soff, slen = n, 0, 0, 0
    else:
        out = np.zeros(hist.size + 65536, dtype=np.uint8)
        out[:hist.size] = hist
        while True:
            status, end, outpos, nlit, nmatch, soff, slen = K.decode_body(
                buf.data, buf.nbits, start, out, hist.size, 0, header._littab, header._litmax,
                header._disttab, header._distmax, False, np.ones(256, np.bool_), out.size)
            if status != K.NEED_SPACE:
                break
            grown = np.zeros(2 * out.size, dtype=np.uint8)
            grown[:hist.size] = hist
            out = grown
    if status != K.OK:
        raise status_error(status, start)
    produced = out[hist.size:outpos]
    ctx.append(produced)
    if sink is not None:
        (sink.write if hasattr(sink, "write") else sink.extend)(produced.tobytes())
    stats = BlockStats(start - header.header_bits, int(end), 0, int(produced.size),
                       header.btype, header.bfinal, int(nlit), int(nmatch), int(soff), int(slen))
    return stats, BitCursor.at(int(end))


ASCII_ALL = np.ones(256, dtype=np.bool_)


def run_blocks(buf: BitBuffer, bitpos, out, outpos, floor=0, *, stop_bit=None, stop_out=None,
               max_blocks=None, flags=0, ascii_tab=ASCII_ALL, min_block=0, max_block=1 << 62,
               ws=None):
    """Drive :func:`_inflate.inflate_blocks`, growing buffers as needed.

    Returns ``(out, outpos, bitpos, stats_matrix)``; ``out`` may be a new,
    larger array.  Decode errors are raised as exceptions.
    """
    ws = ws or Workspace()
    big = 1 << 62
    stop_bit = big if stop_bit is None else stop_bit
    stop_out = big if stop_out is None else stop_out
    remaining = big if max_blocks is None else max_blocks
    stats = np.zeros((256, K.N_STAT_COLS), dtype=np.int64)
    rows = []
    while True:
        status, bitpos, outpos, nb = K.inflate_blocks(
            buf.data, buf.nbits, bitpos, out, outpos, floor, stop_bit, stop_out, remaining,
            flags, ascii_tab, min_block, max_block, stats, *ws.tables())
        bitpos, outpos, nb = int(bitpos), int(outpos), int(nb)
        if nb:
            rows.append(stats[:nb].copy())
            remaining -= nb
            if status == K.OK:
                break
        if status == K.NEED_STATS:
            continue
        if status == K.NEED_SPACE:
            grown = np.zeros(max(2 * out.size, out.size + (1 << 20)), dtype=out.dtype)
            grown[:outpos] = out[:outpos]
            out = grown
            continue
        if status != K.OK:
            raise status_error(status, bitpos)
        break
    matrix = np.concatenate(rows) if rows else np.zeros((0, K.N_STAT_COLS), dtype=np.int64)
    return out, outpos, bitpos, matrix


@dataclass
class MemberDecode:
    """Everything learned from one sequential decode of a gzip member."""
    header: GzipHeader
    trailer: GzipTrailer
    output: np.ndarray
    blocks: list
    end_bit: int

    @property
    def boundaries(self):
        """Start bit of every block, in stream order."""
        return [b.start_bit for b in self.blocks]


def read_trailer(buf: BitBuffer, end_bit) -> tuple[GzipTrailer, int]:
    pos = (end_bit + 7) >> 3
    if pos + 8 > buf.nbytes:
        raise Truncated("gzip trailer missing", end_bit)
    crc, isize = struct.unpack("<II", buf.bytes(pos, pos + 8))
    return GzipTrailer(crc, isize), pos + 8


def check_after_member(buf: BitBuffer, member_end):
    rest = buf.nbytes - member_end
    if rest <= 0:
        return
    tail = buf.bytes(member_end, member_end + 2)
    if tail == b"\x1f\x8b":
        raise MultiMember(member_end)
    if any(buf.data[member_end:buf.nbytes]):
        warnings.warn(f"{rest} bytes of trailing garbage after gzip member ignored")


def isize_hint(buf: BitBuffer):
    if buf.nbytes < 18:
        return 0
    (isize,) = struct.unpack("<I", buf.bytes(buf.nbytes - 4))
    return isize


def inflate_member(source, verify_crc=True) -> MemberDecode:
    """Decode a single-member gzip file, keeping per-block statistics."""
    buf = as_buffer(source)
    header = parse_gzip_header(buf)
    guess = max(isize_hint(buf), 4 * buf.nbytes, 1 << 16) + 1024
    out = np.zeros(guess, dtype=np.uint8)
    out, outpos, end_bit, stats = run_blocks(buf, 8 * header.deflate_start, out, 0)
    output = out[:outpos]
    trailer, member_end = read_trailer(buf, end_bit)
    check_after_member(buf, member_end)
    if verify_crc:
        check_trailer(trailer, output)
    blocks = [BlockStats.from_row(r) for r in stats]
    return MemberDecode(header, trailer, output, blocks, end_bit)


def check_trailer(trailer: GzipTrailer, output):
    crc = zlib.crc32(memoryview(output)) if len(output) else 0
    if crc != trailer.crc32:
        raise CrcMismatch(trailer.crc32, crc)
    if len(output) & 0xFFFFFFFF != trailer.isize:
        warnings.warn(f"ISIZE mismatch: trailer says {trailer.isize}, "
                      f"decoded {len(output)} bytes")


def decompress_sequential(source) -> bytes:
    """Decompress a single-member gzip file and verify its trailer."""
    return inflate_member(source).output.tobytes()


@dataclass
class TokenStats:
    mean_offset: Optional[float]
    mean_length: Optional[float]
    blocks: list

    @property
    def o_a(self):
        return self.mean_offset

    @property
    def l_a(self):
        return self.mean_length

    @property
    def literal_fractions(self):
        return [b.literal_fraction for b in self.blocks]


def token_stats_from_blocks(blocks) -> TokenStats:
    nmatch = sum(b.matches for b in blocks)
    if nmatch == 0:
        return TokenStats(None, None, list(blocks))
    return TokenStats(sum(b.sum_offsets for b in blocks) / nmatch,
                      sum(b.sum_lengths for b in blocks) / nmatch, list(blocks))


def measure_token_stats(source) -> TokenStats:
    """Mean match offset/length over the whole stream plus per-block counts."""
    return token_stats_from_blocks(inflate_member(source).blocks)
