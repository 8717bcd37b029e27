"""Numba kernels for DEFLATE block decoding.

All kernels work on a zero-padded ``uint8`` input array and a linear output
array.  The output array is either ``uint8`` (plain bytes) or ``uint16``
(symbolic bytes: values below 256 are resolved bytes, ``256 + j`` stands for
position ``j`` of an unknown initial context).  The same code is compiled for
both element types.

Positions are absolute bit offsets into the input, LSB-first within a byte.
"""

import numpy as np
from numba import njit

WINDOW = 32768
REF_BASE = 256
INPUT_PADDING = 64

# status codes
OK = 0
NEED_SPACE = 1
NEED_STATS = 2
TRUNCATED = 3
INVALID_BTYPE = 4
BAD_CODE = 5
STORED_LEN = 6
BAD_SYMBOL = 7
OFFSET_TOO_FAR = 8
NON_ASCII = 9
BLOCK_TOO_LARGE = 10
BLOCK_TOO_SMALL = 11
FINAL_BLOCK = 12

STATUS_NAMES = {
    OK: "ok",
    NEED_SPACE: "need-space",
    NEED_STATS: "need-stats",
    TRUNCATED: "truncated",
    INVALID_BTYPE: "invalid-btype",
    BAD_CODE: "invalid-code-description",
    STORED_LEN: "stored-len-mismatch",
    BAD_SYMBOL: "bad-symbol",
    OFFSET_TOO_FAR: "offset-too-far",
    NON_ASCII: "non-ascii",
    BLOCK_TOO_LARGE: "block-too-large",
    BLOCK_TOO_SMALL: "block-too-small",
    FINAL_BLOCK: "final-block",
}

# decode flags
CHECK_ASCII = 1
CHECK_SIZE = 2
REJECT_FINAL = 4
ROLLING = 8

# columns of the per-block statistics matrix
S_START_BIT = 0
S_END_BIT = 1
S_OUT_START = 2
S_OUT_END = 3
S_BTYPE = 4
S_BFINAL = 5
S_LITERALS = 6
S_MATCHES = 7
S_SUM_OFFSETS = 8
S_SUM_LENGTHS = 9
N_STAT_COLS = 10

LEN_BASE = np.array([3, 4, 5, 6, 7, 8, 9, 10, 11, 13, 15, 17, 19, 23, 27, 31, 35,
                     43, 51, 59, 67, 83, 99, 115, 131, 163, 195, 227, 258], dtype=np.int64)
LEN_EXTRA = np.array([0, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3,
                      4, 4, 4, 4, 5, 5, 5, 5, 0], dtype=np.int64)
DIST_BASE = np.array([1, 2, 3, 4, 5, 7, 9, 13, 17, 25, 33, 49, 65, 97, 129, 193,
                      257, 385, 513, 769, 1025, 1537, 2049, 3073, 4097, 6145,
                      8193, 12289, 16385, 24577], dtype=np.int64)
DIST_EXTRA = np.array([0, 0, 0, 0, 1, 1, 2, 2, 3, 3, 4, 4, 5, 5, 6, 6, 7, 7, 8, 8,
                       9, 9, 10, 10, 11, 11, 12, 12, 13, 13], dtype=np.int64)
CL_ORDER = np.array([16, 17, 18, 0, 8, 7, 9, 6, 10, 5, 11, 4, 12, 3, 13, 2, 14, 1, 15],
                    dtype=np.int64)

MAX_CODE_BITS = 15
TABLE_SIZE = 1 << MAX_CODE_BITS


def fixed_lit_lengths():
    lengths = np.zeros(288, dtype=np.int64)
    lengths[0:144] = 8
    lengths[144:256] = 9
    lengths[256:280] = 7
    lengths[280:288] = 8
    return lengths


def fixed_dist_lengths():
    return np.full(32, 5, dtype=np.int64)


@njit(cache=True, nogil=True)
def _peek(data, bitpos):
    # at least 25 valid bits
    i = bitpos >> 3
    v = (np.int64(data[i]) | (np.int64(data[i + 1]) << 8)
         | (np.int64(data[i + 2]) << 16) | (np.int64(data[i + 3]) << 24))
    return v >> (bitpos & 7)


@njit(cache=True, nogil=True)
def build_table(lengths, n, table, counts, allow_incomplete):
    """Fill a single-level lookup table; entries are ``symbol << 4 | length``.

    Returns the table width in bits, or -1 for an over-subscribed or
    (disallowed) incomplete code.  Zero entries mark unused codes.
    """
    for i in range(32):
        counts[i] = 0
    maxlen = 0
    for s in range(n):
        ln = lengths[s]
        counts[ln] += 1
        if ln > maxlen:
            maxlen = ln
    if maxlen == 0:
        table[0] = 0
        return 0
    counts[0] = 0
    left = 1
    for ln in range(1, MAX_CODE_BITS + 1):
        left <<= 1
        left -= counts[ln]
        if left < 0:
            return -1
    if left > 0 and (not allow_incomplete or maxlen != 1):
        return -1
    size = 1 << maxlen
    for i in range(size):
        table[i] = 0
    # counts[16 + ln] holds the next canonical code of length ln
    code = 0
    for ln in range(1, MAX_CODE_BITS + 1):
        code = (code + counts[ln - 1]) << 1
        counts[16 + ln] = code
    for s in range(n):
        ln = lengths[s]
        if ln == 0:
            continue
        c = counts[16 + ln]
        counts[16 + ln] = c + 1
        r = 0
        for _ in range(ln):
            r = (r << 1) | (c & 1)
            c >>= 1
        entry = (s << 4) | ln
        step = 1 << ln
        j = r
        while j < size:
            table[j] = entry
            j += step
    return maxlen


@njit(cache=True, nogil=True)
def read_header(data, nbits, bitpos, lens, littab, disttab, cltab, counts,
                fixed_lit, fixed_dist):
    """Parse one block header starting at ``bitpos``.

    Returns ``(status, bitpos_after, bfinal, btype, a, b)``.  For stored blocks
    ``a`` is LEN; for Huffman blocks ``a``/``b`` are the literal/length and
    distance table widths.
    """
    if bitpos + 3 > nbits:
        return TRUNCATED, bitpos, 0, 0, 0, 0
    v = _peek(data, bitpos)
    bfinal = v & 1
    btype = (v >> 1) & 3
    bitpos += 3
    if btype == 3:
        return INVALID_BTYPE, bitpos, bfinal, btype, 0, 0
    if btype == 0:
        bitpos = (bitpos + 7) & ~7
        if bitpos + 32 > nbits:
            return TRUNCATED, bitpos, bfinal, btype, 0, 0
        i = bitpos >> 3
        ln = np.int64(data[i]) | (np.int64(data[i + 1]) << 8)
        nln = np.int64(data[i + 2]) | (np.int64(data[i + 3]) << 8)
        if ln != (~nln & 0xFFFF):
            return STORED_LEN, bitpos, bfinal, btype, 0, 0
        return OK, bitpos + 32, bfinal, btype, ln, 0
    if btype == 1:
        for i in range(512):
            littab[i] = fixed_lit[i]
        for i in range(32):
            disttab[i] = fixed_dist[i]
        return OK, bitpos, bfinal, btype, 9, 5

    v = _peek(data, bitpos)
    hlit = (v & 31) + 257
    hdist = ((v >> 5) & 31) + 1
    hclen = ((v >> 10) & 15) + 4
    bitpos += 14
    if hlit > 286 or hdist > 30:
        return BAD_CODE, bitpos, bfinal, btype, 0, 0
    for i in range(19):
        lens[i] = 0
    for i in range(hclen):
        lens[CL_ORDER[i]] = _peek(data, bitpos) & 7
        bitpos += 3
    if bitpos > nbits:
        return TRUNCATED, bitpos, bfinal, btype, 0, 0
    clmax = build_table(lens, 19, cltab, counts, False)
    if clmax <= 0:
        return BAD_CODE, bitpos, bfinal, btype, 0, 0
    clmask = (1 << clmax) - 1
    total = hlit + hdist
    # lens[19:19+total] receives the literal/length then distance lengths
    base = 19
    i = 0
    while i < total:
        e = cltab[_peek(data, bitpos) & clmask]
        ln = e & 15
        if ln == 0:
            return BAD_CODE, bitpos, bfinal, btype, 0, 0
        bitpos += ln
        sym = e >> 4
        if sym < 16:
            lens[base + i] = sym
            i += 1
        else:
            if sym == 16:
                if i == 0:
                    return BAD_CODE, bitpos, bfinal, btype, 0, 0
                val = lens[base + i - 1]
                rep = 3 + (_peek(data, bitpos) & 3)
                bitpos += 2
            elif sym == 17:
                val = 0
                rep = 3 + (_peek(data, bitpos) & 7)
                bitpos += 3
            else:
                val = 0
                rep = 11 + (_peek(data, bitpos) & 127)
                bitpos += 7
            if i + rep > total:
                return BAD_CODE, bitpos, bfinal, btype, 0, 0
            for _ in range(rep):
                lens[base + i] = val
                i += 1
        if bitpos > nbits:
            return TRUNCATED, bitpos, bfinal, btype, 0, 0
    if lens[base + 256] == 0:
        return BAD_CODE, bitpos, bfinal, btype, 0, 0
    litmax = build_table(lens[base:base + hlit], hlit, littab, counts, True)
    if litmax < 0:
        return BAD_CODE, bitpos, bfinal, btype, 0, 0
    distmax = build_table(lens[base + hlit:base + total], hdist, disttab, counts, True)
    if distmax < 0:
        return BAD_CODE, bitpos, bfinal, btype, 0, 0
    return OK, bitpos, bfinal, btype, litmax, distmax


@njit(cache=True, nogil=True)
def decode_stored(data, nbits, bitpos, length, out, outpos, check_ascii, ascii_tab):
    """Copy a stored block payload; returns ``(status, bitpos, outpos)``."""
    if bitpos + 8 * length > nbits:
        return TRUNCATED, bitpos, outpos
    if outpos + length > out.shape[0]:
        return NEED_SPACE, bitpos, outpos
    i = bitpos >> 3
    for k in range(length):
        c = data[i + k]
        if check_ascii and not ascii_tab[c]:
            return NON_ASCII, bitpos, outpos
        out[outpos + k] = c
    return OK, bitpos + 8 * length, outpos + length


@njit(cache=True, nogil=True)
def decode_body(data, nbits, bitpos, out, outpos, floor, littab, litmax, disttab, distmax,
                check_ascii, ascii_tab, limit):
    """Decode Huffman-coded symbols until end-of-block.

    Output beyond index ``limit`` yields BLOCK_TOO_LARGE; running out of
    buffer yields NEED_SPACE.  Returns ``(status, bitpos, outpos, literals, matches,
    sum_offsets, sum_lengths)``.
    """
    cap = out.shape[0]
    litmask = (1 << litmax) - 1
    distmask = (1 << distmax) - 1
    nlit = 0
    nmatch = 0
    sumoff = 0
    sumlen = 0
    while True:
        if bitpos > nbits:
            return TRUNCATED, bitpos, outpos, nlit, nmatch, sumoff, sumlen
        if outpos > limit:
            return BLOCK_TOO_LARGE, bitpos, outpos, nlit, nmatch, sumoff, sumlen
        e = littab[_peek(data, bitpos) & litmask]
        ln = e & 15
        if ln == 0:
            return BAD_SYMBOL, bitpos, outpos, nlit, nmatch, sumoff, sumlen
        bitpos += ln
        sym = e >> 4
        if sym < 256:
            if check_ascii and not ascii_tab[sym]:
                return NON_ASCII, bitpos, outpos, nlit, nmatch, sumoff, sumlen
            if outpos >= cap:
                return NEED_SPACE, bitpos, outpos, nlit, nmatch, sumoff, sumlen
            out[outpos] = sym
            outpos += 1
            nlit += 1
            continue
        if sym == 256:
            if bitpos > nbits:
                return TRUNCATED, bitpos, outpos, nlit, nmatch, sumoff, sumlen
            return OK, bitpos, outpos, nlit, nmatch, sumoff, sumlen
        sym -= 257
        if sym >= 29:
            return BAD_SYMBOL, bitpos, outpos, nlit, nmatch, sumoff, sumlen
        nx = LEN_EXTRA[sym]
        length = LEN_BASE[sym] + (_peek(data, bitpos) & ((1 << nx) - 1))
        bitpos += nx
        e = disttab[_peek(data, bitpos) & distmask]
        ln = e & 15
        if ln == 0:
            return BAD_SYMBOL, bitpos, outpos, nlit, nmatch, sumoff, sumlen
        bitpos += ln
        dsym = e >> 4
        if dsym >= 30:
            return BAD_SYMBOL, bitpos, outpos, nlit, nmatch, sumoff, sumlen
        nx = DIST_EXTRA[dsym]
        dist = DIST_BASE[dsym] + (_peek(data, bitpos) & ((1 << nx) - 1))
        bitpos += nx
        src = outpos - dist
        if src < floor:
            return OFFSET_TOO_FAR, bitpos, outpos, nlit, nmatch, sumoff, sumlen
        if outpos + length > cap:
            return NEED_SPACE, bitpos, outpos, nlit, nmatch, sumoff, sumlen
        # byte-at-a-time so that overlapping copies repeat the pattern
        for k in range(length):
            out[outpos + k] = out[src + k]
        outpos += length
        nmatch += 1
        sumoff += dist
        sumlen += length


@njit(cache=True, nogil=True)
def inflate_blocks(data, nbits, bitpos, out, outpos, floor, stop_bit, stop_out, max_blocks,
                   flags, ascii_tab, min_block, max_block, stats,
                   lens, littab, disttab, cltab, counts, fixed_lit, fixed_dist):
    """Decode whole blocks until a stop condition; returns ``(status, bitpos, outpos, nblocks)``.

    Stops after a final block, once ``bitpos >= stop_bit`` or
    ``outpos >= stop_out`` at a block boundary, or after ``max_blocks``.
    On failure the returned positions are those of the failing block's start,
    so NEED_SPACE / NEED_STATS can be resumed after growing the buffers.
    """
    nb = 0
    check_ascii = (flags & CHECK_ASCII) != 0
    check_size = (flags & CHECK_SIZE) != 0
    cap = out.shape[0]
    while True:
        if nb >= stats.shape[0]:
            return NEED_STATS, bitpos, outpos, nb
        if (flags & ROLLING) and outpos + max_block + 258 > cap and outpos > WINDOW:
            for k in range(WINDOW):
                out[k] = out[outpos - WINDOW + k]
            outpos = WINDOW
        start_bit = bitpos
        start_out = outpos
        if (flags & REJECT_FINAL) and nb == 0 and (_peek(data, bitpos) & 1):
            return FINAL_BLOCK, start_bit, start_out, nb
        status, bitpos, bfinal, btype, a, b = read_header(
            data, nbits, bitpos, lens, littab, disttab, cltab, counts, fixed_lit, fixed_dist)
        if status != OK:
            return status, start_bit, start_out, nb
        nlit = 0
        nmatch = 0
        sumoff = 0
        sumlen = 0
        if btype == 0:
            if check_size and a > max_block:
                return BLOCK_TOO_LARGE, start_bit, start_out, nb
            status, bitpos, outpos = decode_stored(data, nbits, bitpos, a, out, outpos,
                                                   check_ascii, ascii_tab)
            nlit = a
        else:
            limit = cap
            if check_size:
                limit = start_out + max_block
            status, bitpos, outpos, nlit, nmatch, sumoff, sumlen = decode_body(
                data, nbits, bitpos, out, outpos, floor, littab, a, disttab, b,
                check_ascii, ascii_tab, limit)
        if status != OK:
            return status, start_bit, start_out, nb
        size = outpos - start_out
        if check_size:
            if size > max_block:
                return BLOCK_TOO_LARGE, start_bit, start_out, nb
            if size <= min_block and not bfinal:
                return BLOCK_TOO_SMALL, start_bit, start_out, nb
        stats[nb, S_START_BIT] = start_bit
        stats[nb, S_END_BIT] = bitpos
        stats[nb, S_OUT_START] = start_out
        stats[nb, S_OUT_END] = outpos
        stats[nb, S_BTYPE] = btype
        stats[nb, S_BFINAL] = bfinal
        stats[nb, S_LITERALS] = nlit
        stats[nb, S_MATCHES] = nmatch
        stats[nb, S_SUM_OFFSETS] = sumoff
        stats[nb, S_SUM_LENGTHS] = sumlen
        nb += 1
        if bfinal or bitpos >= stop_bit or outpos >= stop_out or nb >= max_blocks:
            return OK, bitpos, outpos, nb


@njit(cache=True, nogil=True)
def fill_fresh_context(out):
    for j in range(WINDOW):
        out[j] = REF_BASE + j


@njit(cache=True, nogil=True)
def sync_scan(data, nbits, start_bit, end_bit, confirm, ascii_tab, min_block, max_block,
              out, stats, lens, littab, disttab, cltab, counts, fixed_lit, fixed_dist):
    """Try every bit position in ``[start_bit, end_bit)`` as a block start.

    Returns ``(block_start, blocks_confirmed, trials, last_status)``;
    ``block_start`` is -1 when nothing was confirmed.
    """
    flags = CHECK_ASCII | CHECK_SIZE | REJECT_FINAL | ROLLING
    big = np.int64(1) << 62
    fill_fresh_context(out)
    trials = 0
    last = OK
    for pos in range(start_bit, end_bit):
        trials += 1
        if pos + 3 > nbits:
            break
        v = _peek(data, pos)
        if v & 1:
            continue
        if (v & 6) == 6:
            continue
        status, bp, op, nb = inflate_blocks(
            data, nbits, pos, out, WINDOW, 0, big, big, confirm + 1, flags, ascii_tab,
            min_block, max_block, stats, lens, littab, disttab, cltab, counts,
            fixed_lit, fixed_dist)
        if nb >= 1:
            if status == OK and (nb == confirm + 1 or stats[nb - 1, S_BFINAL] == 1):
                return pos, nb - 1, trials, status
            last = status
            fill_fresh_context(out)
    return -1, 0, trials, last


@njit(cache=True, nogil=True)
def translate(sym, lut, out):
    for i in range(sym.shape[0]):
        out[i] = lut[sym[i]]
