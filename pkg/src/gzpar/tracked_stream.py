"""DEFLATE decoding from an unknown context, tracking where every byte came from.

Decoded symbols are ``uint16`` values: ``0..255`` are resolved bytes and
``256 + j`` means "whatever byte sat at position ``j`` of the initial
context".  Back-references copy symbols verbatim, so context positions
propagate through the output exactly as they would have as real bytes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import _inflate as K
from .deflate_core import (BlockStats, Workspace, as_buffer, inflate_member, run_blocks,
                           token_stats_from_blocks)
from .errors import LengthMismatch

WINDOW = K.WINDOW
REF_BASE = K.REF_BASE
SYM_DTYPE = np.uint16


def resolved(byte: int) -> int:
    return int(byte)


def context_ref(j: int) -> int:
    if not 0 <= j < WINDOW:
        raise ValueError(f"context index {j} outside [0, {WINDOW})")
    return REF_BASE + j


def is_ref(data):
    return np.asarray(data) >= REF_BASE


def project(data, placeholder=b"?") -> bytes:
    """Collapse symbols to bytes, rendering every context reference as ``placeholder``."""
    arr = np.asarray(data)
    out = np.where(arr >= REF_BASE, placeholder[0], arr).astype(np.uint8)
    return out.tobytes()


def substitute(data, context) -> np.ndarray:
    """Replace each ``256 + j`` by ``context[j]``; ``context`` must be fully resolved."""
    ctx = np.asarray(context)
    if ctx.size != WINDOW:
        raise ValueError(f"context must hold {WINDOW} entries, got {ctx.size}")
    if (ctx >= REF_BASE).any():
        raise ValueError("substitution context still contains context references")
    lut = np.concatenate([np.arange(256, dtype=np.uint8), ctx.astype(np.uint8)])
    arr = np.ascontiguousarray(data, dtype=SYM_DTYPE)
    out = np.empty(arr.size, dtype=np.uint8)
    K.translate(arr, lut, out)
    return out


class SymContext:
    """A 32 KiB window of symbols, oldest first.

    ``known`` counts how many trailing entries hold real history; matches
    reaching further back are invalid (only relevant for real contexts
    shorter than the window, e.g. at stream start).
    """

    def __init__(self, values, known=WINDOW):
        values = np.asarray(values, dtype=SYM_DTYPE)
        if values.size != WINDOW:
            raise ValueError(f"context must hold {WINDOW} symbols")
        self.values = values
        self.known = known

    @classmethod
    def fresh(cls):
        return cls(np.arange(REF_BASE, REF_BASE + WINDOW, dtype=SYM_DTYPE))

    @classmethod
    def from_bytes(cls, history):
        hist = np.frombuffer(bytes(history), dtype=np.uint8) if not isinstance(history, np.ndarray) \
            else history
        hist = hist[-WINDOW:]
        values = np.zeros(WINDOW, dtype=SYM_DTYPE)
        values[WINDOW - hist.size:] = hist
        return cls(values, known=int(hist.size))

    @property
    def undetermined(self):
        return int(np.count_nonzero(self.values >= REF_BASE))

    @property
    def is_resolved(self):
        return self.undetermined == 0

    def resolve(self, previous: "SymContext") -> "SymContext":
        """Substitute references using the (resolved) context they point into."""
        return SymContext(substitute(self.values, previous.values).astype(SYM_DTYPE), self.known)

    def __len__(self):
        return WINDOW


@dataclass(frozen=True)
class AtFinalBlock:
    pass


@dataclass(frozen=True)
class AfterNBytes:
    n: int


@dataclass(frozen=True)
class AtBitLimit:
    bit: int


StopRule = Union[AtFinalBlock, AfterNBytes, AtBitLimit]


@dataclass
class TrackedOutput:
    data: np.ndarray
    final_context: SymContext
    blocks: list
    start_bit: int
    end_bit: int

    @property
    def boundaries(self):
        """Output offsets at which each decoded block starts."""
        return [b.out_start for b in self.blocks]

    @property
    def block_bits(self):
        return [b.start_bit for b in self.blocks]

    @property
    def reached_final(self):
        return bool(self.blocks) and self.blocks[-1].bfinal

    @property
    def undetermined(self):
        return int(np.count_nonzero(self.data >= REF_BASE))

    def window_counts(self, window):
        return count_undetermined_windows(self, window)


def decompress_tracked(bits, start_bit: int, initial: Optional[SymContext] = None,
                       stop: StopRule = AtFinalBlock(), size_hint: Optional[int] = None,
                       ws: Optional[Workspace] = None) -> TrackedOutput:
    """Decode whole blocks from ``start_bit`` with a symbolic initial context."""
    buf = as_buffer(bits)
    initial = initial or SymContext.fresh()
    stop_bit = stop_out = None
    if isinstance(stop, AtBitLimit):
        stop_bit = stop.bit
    elif isinstance(stop, AfterNBytes):
        stop_out = WINDOW + stop.n
    if size_hint is None:
        remaining = max(0, (stop_bit or buf.nbits) - start_bit) // 8
        size_hint = 4 * remaining + (1 << 16)
        if stop_out is not None:
            size_hint = min(size_hint, stop.n + (1 << 22))
    out = np.empty(WINDOW + size_hint, dtype=SYM_DTYPE)
    out[:WINDOW] = initial.values
    floor = WINDOW - initial.known
    out, outpos, end_bit, stats = run_blocks(buf, start_bit, out, WINDOW, floor,
                                             stop_bit=stop_bit, stop_out=stop_out, ws=ws)
    data = out[WINDOW:outpos]
    final = SymContext(out[outpos - WINDOW:outpos].copy(),
                       known=min(WINDOW, initial.known + data.size))
    blocks = [BlockStats.from_row(r, out_shift=WINDOW) for r in stats]
    return TrackedOutput(data, final, blocks, start_bit, end_bit)


@dataclass
class BlockAnalysis:
    """A tracked decode started at a block boundary of a sequentially decoded file."""
    tracked: TrackedOutput
    block_index: int
    out_offset: int
    o_a: Optional[float]
    l_a: Optional[float]
    total_size: int

    def truth_slice(self, truth):
        """The part of the original data the tracked decode covers."""
        if len(truth) != self.total_size:
            raise LengthMismatch(f"truth has {len(truth)} bytes, the file decompresses to "
                                 f"{self.total_size}")
        return truth[self.out_offset:self.out_offset + self.tracked.data.size]


def decode_from_block(source, block_index: int = 1) -> BlockAnalysis:
    """Decode the file once to find its blocks, then again with a fresh symbolic
    context from block ``block_index`` (0-based; 1 is the second block)."""
    buf = as_buffer(source)
    member = inflate_member(buf)
    if not 0 <= block_index < len(member.blocks):
        raise ValueError(f"file has {len(member.blocks)} blocks; cannot start at "
                         f"block index {block_index}")
    blk = member.blocks[block_index]
    initial = SymContext.fresh() if block_index else SymContext.from_bytes(b"")
    tracked = decompress_tracked(buf, blk.start_bit, initial, AtFinalBlock(),
                                 size_hint=member.output.size - blk.out_start + 1024)
    st = token_stats_from_blocks(member.blocks)
    return BlockAnalysis(tracked, block_index, blk.out_start, st.o_a, st.l_a, member.output.size)


@dataclass(frozen=True)
class WindowCount:
    index: int
    size: int
    undetermined: int

    @property
    def percent(self):
        return 100.0 * self.undetermined / self.size if self.size else 0.0


def count_undetermined_windows(output, window: int) -> list:
    """Undetermined counts over non-overlapping windows; the last one may be partial."""
    if window <= 0:
        raise ValueError("window must be positive")
    data = output.data if isinstance(output, TrackedOutput) else np.asarray(output)
    refs = (data >= REF_BASE).astype(np.int64)
    n = refs.size
    starts = np.arange(0, n, window)
    counts = np.add.reduceat(refs, starts) if n else np.zeros(0, dtype=np.int64)
    return [WindowCount(i, int(min(window, n - s)), int(c))
            for i, (s, c) in enumerate(zip(starts, counts))]


def vanishing_index(counts) -> Optional[int]:
    """First window index after which every window is free of context references."""
    idx = len(counts)
    for wc in reversed(counts):
        if wc.undetermined:
            break
        idx = wc.index
    return idx if idx < len(counts) else None


DNA, QUALITY, SEQ_HEADER, QUAL_HEADER = "DNA", "Quality", "SeqHeader", "QualHeader"
CLASSES = (DNA, QUALITY, SEQ_HEADER, QUAL_HEADER)
_LINE_CLASS = np.array([2, 0, 3, 1])  # record line 0..3 -> index into CLASSES


def fastq_classes(truth) -> np.ndarray:
    """Class index (into ``CLASSES``) of every byte of a FASTQ excerpt.

    The excerpt may start mid-record; the record phase is found from the
    first line starting with '@' whose successor-but-one starts with '+'.
    A newline is counted with the line it opens, so the DNA class holds
    nucleotides only (line breaks sit inside the ever-repeating ``\n+\n``
    and ``\n@`` patterns and would otherwise dominate it).
    """
    arr = np.frombuffer(bytes(truth), dtype=np.uint8) if not isinstance(truth, np.ndarray) \
        else truth.astype(np.uint8, copy=False)
    nl = arr == 0x0A
    line_id = np.cumsum(nl)
    starts = np.concatenate([[0], np.flatnonzero(nl) + 1])
    starts = starts[starts < arr.size]
    phase = 0
    for k in range(min(len(starts), 64)):
        if k + 2 < len(starts) and arr[starts[k]] == ord("@") and arr[starts[k + 2]] == ord("+"):
            phase = k % 4
            break
    return _LINE_CLASS[(line_id - phase) % 4]


def annotate_propagation(output, truth, classifier=None, window: int = WINDOW,
                         stride: int = 4096) -> list:
    """Per-class counts of context references in sliding windows.

    ``classifier`` maps the truth bytes to class indices into ``CLASSES``
    (default: FASTQ line structure).  Returns dict rows with
    ``window_index, start, size`` and one count per class.
    """
    data = output.data if isinstance(output, TrackedOutput) else np.asarray(output)
    truth_arr = np.frombuffer(bytes(truth), dtype=np.uint8) if not isinstance(truth, np.ndarray) \
        else truth
    if truth_arr.size != data.size:
        raise LengthMismatch(f"truth has {truth_arr.size} bytes, decoded data has {data.size}")
    classes = (classifier or fastq_classes)(truth_arr)
    refs = data >= REF_BASE
    rows = []
    n = data.size
    starts = list(range(0, max(n - window, 0) + 1, stride)) if n else []
    prefix = {}
    for ci, name in enumerate(CLASSES):
        mask = refs & (classes == ci)
        prefix[name] = np.concatenate([[0], np.cumsum(mask, dtype=np.int64)])
    for wi, s in enumerate(starts):
        e = min(n, s + window)
        row = {"window_index": wi, "start": s, "size": e - s}
        for name in CLASSES:
            row[name] = int(prefix[name][e] - prefix[name][s])
        rows.append(row)
    return rows
