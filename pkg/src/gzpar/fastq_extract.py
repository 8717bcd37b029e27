"""Recovering DNA reads from partially undetermined FASTQ text.

A read is a maximal run matching ``T D+ (U+ D+)* T`` where ``T`` is a
newline or an undetermined symbol, ``D`` a nucleotide (``ACGTN``) and ``U``
an undetermined symbol.  The flanking ``T`` characters are dropped from the
reported span; requiring them keeps DNA-looking stretches of quality lines
out.  This is a heuristic, not a FASTQ parser.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from .deflate_core import as_buffer, parse_gzip_header
from .errors import NoResolvedBlock, NoSyncPoint
from .sync_finder import SyncConfig, find_next_block
from .tracked_stream import REF_BASE, SymContext, decompress_tracked


@dataclass(frozen=True)
class ExtractConfig:
    min_read_len: int = 32
    resolved_block_min_seqs: int = 10
    accept_lowercase: bool = False

    def __post_init__(self):
        if self.min_read_len < 3:
            raise ValueError("min_read_len must be at least 3")
        if self.resolved_block_min_seqs < 1:
            raise ValueError("resolved_block_min_seqs must be at least 1")

    def nucleotide_table(self):
        tab = np.zeros(256, dtype=np.bool_)
        letters = b"ACGTN" + (b"acgtn" if self.accept_lowercase else b"")
        tab[list(letters)] = True
        return tab


@dataclass(frozen=True)
class ExtractedSeq:
    start: int
    end: int
    ambiguous: bool
    spans_block_boundary: bool = False

    def __len__(self):
        return self.end - self.start


@njit(cache=True, nogil=True)
def _scan(data, dtab, min_len, starts, ends, amb):
    n = data.shape[0]
    k = 0
    p = 0
    while p < n:
        c = data[p]
        if not (c == 10 or c >= REF_BASE):
            p += 1
            continue
        q = p + 1
        if q >= n or data[q] >= REF_BASE or not dtab[data[q]]:
            p += 1
            continue
        r = q
        while r < n and data[r] < REF_BASE and dtab[data[r]]:
            r += 1
        last_end = -1
        last_amb = False
        ambiguous = False
        while r < n:
            c = data[r]
            if c == 10:
                last_end = r
                last_amb = ambiguous
                break
            if c < REF_BASE:
                break
            # an undetermined run: a valid end here, and a continuation if D follows
            last_end = r
            last_amb = ambiguous
            s = r
            while s < n and data[s] >= REF_BASE:
                s += 1
            if s < n and dtab[data[s]]:
                ambiguous = True
                while s < n and data[s] < REF_BASE and dtab[data[s]]:
                    s += 1
                r = s
                continue
            break
        if last_end < 0:
            p = r
            continue
        if last_end - p - 1 >= min_len:
            starts[k] = p + 1
            ends[k] = last_end
            amb[k] = last_amb
            k += 1
        p = last_end + 1
    return k


def _as_symbols(data):
    if isinstance(data, (bytes, bytearray, memoryview)):
        return np.frombuffer(bytes(data), dtype=np.uint8).astype(np.uint16)
    arr = np.asarray(data)
    return np.ascontiguousarray(arr, dtype=np.uint16)


def _scan_arrays(data, cfg):
    sym = _as_symbols(data)
    cap = sym.size // (cfg.min_read_len + 2) + 1
    starts = np.empty(cap, dtype=np.int64)
    ends = np.empty(cap, dtype=np.int64)
    amb = np.empty(cap, dtype=np.bool_)
    k = _scan(sym, cfg.nucleotide_table(), cfg.min_read_len, starts, ends, amb)
    return starts[:k], ends[:k], amb[:k]


def extract_sequences(data, block_boundaries=(), cfg: ExtractConfig = ExtractConfig()) -> list:
    """All maximal non-overlapping reads, left to right, in one linear pass."""
    starts, ends, amb = _scan_arrays(data, cfg)
    bounds = np.asarray(block_boundaries, dtype=np.int64)
    if bounds.size:
        spans = np.searchsorted(bounds, starts, "right") != np.searchsorted(bounds, ends - 1, "right")
    else:
        spans = np.zeros(starts.size, dtype=np.bool_)
    return [ExtractedSeq(int(s), int(e), bool(a), bool(x))
            for s, e, a, x in zip(starts, ends, amb, spans)]


@dataclass(frozen=True)
class BlockClass:
    seq_count: int
    ambiguous_count: int
    sequence_resolved: bool


def _classify(starts, amb, bounds, cfg):
    nblocks = bounds.size
    idx = np.searchsorted(bounds, starts, "right") - 1
    keep = idx >= 0
    total = np.bincount(idx[keep], minlength=nblocks)[:nblocks]
    ambig = np.bincount(idx[keep], weights=amb[keep].astype(np.int64), minlength=nblocks)[:nblocks]
    resolved = (total >= cfg.resolved_block_min_seqs) & (ambig == 0)
    return total, ambig.astype(np.int64), resolved


def classify_blocks(data, block_boundaries, cfg: ExtractConfig = ExtractConfig()) -> list:
    """Per-block read counts; a block is sequence-resolved when it holds at least
    ``resolved_block_min_seqs`` reads and none is ambiguous.  Reads count toward
    the block they start in."""
    starts, _, amb = _scan_arrays(data, cfg)
    bounds = np.asarray(block_boundaries, dtype=np.int64)
    total, ambig, resolved = _classify(starts, amb, bounds, cfg)
    return [BlockClass(int(t), int(a), bool(r)) for t, a, r in zip(total, ambig, resolved)]


@dataclass(frozen=True)
class SeekReport:
    fraction: float
    seek_offset: int
    block_start_bit: int
    delay_bytes: int | None
    seq_total: int
    seq_ambiguous: int
    resolved_block_found: bool

    @property
    def percent_unambiguous(self):
        if not self.seq_total:
            return None
        return 100.0 * (self.seq_total - self.seq_ambiguous) / self.seq_total


def seek_and_report(source, seek_offset: int, cfg: ExtractConfig = ExtractConfig(),
                    sync_cfg: SyncConfig = SyncConfig(), byte_budget=None, fraction=None):
    """Sync at byte ``seek_offset``, decode to the end (or budget) and measure reads.

    Returns ``(SeekReport, TrackedOutput)``.  Seeks at or before the first
    DEFLATE byte start with the true (empty) context.
    """
    from .tracked_stream import AfterNBytes, AtFinalBlock

    buf = as_buffer(source)
    header = parse_gzip_header(buf)
    if seek_offset <= header.deflate_start:
        start_bit = 8 * header.deflate_start
        initial = SymContext.from_bytes(b"")
    else:
        start_bit = find_next_block(buf, 8 * seek_offset, sync_cfg).block_start
        initial = SymContext.fresh()
    stop = AtFinalBlock() if byte_budget is None else AfterNBytes(byte_budget)
    out = decompress_tracked(buf, start_bit, initial, stop)
    starts, _, amb = _scan_arrays(out.data, cfg)
    bounds = np.asarray(out.boundaries, dtype=np.int64)
    _, _, resolved = _classify(starts, amb, bounds, cfg)
    hits = np.flatnonzero(resolved)
    if hits.size == 0:
        report = SeekReport(fraction, seek_offset, start_bit, None, 0, 0, False)
    else:
        first = int(bounds[hits[0]])
        after = starts >= first
        report = SeekReport(fraction, seek_offset, start_bit, first, int(after.sum()),
                            int(amb[after].sum()), True)
    return report, out


def random_access_report(source, fractions, cfg: ExtractConfig = ExtractConfig(),
                         sync_cfg: SyncConfig = SyncConfig(), byte_budget=None) -> list:
    """One :class:`SeekReport` per fraction of the compressed file size.

    A seek whose sync search fails raises :class:`NoSyncPoint`; a seek with no
    sequence-resolved block yields a report with ``resolved_block_found`` false.
    """
    buf = as_buffer(source)
    rows = []
    for f in fractions:
        if not 0 <= f < 1:
            raise ValueError(f"seek fraction {f} outside [0, 1)")
        report, _ = seek_and_report(buf, int(f * buf.nbytes), cfg, sync_cfg, byte_budget, f)
        rows.append(report)
    return rows


def require_resolved(report: SeekReport) -> SeekReport:
    if not report.resolved_block_found:
        raise NoResolvedBlock(f"no sequence-resolved block after byte {report.seek_offset}")
    return report


__all__ = ["ExtractConfig", "ExtractedSeq", "BlockClass", "SeekReport", "extract_sequences",
           "classify_blocks", "random_access_report", "seek_and_report", "require_resolved",
           "NoSyncPoint"]
