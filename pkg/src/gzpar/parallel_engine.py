"""Exact parallel decompression in two passes.

Pass 1 splits the DEFLATE stream at confirmed block starts and decodes every
chunk concurrently; chunks other than the first start from a symbolic context
so back-references into the unknown history are recorded, not guessed.
Pass 2 resolves the chunk-boundary contexts one after another (cheap: 32 KiB
each) and then translates every chunk to bytes concurrently.
"""

from __future__ import annotations

import io
import os
import warnings
import zlib
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _inflate as K
from .deflate_core import (BitBuffer, GzipHeader, Workspace, as_buffer, check_after_member,
                           inflate_member, parse_gzip_header, read_trailer, run_blocks)
from .errors import ChunkDecodeError, CrcMismatch, GzparError, NoSyncPoint
from .sync_finder import SyncConfig, find_next_block
from .tracked_stream import SYM_DTYPE, WINDOW, substitute

DEFAULT_MIN_CHUNK = 4 << 20


@dataclass(frozen=True)
class Chunk:
    index: int
    start_bit: int
    end_bit: Optional[int]  # None: runs through the final block

    @property
    def is_last(self):
        return self.end_bit is None


@dataclass
class ChunkPlan:
    chunks: list
    thread_count: int
    section_size: Optional[int] = None
    header: Optional[GzipHeader] = None
    failed_searches: int = 0

    def __len__(self):
        return len(self.chunks)

    @property
    def starts(self):
        return [c.start_bit for c in self.chunks]


@dataclass
class ChunkResult:
    index: int
    data: np.ndarray  # uint8 when decoded from a real context, else uint16 symbols
    trailing: np.ndarray  # last WINDOW entries of (initial context + data)
    end_bit: int
    blocks: int = 0

    @property
    def resolved(self):
        return self.data.dtype == np.uint8

    @property
    def undetermined(self):
        return 0 if self.resolved else int(np.count_nonzero(self.data >= K.REF_BASE))


def _executor(workers):
    return ThreadPoolExecutor(max_workers=max(1, workers))


def _stream_span(buf: BitBuffer, header: GzipHeader):
    return 8 * header.deflate_start, 8 * max(header.deflate_start, buf.nbytes - 8)


def plan_chunks(source, n: int, cfg: SyncConfig = SyncConfig(),
                min_chunk_size: int = DEFAULT_MIN_CHUNK, start_bit: Optional[int] = None,
                end_bit: Optional[int] = None, workers: Optional[int] = None) -> ChunkPlan:
    """Cut ``[start_bit, end_bit)`` into about ``n`` chunks at confirmed block starts.

    Targets sit at equal compressed-byte spacing, never closer than
    ``min_chunk_size``; each is moved forward to the next confirmed block start.
    Targets whose search fails are dropped, merging their neighbours.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    buf = as_buffer(source)
    header = parse_gzip_header(buf)
    lo, hi = _stream_span(buf, header)
    start_bit = lo if start_bit is None else start_bit
    hi_search = hi if end_bit is None else end_bit
    span_bytes = (hi_search - start_bit) // 8
    n_eff = n
    if min_chunk_size > 0:
        n_eff = max(1, min(n, span_bytes // min_chunk_size))
    targets = [start_bit + 8 * (i * span_bytes // n_eff) for i in range(1, n_eff)]
    starts = []
    failed = 0
    if targets:
        limits = targets[1:] + [hi_search]

        def search(t, lim):
            try:
                return find_next_block(buf, t, cfg, end_bit=lim).block_start
            except NoSyncPoint:
                return None

        with _executor(min(workers or n_eff, len(targets))) as pool:
            found = list(pool.map(search, targets, limits))
        failed = sum(f is None for f in found)
        starts = sorted({f for f in found if f is not None and start_bit < f < hi_search})
    bounds = [start_bit] + starts
    chunks = [Chunk(i, b, bounds[i + 1] if i + 1 < len(bounds) else end_bit)
              for i, b in enumerate(bounds)]
    return ChunkPlan(chunks, n, header=header, failed_searches=failed)


def decode_chunk(buf: BitBuffer, chunk: Chunk, history: Optional[np.ndarray],
                 ws: Optional[Workspace] = None) -> ChunkResult:
    """Decode one chunk; ``history`` is the real preceding output (may be empty)
    or ``None`` for an unknown context."""
    stop = chunk.end_bit
    remaining = ((stop if stop is not None else buf.nbits) - chunk.start_bit) // 8
    guess = 4 * remaining + (1 << 16)
    if history is not None:
        hist = history[-WINDOW:]
        out = np.empty(hist.size + guess, dtype=np.uint8)
        out[:hist.size] = hist
        base, floor = hist.size, 0
    else:
        out = np.empty(WINDOW + guess, dtype=SYM_DTYPE)
        K.fill_fresh_context(out)
        base, floor = WINDOW, 0
    try:
        out, outpos, end, stats = run_blocks(buf, chunk.start_bit, out, base, floor,
                                             stop_bit=stop, ws=ws)
    except GzparError as exc:
        raise ChunkDecodeError(chunk.index, exc) from exc
    final_reached = bool(len(stats)) and bool(stats[-1, K.S_BFINAL])
    if chunk.is_last and not final_reached:
        raise ChunkDecodeError(chunk.index, "stream ended without a final block")
    if not chunk.is_last and (end != stop or final_reached):
        raise ChunkDecodeError(chunk.index, f"decoding ended at bit {end}, expected the "
                               f"next chunk start {stop}")
    if history is not None and outpos < WINDOW:
        trailing = np.zeros(WINDOW, dtype=np.uint8)
        trailing[WINDOW - outpos:] = out[:outpos]
    else:
        trailing = out[outpos - WINDOW:outpos].copy()
    data = out[base:outpos]
    return ChunkResult(chunk.index, data, trailing, int(end), len(stats))


def pass1(plan: ChunkPlan, source, workers: Optional[int] = None,
          first_history: Optional[np.ndarray] = None) -> list:
    """Decode all chunks concurrently; chunk 0 uses ``first_history`` (default:
    the empty context of a stream start), the others symbolic contexts."""
    buf = as_buffer(source)
    first = np.zeros(0, dtype=np.uint8) if first_history is None else first_history
    with _executor(workers or len(plan.chunks)) as pool:
        futures = [pool.submit(decode_chunk, buf, c, first if c.index == 0 else None)
                   for c in plan.chunks]
        results = [f.result() for f in futures]
    return results


def pass2_resolve(results) -> list:
    """Resolved context for every chunk: ``contexts[i]`` is the true 32 KiB
    preceding chunk ``i`` (``contexts[0]`` is ``None``)."""
    contexts = [None]
    for i in range(1, len(results)):
        prev = results[i - 1].trailing
        if prev.dtype == np.uint8:
            ctx = prev
        else:
            ctx = substitute(prev, contexts[i - 1])
        contexts.append(ctx)
    return contexts


def translate_chunk(result: ChunkResult, context) -> np.ndarray:
    if result.resolved:
        return result.data
    return substitute(result.data, context)


def _write(sink, arr):
    sink.write(memoryview(arr))
    return int(arr.size)


def pass2_translate(results, contexts, sink, ordered: bool = True,
                    workers: Optional[int] = None, on_chunk=None) -> int:
    """Map every chunk to bytes and write it; unordered mode writes each chunk
    as soon as it is ready.  ``on_chunk(index, array)`` sees every chunk."""
    written = 0
    with _executor(workers or len(results)) as pool:
        futures = {pool.submit(translate_chunk, r, contexts[r.index]): r.index for r in results}
        if ordered:
            for fut in sorted(futures, key=futures.get):
                arr = fut.result()
                if on_chunk:
                    on_chunk(futures[fut], arr)
                written += _write(sink, arr)
        else:
            for fut in as_completed(futures):
                arr = fut.result()
                if on_chunk:
                    on_chunk(futures[fut], arr)
                written += _write(sink, arr)
    return written


@dataclass
class ParallelReport:
    bytes_written: int = 0
    chunks: int = 0
    sections: int = 0
    crc32: Optional[int] = None
    peak_symbol_bytes: int = 0
    plan_starts: list = field(default_factory=list)


class _OrderedCrc:
    """CRC32 over chunks in index order, whatever order they arrive in."""

    def __init__(self):
        self.crc = 0
        self.next = 0
        self.pending = {}

    def __call__(self, index, arr):
        self.pending[index] = arr
        while self.next in self.pending:
            self.crc = zlib.crc32(memoryview(self.pending.pop(self.next)), self.crc)
            self.next += 1


def _looks_binary(buf: BitBuffer, header: GzipHeader, cfg: SyncConfig):
    out = np.zeros(1 << 16, dtype=np.uint8)
    out, outpos, _, _ = run_blocks(buf, 8 * header.deflate_start, out, 0, max_blocks=1)
    return not cfg.ascii_table[out[:outpos]].all()


def _section_bounds(buf, header, section_size, cfg, workers):
    lo, hi = _stream_span(buf, header)
    if not section_size:
        return [(lo, None)]
    step = 8 * section_size
    targets = list(range(lo + step, hi, step))
    starts = []
    for t in targets:
        if starts and t <= starts[-1]:
            continue
        try:
            starts.append(find_next_block(buf, t, cfg, end_bit=hi).block_start)
        except NoSyncPoint:
            break
    bounds = [lo] + sorted(set(starts))
    return [(b, bounds[i + 1] if i + 1 < len(bounds) else None) for i, b in enumerate(bounds)]


def parallel_decompress_to(sink, source, n: Optional[int] = None, *, ordered: bool = True,
                           verify_crc: bool = False, section_size: Optional[int] = None,
                           workers: Optional[int] = None, cfg: SyncConfig = SyncConfig(),
                           min_chunk_size: int = DEFAULT_MIN_CHUNK) -> ParallelReport:
    """Two-pass decompression of a single-member text gzip file into ``sink``.

    ``section_size`` (compressed bytes) processes the file a section at a time;
    each section's first chunk reuses the previous section's real context.
    """
    buf = as_buffer(source)
    header = parse_gzip_header(buf)
    n = n or os.cpu_count() or 1
    workers = workers or n
    report = ParallelReport()
    if n == 1 and not section_size:
        member = inflate_member(buf, verify_crc=True)
        report.bytes_written = _write(sink, member.output)
        report.chunks = report.sections = 1
        report.crc32 = member.trailer.crc32
        report.peak_symbol_bytes = member.output.nbytes
        report.plan_starts = [8 * header.deflate_start]
        return report

    if _looks_binary(buf, header, cfg):
        raise NoSyncPoint("the data does not look like text; block starts can only be found "
                          "in ASCII data, so parallel mode is unavailable. Use sequential "
                          "mode (-t 1).")
    crc = _OrderedCrc() if verify_crc else None
    history = np.zeros(0, dtype=np.uint8)
    end_bit = None
    chunk_base = 0
    for s_start, s_end in _section_bounds(buf, header, section_size, cfg, workers):
        plan = plan_chunks(buf, n, cfg, min_chunk_size, s_start, s_end, workers)
        results = pass1(plan, buf, workers, history)
        held = sum(r.data.nbytes + r.trailing.nbytes for r in results)
        report.peak_symbol_bytes = max(report.peak_symbol_bytes, held)
        contexts = pass2_resolve(results)

        def on_chunk(index, arr, base=chunk_base):
            if crc is not None:
                crc(base + index, arr)

        report.bytes_written += pass2_translate(results, contexts, sink, ordered, workers,
                                                on_chunk)
        last = results[-1]
        history = last.trailing if last.resolved else substitute(last.trailing, contexts[-1])
        end_bit = last.end_bit
        report.chunks += len(results)
        report.sections += 1
        report.plan_starts += plan.starts
        chunk_base += len(results)
        del results, contexts
    trailer, member_end = read_trailer(buf, end_bit)
    check_after_member(buf, member_end)
    if crc is not None:
        report.crc32 = crc.crc
        _verify(trailer, report)
    return report


def _verify(trailer, report):
    if report.crc32 != trailer.crc32:
        raise CrcMismatch(trailer.crc32, report.crc32)
    if report.bytes_written & 0xFFFFFFFF != trailer.isize:
        warnings.warn(f"ISIZE mismatch: trailer {trailer.isize}, decoded {report.bytes_written}")


def decompress_parallel(source, n: Optional[int] = None, **opts) -> bytes:
    """Like :func:`parallel_decompress_to` but returns the output bytes."""
    sink = io.BytesIO()
    parallel_decompress_to(sink, source, n, **opts)
    return sink.getvalue()
