import io
import os
from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gzpar import deflate_core as dc
from gzpar import fixtures
from gzpar import parallel_engine as pe
from gzpar.errors import ChunkDecodeError, CrcMismatch, MultiMember, NoSyncPoint
from gzpar.tracked_stream import REF_BASE, WINDOW

SMALL = 1 << 16


def test_single_chunk_plan(corpus):
    gz = corpus.gz("text", 1_000_000, 6)
    plan = pe.plan_chunks(gz, 1)
    assert len(plan) == 1
    c = plan.chunks[0]
    assert c.start_bit == 8 * dc.parse_gzip_header(gz).deflate_start and c.is_last


def test_min_chunk_size_collapses(corpus):
    gz = corpus.gz("text", 300_000, 6)
    assert len(pe.plan_chunks(gz, 32, min_chunk_size=4 << 20)) == 1


def test_four_chunks_on_boundaries(corpus):
    gz = corpus.gz("fastq", 16_000_000, 6)
    oracle = {b["start_bit"] for b in corpus.boundaries("fastq", 16_000_000, 6)["blocks"]}
    plan = pe.plan_chunks(gz, 4, min_chunk_size=SMALL)
    assert len(plan) == 4
    assert all(c.start_bit in oracle for c in plan.chunks)
    ends = [c.end_bit for c in plan.chunks[:-1]]
    assert ends == [c.start_bit for c in plan.chunks[1:]]
    sizes = [b - a for a, b in zip(plan.starts, plan.starts[1:] + [8 * len(gz)])]
    assert max(sizes) <= 2 * min(sizes)


def test_pass1_results(corpus):
    gz = corpus.gz("fastq-like", 4_000_000, 6)
    raw = corpus.raw("fastq-like", 4_000_000)
    plan = pe.plan_chunks(gz, 4, min_chunk_size=SMALL)
    res = pe.pass1(plan, gz)
    assert res[0].resolved and res[0].undetermined == 0
    assert all(not r.resolved for r in res[1:])
    assert any(r.undetermined for r in res[1:])
    contexts = pe.pass2_resolve(res)
    offset = 0
    for r, ctx in zip(res, contexts):
        if r.index:
            want = np.frombuffer(raw[max(0, offset - WINDOW):offset], np.uint8)
            assert ctx.dtype == np.uint8 and np.array_equal(ctx[-want.size:], want)
        offset += r.data.size
    # chunk independence: decoding one chunk again reproduces it
    again = pe.decode_chunk(dc.as_buffer(gz), plan.chunks[2], None)
    assert np.array_equal(again.data, res[2].data)


def test_pass1_single_chunk_equals_sequential(corpus):
    gz = corpus.gz("text", 1_000_000, 9)
    res = pe.pass1(pe.plan_chunks(gz, 1), gz)
    assert res[0].data.tobytes() == corpus.raw("text", 1_000_000)


def test_corrupted_chunk_reports_index(corpus):
    gz = bytearray(corpus.gz("text", 4_000_000, 6))
    plan = pe.plan_chunks(bytes(gz), 4, min_chunk_size=SMALL)
    # force block type 3 in the header that opens chunk 2
    for bit in (plan.chunks[2].start_bit + 1, plan.chunks[2].start_bit + 2):
        gz[bit >> 3] |= 1 << (bit & 7)
    with pytest.raises(ChunkDecodeError) as exc:
        pe.pass1(plan, bytes(gz))
    assert exc.value.index == 2


def test_resolve_by_substitution_rule():
    ctx1 = np.arange(WINDOW, dtype=np.uint16) % 200
    w2 = np.full(WINDOW, 65, np.uint16)
    w2[0] = REF_BASE + 5
    chunk = lambda i, trail: pe.ChunkResult(i, np.zeros(0, np.uint16), trail, 0)
    res = [chunk(0, ctx1.astype(np.uint8)), chunk(1, w2), chunk(2, np.zeros(WINDOW, np.uint16))]
    contexts = pe.pass2_resolve(res)
    assert np.array_equal(contexts[1], ctx1)
    assert contexts[2][0] == ctx1[5]


def test_translate_ordered_and_unordered(corpus):
    gz = corpus.gz("fastq", 4_000_000, 6)
    raw = corpus.raw("fastq", 4_000_000)
    plan = pe.plan_chunks(gz, 4, min_chunk_size=SMALL)
    res = pe.pass1(plan, gz)
    ctx = pe.pass2_resolve(res)
    seen = {}
    ordered = io.BytesIO()
    pe.pass2_translate(res, ctx, ordered, True, on_chunk=lambda i, a: seen.setdefault(i, a.tobytes()))
    assert ordered.getvalue() == raw
    unordered = io.BytesIO()
    n = pe.pass2_translate(res, ctx, unordered, False)
    assert n == len(raw)
    # the unordered output is some permutation of whole chunks
    out = unordered.getvalue()
    pieces, pos = [], 0
    while pos < len(out):
        match = [c for c in seen.values() if out.startswith(c, pos)]
        assert match
        pieces.append(match[0])
        pos += len(match[0])
    assert Counter(pieces) == Counter(seen.values())


@pytest.mark.parametrize("kind", fixtures.KINDS)
@pytest.mark.parametrize("level", [1, 6, 9])
def test_exact_for_thread_counts(corpus, kind, level):
    gz = corpus.gz(kind, 1_000_000, level)
    seq = dc.decompress_sequential(gz)
    for n in (1, 2, 4, 8, 16):
        assert pe.decompress_parallel(gz, n, min_chunk_size=1 << 14, verify_crc=True) == seq


def test_n1_checks_crc():
    gz = bytearray(fixtures.reference_compress(fixtures.random_text(100_000, 3), 6))
    gz[-8] ^= 1
    with pytest.raises(CrcMismatch):
        pe.decompress_parallel(bytes(gz), 1)


def test_verify_crc_catches_mismatch(corpus):
    gz = bytearray(corpus.gz("text", 4_000_000, 6))
    gz[-8] ^= 1
    with pytest.raises(CrcMismatch):
        pe.decompress_parallel(bytes(gz), 4, min_chunk_size=SMALL, verify_crc=True, ordered=False)
    pe.decompress_parallel(bytes(gz), 4, min_chunk_size=SMALL, verify_crc=False)


def test_sections_bound_memory(corpus):
    gz = corpus.gz("fastq", 4_000_000, 6)
    raw = corpus.raw("fastq", 4_000_000)
    sink = io.BytesIO()
    section = 300_000
    rep = pe.parallel_decompress_to(sink, gz, 3, section_size=section, min_chunk_size=1 << 15,
                                    verify_crc=True)
    assert sink.getvalue() == raw
    assert rep.sections > 3 and rep.crc32 is not None
    # a section holds its compressed bytes expanded (at most ~4x here) as 2-byte symbols
    full = pe.parallel_decompress_to(io.BytesIO(), gz, 3, min_chunk_size=1 << 15)
    assert rep.peak_symbol_bytes < full.peak_symbol_bytes / 2
    bound = 2 * 8 * (section + (1 << 21)) + 3 * 2 * WINDOW * 2
    assert rep.peak_symbol_bytes <= bound


def test_binary_input_suggests_sequential():
    gz = fixtures.reference_compress(os.urandom(300_000), 6)
    with pytest.raises(NoSyncPoint, match="sequential"):
        pe.decompress_parallel(gz, 4)
    assert len(pe.decompress_parallel(gz, 1)) == 300_000


def test_multi_member_rejected():
    a = fixtures.reference_compress(b"one\n" * 1000, 6)
    with pytest.raises(MultiMember):
        pe.decompress_parallel(a + a, 2)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000), st.sampled_from(fixtures.KINDS), st.sampled_from([1, 6, 9]),
       st.integers(2, 12), st.booleans())
def test_exactness_property(seed, kind, level, n, ordered):
    raw = fixtures.generate(kind, 600_000, seed)
    gz = fixtures.reference_compress(raw, level)
    out = pe.decompress_parallel(gz, n, min_chunk_size=1 << 13, ordered=True, verify_crc=ordered)
    assert out == raw
