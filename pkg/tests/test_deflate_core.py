import gzip
import subprocess
import warnings
import zlib

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gzpar import deflate_core as dc
from gzpar import fixtures
from gzpar.errors import (BadMagic, CrcMismatch, InvalidBtype, InvalidCodeDescription,
                          MultiMember, OffsetTooFar, StoredLenMismatch, Truncated,
                          UnsupportedMethod)
from reference_inflate import inflate_gzip, inflate_raw
from streams import BitWriter, fixed_block, gzip_wrap, lits, one_fixed_gzip, stored_block


# gzip header

def test_minimal_header():
    h = dc.parse_gzip_header(bytes.fromhex("1f8b0800000000000003"))
    assert h.deflate_start == 10
    assert h.compression_method == 8
    assert h.os == 3


def test_header_with_name(tmp_path):
    f = tmp_path / "a.txt"
    f.write_bytes(b"hello hello hello\n")
    tool = fixtures.reference_tool()
    if tool is None:
        pytest.skip("no system gzip")
    gz = subprocess.run([tool, "-c", str(f)], stdout=subprocess.PIPE, check=True).stdout
    h = dc.parse_gzip_header(gz)
    assert h.flags & dc.FNAME
    assert h.name == b"a.txt"
    assert h.deflate_start == 10 + 6
    # the offset is right if an independent inflater decodes from there
    out, _, _, _ = inflate_raw(gz, 8 * h.deflate_start)
    assert out == b"hello hello hello\n"


def test_header_optional_fields():
    extra = b"AB\x02\x00xy"
    head = (b"\x1f\x8b\x08" + bytes([dc.FEXTRA | dc.FNAME | dc.FCOMMENT | dc.FHCRC])
            + b"\0" * 6 + struct_h(len(extra)) + extra + b"n\0" + b"comment\0" + b"\0\0")
    h = dc.parse_gzip_header(head + b"\x03\x00")
    assert h.extra == extra
    assert h.name == b"n"
    assert h.comment == b"comment"
    assert h.deflate_start == len(head)


def struct_h(n):
    return n.to_bytes(2, "little")


def test_header_errors():
    with pytest.raises(BadMagic):
        dc.parse_gzip_header(b"PK\x03\x04" + b"\0" * 20)
    with pytest.raises(UnsupportedMethod):
        dc.parse_gzip_header(b"\x1f\x8b\x07" + b"\0" * 20)
    with pytest.raises(Truncated):
        dc.parse_gzip_header(b"\x1f\x8b\x08")
    with pytest.raises(Truncated):
        dc.parse_gzip_header(b"\x1f\x8b\x08\x08" + b"\0" * 6 + b"unterminated")


# block headers

def test_stored_header_by_hand():
    w = BitWriter()
    stored_block(w, b"abcd", final=True)
    h, cur = dc.read_block_header(dc.BitCursor(0), w.getvalue())
    assert (h.bfinal, h.btype_name, h.stored_len) == (True, "Stored", 4)
    assert cur.absolute == 40


def test_dynamic_first_block(corpus):
    gz = corpus.gz("dna", 1_000_000, 6)
    start = dc.parse_gzip_header(gz).deflate_start
    h, cur = dc.read_block_header(dc.BitCursor(start), gz)
    ref = corpus.boundaries("dna", 1_000_000, 6)["blocks"][0]
    assert (h.bfinal, h.btype) == (False, 2) == (bool(ref["bfinal"]), ref["btype"])
    assert len(h.lit_len_lengths) >= 257


def test_invalid_btype():
    w = BitWriter()
    w.put(0, 1)
    w.put(3, 2)
    with pytest.raises(InvalidBtype):
        dc.read_block_header(dc.BitCursor(0), w.getvalue() + b"\0" * 8)


def test_oversubscribed_code_length_code():
    w = BitWriter()
    w.put(1, 1)
    w.put(2, 2)
    w.put(0, 5)  # hlit
    w.put(0, 5)  # hdist
    w.put(0, 4)  # 4 code length codes
    for _ in range(4):
        w.put(1, 3)  # four codes of length 1
    with pytest.raises(InvalidCodeDescription):
        dc.read_block_header(dc.BitCursor(0), w.getvalue() + b"\0" * 16)


def test_stored_len_mismatch():
    w = BitWriter()
    w.put(1, 1)
    w.put(0, 2)
    w.align()
    w.put(4, 16)
    w.put(4, 16)
    with pytest.raises(StoredLenMismatch):
        dc.read_block_header(dc.BitCursor(0), w.getvalue() + b"abcd")


# block bodies

def test_overlapping_copy():
    w = BitWriter()
    fixed_block(w, [ord("A"), (1, 4)], final=True)
    raw = w.getvalue()
    h, cur = dc.read_block_header(dc.BitCursor(0), raw)
    ctx = dc.Context()
    sink = bytearray()
    stats, _ = dc.decode_block(cur, raw, h, ctx, sink)
    assert bytes(sink) == b"AAAAA"
    assert (stats.literals, stats.matches, stats.sum_lengths) == (1, 1, 4)


def test_offset_too_far():
    w = BitWriter()
    fixed_block(w, lits(b"x" * 50) + [(100, 3)], final=True)
    raw = w.getvalue()
    h, cur = dc.read_block_header(dc.BitCursor(0), raw)
    with pytest.raises(OffsetTooFar):
        dc.decode_block(cur, raw, h, dc.Context())
    with pytest.raises(OffsetTooFar):
        dc.decompress_sequential(gzip_wrap(raw, b"x" * 53))


def test_offset_into_supplied_context():
    w = BitWriter()
    fixed_block(w, [(100, 3)], final=True)
    raw = w.getvalue()
    h, cur = dc.read_block_header(dc.BitCursor(0), raw)
    ctx = dc.Context(bytes(range(100)))
    sink = bytearray()
    dc.decode_block(cur, raw, h, ctx, sink)
    assert bytes(sink) == bytes([0, 1, 2])
    assert ctx.back(1) == 2 and len(ctx) == 103


def test_abc_repeat_has_offset_three():
    data = b"abc" * 300
    gz = fixtures.reference_compress(data, 6)
    assert dc.decompress_sequential(gz) == data
    _, _, _, trace = inflate_gzip(gz, tokens=True)
    assert any(t[0] == "match" and t[1] == 3 for t in trace)
    st_ = dc.measure_token_stats(gz)
    assert st_.o_a is not None


# whole members

def test_empty_member():
    gz = fixtures.reference_compress(b"", 6)
    m = dc.inflate_member(gz)
    assert m.output.size == 0 and m.trailer.crc32 == 0


def test_dna_roundtrip_and_token_stats(corpus):
    raw = corpus.raw("dna", 1_000_000)
    gz = corpus.gz("dna", 1_000_000, 6)
    assert dc.decompress_sequential(gz) == raw
    st_ = dc.measure_token_stats(gz)
    assert 2000 <= st_.o_a <= 6000
    _, _, _, trace = inflate_gzip(gz, tokens=True)
    matches = [t for t in trace if t[0] == "match"]
    assert st_.o_a == pytest.approx(sum(m[1] for m in matches) / len(matches))
    assert st_.l_a == pytest.approx(sum(m[2] for m in matches) / len(matches))


def test_all_literal_block_has_no_offset():
    st_ = dc.measure_token_stats(one_fixed_gzip(lits("abcdef"), b"abcdef"))
    assert st_.o_a is None and st_.l_a is None
    assert st_.literal_fractions == [1.0]


def test_rle_mean_length_near_max():
    gz = fixtures.reference_compress(b"x" * 100_000, 6)
    assert dc.measure_token_stats(gz).l_a > 250


def test_multi_member_rejected():
    a = gzip.compress(b"first", mtime=0)
    with pytest.raises(MultiMember) as exc:
        dc.decompress_sequential(a + gzip.compress(b"second", mtime=0))
    assert exc.value.member_offset == len(a)


def test_trailing_garbage_warns():
    gz = gzip.compress(b"data", mtime=0)
    with pytest.warns(UserWarning):
        assert dc.decompress_sequential(gz + b"junk") == b"data"


def test_crc_and_isize_checks():
    gz = bytearray(gzip.compress(b"payload", mtime=0))
    bad_crc = bytes(gz[:-8]) + (zlib.crc32(b"payload") ^ 1).to_bytes(4, "little") + bytes(gz[-4:])
    with pytest.raises(CrcMismatch):
        dc.decompress_sequential(bad_crc)
    bad_size = bytes(gz[:-4]) + (99).to_bytes(4, "little")
    with pytest.warns(UserWarning, match="ISIZE"):
        dc.decompress_sequential(bad_size)


def test_truncated_stream():
    gz = fixtures.reference_compress(fixtures.random_text(50_000, 1), 6)
    with pytest.raises(Truncated):
        dc.decompress_sequential(gz[:len(gz) // 2])
    with pytest.raises(Truncated):
        dc.decompress_sequential(gz[:-4])


def test_stored_and_fixed_blocks_mixed():
    w = BitWriter()
    stored_block(w, b"hello ")
    fixed_block(w, lits("world ") + [(12, 6)])
    stored_block(w, b"", final=True)
    data = b"hello world hello "
    m = dc.inflate_member(gzip_wrap(w.getvalue(), data))
    assert m.output.tobytes() == data
    assert [b.btype for b in m.blocks] == [0, 1, 0]


@pytest.mark.parametrize("kind", ["text", "fastq", "fastq-like", "dna"])
@pytest.mark.parametrize("level", [1, 4, 6, 9])
def test_boundaries_match_reference_inflater(corpus, kind, level):
    gz = corpus.gz(kind, 300_000, level)
    m = dc.inflate_member(gz)
    out, blocks, end, _ = inflate_gzip(gz)
    assert m.output.tobytes() == out
    assert [(b.start_bit, b.end_bit, b.out_start, b.out_end) for b in m.blocks] == \
        [(b["start_bit"], b["end_bit"], b["out_start"], b["out_end"]) for b in blocks]
    # stats consistency: literals plus match lengths cover the output
    assert sum(b.literals + b.sum_lengths for b in m.blocks) == m.output.size


def test_context_history_and_window():
    ctx = dc.Context()
    ctx.append(np.arange(40000) % 251)
    assert len(ctx) == dc.WINDOW
    assert ctx.back(1) == 39999 % 251
    assert ctx.back(dc.WINDOW) == (40000 - dc.WINDOW) % 251
    with pytest.raises(OffsetTooFar):
        ctx.back(dc.WINDOW + 1)
    assert ctx.history().tolist() == (np.arange(40000 - dc.WINDOW, 40000) % 251).tolist()


def test_token_domain():
    assert repr(dc.Token.match(3, 258)) == "match(3, 258)"
    for bad in [(0, 3), (32769, 3), (1, 2), (1, 259)]:
        with pytest.raises(ValueError):
            dc.Token.match(*bad)
    with pytest.raises(ValueError):
        dc.Token.lit(256)


# properties

def _naive(tokens):
    out = bytearray()
    for t in tokens:
        if isinstance(t, int):
            out.append(t)
        else:
            off, length = t
            for _ in range(length):
                out.append(out[-off])
    return bytes(out)


@st.composite
def token_lists(draw):
    toks = [draw(st.integers(0, 255))]
    produced = 1
    for _ in range(draw(st.integers(0, 60))):
        if draw(st.booleans()):
            toks.append(draw(st.integers(0, 255)))
            produced += 1
        else:
            length = draw(st.integers(3, 258))
            toks.append((draw(st.integers(1, min(produced, dc.WINDOW))), length))
            produced += length
    return toks


@settings(max_examples=150, deadline=None)
@given(token_lists())
def test_fixed_block_matches_naive_copy(tokens):
    data = _naive(tokens)
    assert dc.decompress_sequential(one_fixed_gzip(tokens, data)) == data


@settings(max_examples=40, deadline=None)
@given(st.binary(max_size=20000), st.sampled_from([1, 6, 9]))
def test_roundtrip_zlib_streams(data, level):
    gz = gzip.compress(data, compresslevel=level, mtime=0)
    assert dc.decompress_sequential(gz) == data


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 9), st.integers(0, 10_000), st.sampled_from(fixtures.KINDS))
def test_roundtrip_reference_tool(level, seed, kind):
    data = fixtures.generate(kind, 20_000 + seed, seed)
    assert dc.decompress_sequential(fixtures.reference_compress(data, level)) == data


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 1000))
def test_matches_stay_inside_window(seed):
    data = fixtures.random_text(120_000, seed)
    _, _, _, trace = inflate_gzip(zlib_gz(data), tokens=True)
    assert all(t[1] <= dc.WINDOW for t in trace if t[0] == "match")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert dc.decompress_sequential(zlib_gz(data)) == data


def zlib_gz(data):
    return gzip.compress(data, compresslevel=6, mtime=0)
