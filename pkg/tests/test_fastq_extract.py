import pytest
from hypothesis import given, settings, strategies as st

from gzpar import fastq_extract as fx
from gzpar import fixtures
from gzpar.errors import NoResolvedBlock, NoSyncPoint
from gzpar.tracked_stream import project
from grammar_oracle import GRAMMAR, TABLE, oracle, planted_fastq, sym, table_blocks


def spans(data, **kw):
    return [(x.start, x.end, x.ambiguous) for x in fx.extract_sequences(data, cfg=fx.ExtractConfig(**kw))]


def test_config_validation():
    with pytest.raises(ValueError):
        fx.ExtractConfig(min_read_len=2)
    with pytest.raises(ValueError):
        fx.ExtractConfig(resolved_block_min_seqs=0)


def test_plain_read():
    data = b"\n" + b"ACGTACGTACGTACGTACGTACGTACGTACGTA" + b"\n"
    assert spans(data) == [(1, 34, False)]


def test_interior_undetermined_run():
    data = sym(b"\nACGT??????ACGTACGTACGTACGTACGTACGT\n")
    got = fx.extract_sequences(data)
    assert len(got) == 1 and got[0].ambiguous
    assert (got[0].start, got[0].end) == (1, 35)


def test_quality_lookalike_needs_flank():
    data = b"IIII" + b"ACGT" * 12 + b"IIII\n"
    assert spans(data) == []


def test_short_and_lowercase():
    short = b"\nACGTACGT\n"
    assert spans(short) == []
    assert spans(short, min_read_len=8) == [(1, 9, False)]
    lower = b"\n" + b"acgt" * 10 + b"\n"
    assert spans(lower) == []
    assert spans(lower, accept_lowercase=True) == [(1, 41, False)]


def test_undetermined_flanks():
    data = sym(b"??" + b"ACGT" * 10 + b"??x")
    assert spans(data) == [(2, 42, False)]


def test_block_boundary_flag():
    data = b"\n" + b"ACGT" * 10 + b"\n" + b"\n" + b"GATTACA" * 6 + b"\n"
    got = fx.extract_sequences(data, block_boundaries=[0, 20])
    assert [g.spans_block_boundary for g in got] == [True, False]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 100_000), st.integers(0, 200), st.sampled_from([3, 10, 32, 100]))
def test_matches_regex_oracle(seed, runs, min_len):
    data = planted_fastq(seed, runs)
    assert spans(data, min_read_len=min_len) == oracle(data, min_len)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.sampled_from([b"A", b"C", b"G", b"T", b"N", b"\n", b"?", b"x", b"+"]),
                max_size=300))
def test_matches_regex_oracle_on_noise(parts):
    data = sym(b"".join(parts))
    got = spans(data, min_read_len=3)
    assert got == oracle(data, 3)
    # order and non-overlap
    assert all(a[1] < b[0] for a, b in zip(got, got[1:]))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.sampled_from([b"A", b"C", b"\n", b"?", b"x"]), max_size=200))
def test_spans_are_maximal(parts):
    data = sym(b"".join(parts))
    text = project(data)
    for s, e, _ in spans(data, min_read_len=3):
        assert GRAMMAR.fullmatch(text[s - 1:e + 1])
        # one more letter on the right either breaks the grammar or steals the flank
        if e + 1 < len(text):
            assert not GRAMMAR.fullmatch(text[s - 1:e + 2]) or text[e] != ord("?")


def test_classify_truth_table():
    data, bounds = table_blocks()
    for i, (ok, amb, thr, expect) in enumerate(TABLE):
        cls = fx.classify_blocks(data, bounds, fx.ExtractConfig(resolved_block_min_seqs=thr))[i]
        assert (cls.seq_count, cls.ambiguous_count, cls.sequence_resolved) == (ok + amb, amb, expect)


def test_boundary_read_counts_where_it_starts():
    data = b"\n" + b"ACGT" * 10 + b"\n"
    cls = fx.classify_blocks(data, [0, 20], fx.ExtractConfig(resolved_block_min_seqs=1))
    assert [c.seq_count for c in cls] == [1, 0]


def test_seek_at_start_is_resolved():
    raw = fixtures.synthetic_fastq(2_000_000, 4)
    gz = fixtures.reference_compress(raw, 6)
    rep, out = fx.seek_and_report(gz, 0)
    assert rep.delay_bytes == 0 and rep.percent_unambiguous == 100.0
    assert rep.seq_total == raw.count(b"\n+\n")


def test_seek_reports(corpus):
    gz = corpus.gz("fastq", 16_000_000, 1)
    rows = fx.random_access_report(gz, [0.25])
    assert rows[0].resolved_block_found and rows[0].percent_unambiguous == 100.0
    with pytest.raises(ValueError):
        fx.random_access_report(gz, [1.0])
    with pytest.raises(NoSyncPoint):
        fx.seek_and_report(gz, len(gz) - 100)
    empty = fx.SeekReport(0.5, 1, 8, None, 0, 0, False)
    assert empty.percent_unambiguous is None
    with pytest.raises(NoResolvedBlock):
        fx.require_resolved(empty)
