"""gzpar command line: decompress, seek, analyze, model, gen-fixtures, bench.

Exit statuses: 0 success, 2 usage or parameter domain error, 3 I/O error,
4 malformed gzip/DEFLATE data, 5 no sync point, 6 CRC mismatch,
7 data-level failure (truth length mismatch, chunk planning problems).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from pathlib import Path

from . import __version__
from .errors import (ChunkDecodeError, CrcMismatch, FormatError, GzparError, LengthMismatch,
                     NoResolvedBlock, NoSyncPoint)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_FORMAT = 4
EXIT_SYNC = 5
EXIT_CRC = 6
EXIT_DATA = 7

SEEK_FRACTIONS = (1 / 4, 1 / 3, 1 / 2, 2 / 3)

log = logging.getLogger("gzpar")


class _NullSink:
    def write(self, b):
        return len(b)


def _read_input(path):
    if path == "-":
        return sys.stdin.buffer.read()
    return Path(path).read_bytes()


def _open_output(path):
    if path is None or path == "-":
        return sys.stdout.buffer, False
    return open(path, "wb"), True


def _threads(value):
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("thread count must be at least 1")
    return n


def _emit_csv(path, schema, rows, plot=None):
    from .reports import write_csv

    if path is None:
        return
    write_csv(path, schema, rows)
    if plot is not None:
        from .plotting import figure_path

        plot(figure_path(path))
    log.info("wrote %s", path)


def cmd_decompress(args):
    from .deflate_core import inflate_member
    from .parallel_engine import parallel_decompress_to

    data = _read_input(args.file)
    threads = 1 if args.file == "-" else (args.threads or os.cpu_count() or 1)
    sink, close = _open_output(args.output)
    try:
        if threads == 1 and not args.section_size:
            sink.write(memoryview(inflate_member(data, verify_crc=True).output))
        else:
            rep = parallel_decompress_to(sink, data, threads, ordered=args.ordered,
                                         verify_crc=args.verify_crc,
                                         section_size=args.section_size)
            log.info("%d bytes in %d chunks over %d sections", rep.bytes_written, rep.chunks,
                     rep.sections)
        sink.flush()
    finally:
        if close:
            sink.close()
    return EXIT_OK


def cmd_seek(args):
    from .fastq_extract import ExtractConfig, random_access_report, seek_and_report
    from .reports import seek_rows, write_csv

    data = _read_input(args.file)
    cfg = ExtractConfig(min_read_len=args.min_read_len, resolved_block_min_seqs=args.min_seqs)
    if args.at is not None:
        if not 0 <= args.at < len(data):
            raise ValueError(f"seek offset {args.at} outside the file ({len(data)} bytes)")
        report, out = seek_and_report(data, args.at, cfg, fraction=args.at / len(data))
        reports = [report]
        if args.seqs:
            _write_seqs(args.seqs, out, report, cfg)
    else:
        reports = random_access_report(data, args.frac or SEEK_FRACTIONS, cfg)
    if args.csv:
        from .plotting import plot_seek

        _emit_csv(args.csv, "seek", seek_rows(reports), lambda p: plot_seek(reports, p))
    else:
        write_csv(sys.stdout, "seek", seek_rows(reports))
    return EXIT_OK


def _write_seqs(path, out, report, cfg):
    """FASTA-like records of every extracted read; '?' marks undetermined bases.

    The header carries the output offset, the ambiguity flag and whether the
    read lies at or past the first sequence-resolved block."""
    from .fastq_extract import extract_sequences
    from .tracked_stream import project

    text = project(out.data)
    with open(path, "wb") as fh:
        for seq in extract_sequences(out.data, out.boundaries, cfg):
            resolved = report.delay_bytes is not None and seq.start >= report.delay_bytes
            fh.write(b">offset=%d ambiguous=%d resolved=%d\n%s\n"
                     % (seq.start, seq.ambiguous, resolved, text[seq.start:seq.end]))


def cmd_analyze(args):
    from .models import ModelParams, expected_literals, literal_fraction_curve
    from .reports import window_rows
    from .tracked_stream import annotate_propagation, count_undetermined_windows, \
        decode_from_block, vanishing_index

    data = _read_input(args.file)
    res = decode_from_block(data, args.start_block)
    window = args.window or max(1, int(round(res.o_a or 32768)))
    counts = count_undetermined_windows(res.tracked, window)
    vi = vanishing_index(counts)
    print(f"o_a={res.o_a or 0:.1f} l_a={res.l_a or 0:.2f} window={window} "
          f"windows={len(counts)} vanishes_at={vi if vi is not None else 'never'}",
          file=sys.stderr)

    def plot(path):
        from .plotting import plot_windows

        _, l1 = expected_literals(ModelParams())
        model = literal_fraction_curve(l1, max(1, len(counts)))
        plot_windows({Path(args.file).name: counts}, path, model)

    out = args.csv
    if out is None and not args.truth:
        from .reports import write_csv

        write_csv(sys.stdout, "windows", window_rows(counts))
    _emit_csv(out, "windows", window_rows(counts), plot)
    if args.truth:
        truth = Path(args.truth).read_bytes()
        rows = annotate_propagation(res.tracked, res.truth_slice(truth), window=args.class_window,
                                    stride=args.class_stride)
        from .plotting import plot_propagation

        cpath = args.classes_csv
        if cpath is None and out is not None:
            cpath = out[:-4] + "_classes.csv" if out.endswith(".csv") else out + "_classes.csv"
        if cpath is None:
            from .reports import write_csv

            write_csv(sys.stdout, "propagation", rows)
        else:
            _emit_csv(cpath, "propagation", rows, lambda p: plot_propagation(rows, p))
    return EXIT_OK


def cmd_model(args):
    from .models import (ModelParams, expected_literals, literal_fraction_curve, literal_prob,
                         log10_miss_prob, match_prob)
    from .plotting import plot_model

    params = ModelParams(W=args.W, l_a=args.la)
    print("k  p_k  log10(1-p_k)")
    for k in range(params.k_min, params.k_min + 10):
        print(f"{k}  {match_prob(k, params.W):.6g}  {log10_miss_prob(k, params.W):.4g}")
    p_l = literal_prob(params)
    e, l1 = expected_literals(params, p_l)
    print(f"p_l={p_l:.6g}\nE_l={e:.1f}\nL_1={l1:.5f}")
    curve = literal_fraction_curve(l1, args.blocks)
    _emit_csv(args.csv, "model", curve.rows(), lambda p: plot_model(curve, p))
    return EXIT_OK


def cmd_gen_fixtures(args):
    from .fixtures import generate, reference_compress

    raw = generate(args.kind, args.size, args.seed)
    if args.output is None:
        if args.levels:
            raise ValueError("--levels needs -o to name the output files")
        sys.stdout.buffer.write(raw)
        return EXIT_OK
    Path(args.output).write_bytes(raw)
    for lvl in args.levels or ():
        Path(f"{args.output}.{lvl}.gz").write_bytes(reference_compress(raw, lvl))
    return EXIT_OK


def cmd_bench(args):
    from .parallel_engine import parallel_decompress_to
    from .plotting import plot_speedup

    data = _read_input(args.file)
    rows = []
    base = None
    for t in args.threads:
        best = float("inf")
        for _ in range(args.repeat):
            t0 = time.perf_counter()
            rep = parallel_decompress_to(_NullSink(), data, t, ordered=False)
            best = min(best, time.perf_counter() - t0)
        base = base or best
        row = {"threads": t, "seconds": best, "mb_per_s": rep.bytes_written / best / 1e6,
               "speedup": base / best}
        rows.append(row)
        print(f"threads={t} {best:.3f}s {row['mb_per_s']:.1f} MB/s speedup={row['speedup']:.2f}",
              file=sys.stderr)
    _emit_csv(args.csv, "speedup", rows, lambda p: plot_speedup(rows, p))
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="gzpar", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("decompress", help="decompress a gzip file (parallel when -t > 1)")
    d.add_argument("file", help="input .gz file, or - for stdin (sequential only)")
    d.add_argument("-t", "--threads", type=_threads, default=None,
                   help="worker threads (default: available processors)")
    order = d.add_mutually_exclusive_group()
    order.add_argument("--ordered", dest="ordered", action="store_true", default=True)
    order.add_argument("--unordered", dest="ordered", action="store_false",
                       help="write chunks as they finish (benchmark mode)")
    d.add_argument("--verify-crc", action="store_true")
    d.add_argument("--section-size", type=int, default=None, metavar="BYTES",
                   help="process this many compressed bytes at a time")
    d.add_argument("-o", "--output", default=None)
    d.set_defaults(func=cmd_decompress)

    s = sub.add_parser("seek", help="random access: sync, decode and extract reads")
    s.add_argument("file")
    where = s.add_mutually_exclusive_group()
    where.add_argument("--at", type=int, default=None, metavar="OFFSET")
    where.add_argument("--frac", type=float, nargs="+", default=None, metavar="F")
    s.add_argument("--csv", default=None)
    s.add_argument("--seqs", default=None, metavar="PATH",
                   help="with --at, write extracted reads here as FASTA-like records")
    s.add_argument("--min-read-len", type=int, default=32)
    s.add_argument("--min-seqs", type=int, default=10)
    s.set_defaults(func=cmd_seek)

    a = sub.add_parser("analyze", help="undetermined characters per window from block 2")
    a.add_argument("file")
    a.add_argument("--window", type=int, default=None, metavar="BYTES",
                   help="window size (default: mean match offset)")
    a.add_argument("--start-block", type=int, default=1)
    a.add_argument("--truth", default=None, help="original file, for per-class counts")
    a.add_argument("--csv", default=None)
    a.add_argument("--classes-csv", default=None)
    a.add_argument("--class-window", type=int, default=32768)
    a.add_argument("--class-stride", type=int, default=32768)
    a.set_defaults(func=cmd_analyze)

    m = sub.add_parser("model", help="literal propagation model for random DNA")
    m.add_argument("--W", type=int, default=32768)
    m.add_argument("--la", type=float, default=7.6)
    m.add_argument("--blocks", type=int, default=100)
    m.add_argument("--csv", default=None)
    m.set_defaults(func=cmd_model)

    g = sub.add_parser("gen-fixtures", help="seeded test corpora")
    g.add_argument("--kind", choices=["dna", "fastq-like", "fastq", "text"], required=True)
    g.add_argument("--size", type=int, required=True)
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("-o", "--output", default=None)
    g.add_argument("--levels", type=int, nargs="*", default=None,
                   help="also write OUTPUT.<level>.gz with the system gzip")
    g.set_defaults(func=cmd_gen_fixtures)

    b = sub.add_parser("bench", help="throughput against thread count (unordered)")
    b.add_argument("file")
    b.add_argument("-t", "--threads", type=_threads, nargs="+", default=[1, 2, 4, 8])
    b.add_argument("--repeat", type=int, default=1)
    b.add_argument("--csv", default=None)
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="gzpar: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except OSError as exc:
        print(f"gzpar: {exc}", file=sys.stderr)
        return EXIT_IO
    except NoSyncPoint as exc:
        print(f"gzpar: sync failed: {exc}", file=sys.stderr)
        return EXIT_SYNC
    except CrcMismatch as exc:
        print(f"gzpar: {exc}", file=sys.stderr)
        return EXIT_CRC
    except (FormatError, ChunkDecodeError) as exc:
        print(f"gzpar: invalid data: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (LengthMismatch, NoResolvedBlock, GzparError) as exc:
        print(f"gzpar: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"gzpar: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
