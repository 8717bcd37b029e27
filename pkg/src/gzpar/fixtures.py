"""Seeded generators for test and experiment corpora.

Compression is delegated to the system ``gzip`` program (falling back to
Python's ``gzip`` module when it is absent); this package never compresses.
"""

from __future__ import annotations

import gzip
import shutil
import subprocess

import numpy as np

NUCLEOTIDES = np.frombuffer(b"ACGT", dtype=np.uint8)
KINDS = ("dna", "fastq-like", "fastq", "text")


def random_dna(size: int, seed: int = 0) -> bytes:
    rng = np.random.default_rng(seed)
    return rng.choice(NUCLEOTIDES, size).tobytes()


def fastq_like(size: int, seed: int = 0, dna_len: int = 150, filler_len: int = 300,
               filler: bytes = b"x") -> bytes:
    """Repeats of ``dna_len`` random nucleotides followed by ``filler_len`` filler bytes."""
    rng = np.random.default_rng(seed)
    unit = dna_len + filler_len
    units = -(-size // unit)
    arr = np.empty((units, unit), dtype=np.uint8)
    arr[:, :dna_len] = rng.choice(NUCLEOTIDES, (units, dna_len))
    arr[:, dna_len:] = filler[0]
    return arr.tobytes()[:size]


# binned Illumina-style quality symbols and their frequencies
_QUAL_SYMBOLS = np.frombuffer(b"F:,#", dtype=np.uint8)
_QUAL_WEIGHTS = np.array([0.82, 0.11, 0.05, 0.02])


def synthetic_fastq(size: int, seed: int = 0, read_len: int = 150, n_rate: float = 0.001,
                    run_name: str = "SYN") -> bytes:
    """Four-line FASTQ records with random reads, truncated to ``size`` bytes
    at a record boundary (at least one record is always kept)."""
    rng = np.random.default_rng(seed)
    per_record = read_len * 2 + len(run_name) + 40
    n = max(1, size // per_record + 1)
    seqs = rng.choice(NUCLEOTIDES, (n, read_len))
    seqs[rng.random((n, read_len)) < n_rate] = ord("N")
    quals = rng.choice(_QUAL_SYMBOLS, (n, read_len), p=_QUAL_WEIGHTS)
    quals[:, -3:] = np.where(rng.random((n, 3)) < 0.3, ord("#"), quals[:, -3:])
    parts = []
    total = 0
    for i in range(n):
        rec = b"@%s.%d %d length=%d\n%s\n+\n%s\n" % (
            run_name.encode(), i + 1, i + 1, read_len, seqs[i].tobytes(), quals[i].tobytes())
        if total + len(rec) > size and parts:
            break
        parts.append(rec)
        total += len(rec)
    return b"".join(parts)


def random_text(size: int, seed: int = 0, vocabulary: int = 5000) -> bytes:
    """Word salad over a random vocabulary, with punctuation and line breaks."""
    rng = np.random.default_rng(seed)
    letters = np.frombuffer(b"etaoinshrdlcumwfgypbvkjxqz", dtype=np.uint8)
    freq = 1.0 / np.arange(1, 27) ** 0.9
    lengths = rng.integers(1, 11, vocabulary)
    words = [rng.choice(letters, int(k), p=freq / freq.sum()).tobytes() for k in lengths]
    zipf = 1.0 / np.arange(1, vocabulary + 1)
    picks = rng.choice(vocabulary, size // 4 + 16, p=zipf / zipf.sum())
    seps = rng.choice([b" ", b" ", b" ", b" ", b" ", b", ", b". ", b"\n"], picks.size)
    out = bytearray()
    for w, s in zip(picks, seps):
        out += words[w]
        out += s
        if len(out) >= size:
            break
    return bytes(out[:size])


def generate(kind: str, size: int, seed: int = 0) -> bytes:
    if size < 0:
        raise ValueError("size must be non-negative")
    if kind == "dna":
        return random_dna(size, seed)
    if kind == "fastq-like":
        return fastq_like(size, seed)
    if kind == "fastq":
        return synthetic_fastq(size, seed)
    if kind == "text":
        return random_text(size, seed)
    raise ValueError(f"unknown fixture kind {kind!r}; expected one of {KINDS}")


def reference_tool():
    return shutil.which("gzip")


def reference_compress(data: bytes, level: int = 6) -> bytes:
    """Compress with the system gzip (``-n``, so output is reproducible)."""
    if not 1 <= level <= 9:
        raise ValueError("gzip level must be in 1..9")
    tool = reference_tool()
    if tool:
        proc = subprocess.run([tool, "-n", f"-{level}", "-c"], input=data,
                              stdout=subprocess.PIPE, check=True)
        return proc.stdout
    return gzip.compress(data, compresslevel=level, mtime=0)
