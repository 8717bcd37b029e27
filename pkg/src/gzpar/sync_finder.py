"""Locating DEFLATE block starts from an arbitrary bit position."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import _inflate as K
from .deflate_core import Workspace, as_buffer
from .errors import NoSyncPoint

DEFAULT_ALLOWED = frozenset([0x09, 0x0A, 0x0D, *range(0x20, 0x7F)])


@dataclass(frozen=True)
class SyncConfig:
    min_block_size: int = 1024
    max_block_size: int = 4 << 20
    confirm_blocks: int = 5
    ascii_policy: frozenset = field(default=DEFAULT_ALLOWED)

    def __post_init__(self):
        if not self.min_block_size < self.max_block_size:
            raise ValueError("min_block_size must be below max_block_size")
        if self.confirm_blocks < 1:
            raise ValueError("confirm_blocks must be at least 1")

    @property
    def ascii_table(self):
        tab = np.zeros(256, dtype=np.bool_)
        tab[list(self.ascii_policy)] = True
        return tab


@dataclass(frozen=True)
class SyncResult:
    block_start: int
    blocks_confirmed: int
    trial_count: int
    seconds: float = 0.0


@dataclass(frozen=True)
class Accept:
    next_bit_pos: int
    block_bytes: int


@dataclass(frozen=True)
class Reject:
    reason: str


class _Scratch:
    def __init__(self, cfg: SyncConfig):
        self.ws = Workspace()
        self.out = np.empty(K.WINDOW + cfg.max_block_size + 1024, dtype=np.uint16)
        self.stats = np.zeros((cfg.confirm_blocks + 2, K.N_STAT_COLS), dtype=np.int64)


def try_candidate(bits, bit_pos: int, cfg: SyncConfig = SyncConfig()):
    """Decode one block at ``bit_pos`` under the sync checks.

    Checks, failing early: not final, valid type, valid code description,
    allowed bytes only, offsets within the window, size in bounds.
    """
    buf = as_buffer(bits)
    s = _Scratch(cfg)
    K.fill_fresh_context(s.out)
    flags = K.CHECK_ASCII | K.CHECK_SIZE | K.REJECT_FINAL
    status, end, outpos, nb = K.inflate_blocks(
        buf.data, buf.nbits, bit_pos, s.out, K.WINDOW, 0, 1 << 62, 1 << 62, 1, flags,
        cfg.ascii_table, cfg.min_block_size, cfg.max_block_size, s.stats, *s.ws.tables())
    if status != K.OK:
        return Reject(K.STATUS_NAMES[status])
    return Accept(int(end), int(outpos - K.WINDOW))


def find_next_block(bits, start_bit: int, cfg: SyncConfig = SyncConfig(),
                    end_bit: Optional[int] = None) -> SyncResult:
    """First bit position at or after ``start_bit`` that decodes as a block
    followed by ``cfg.confirm_blocks`` more valid blocks (or a valid final block).

    A candidate whose confirmation fails is abandoned and the scan resumes at
    the next bit, so true boundaries are never skipped.
    """
    buf = as_buffer(bits)
    limit = buf.nbits if end_bit is None else min(end_bit, buf.nbits)
    if start_bit >= limit:
        raise NoSyncPoint(f"start bit {start_bit} is past the searchable range")
    s = _Scratch(cfg)
    t0 = time.perf_counter()
    pos, confirmed, trials, last = K.sync_scan(
        buf.data, buf.nbits, start_bit, limit, cfg.confirm_blocks, cfg.ascii_table,
        cfg.min_block_size, cfg.max_block_size, s.out, s.stats, *s.ws.tables())
    elapsed = time.perf_counter() - t0
    if pos < 0:
        raise NoSyncPoint(f"no confirmable block start in bits [{start_bit}, {limit}); "
                          "the region may hold only the final block or non-text data")
    return SyncResult(int(pos), int(confirmed), int(trials), elapsed)
