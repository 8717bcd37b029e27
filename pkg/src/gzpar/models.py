"""Closed-form model of how literals spread through DEFLATE-compressed random DNA.

Under lazy (non-greedy) matching, a literal is emitted whenever the next
position has a strictly longer match than the current one.  Treating matches
as independent events gives the literal probability ``p_l``, the expected
literal count per window ``E_l = p_l * W / (l_a + 2)`` and, block after block,
the fraction of bytes that are literals or copies of literals:
``L_i = 1 - (1 - L_1) ** i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .deflate_core import Token


@dataclass(frozen=True)
class ModelParams:
    W: int = 32768
    l_a: float = 7.6
    k_min: int = 3
    k_max: int = 258
    alphabet_size: int = 4

    def __post_init__(self):
        if self.k_min < 3:
            raise ValueError("k_min must be at least 3")
        if self.k_max > 258 or self.k_max < self.k_min:
            raise ValueError("k_max must lie in [k_min, 258]")
        if self.W < self.k_max:
            raise ValueError("W must be at least k_max")
        if not self.l_a > 0:
            raise ValueError("l_a must be positive")
        if self.alphabet_size < 2:
            raise ValueError("alphabet_size must be at least 2")


def _check_k(k, W):
    if not 1 <= k <= W:
        raise ValueError(f"need 1 <= k <= W, got k={k}, W={W}")


def log_miss_prob(k: int, W: int, alphabet_size: int = 4, poisson: bool = False) -> float:
    """Natural log of ``1 - p_k``: no match of length ``k`` among ``W - k + 1`` positions."""
    _check_k(k, W)
    q = float(alphabet_size) ** -k
    if poisson:
        return -q * (W - k + 1)
    return (W - k + 1) * math.log1p(-q)


def log10_miss_prob(k: int, W: int, alphabet_size: int = 4, poisson: bool = False) -> float:
    return log_miss_prob(k, W, alphabet_size, poisson) / math.log(10)


def match_prob(k: int, W: int, alphabet_size: int = 4, poisson: bool = False) -> float:
    """Probability that a length-``k`` string occurs in a random window of ``W`` bytes.

    Exact form ``1 - (1 - a^-k)^(W-k+1)``; ``poisson`` selects
    ``1 - exp(-a^-k (W-k+1))``.  Both are evaluated through ``log(1 - p)``.
    """
    return -math.expm1(log_miss_prob(k, W, alphabet_size, poisson))


def _match_probs(params: ModelParams) -> np.ndarray:
    ks = range(params.k_min, params.k_max + 2)
    return np.array([match_prob(k, params.W, params.alphabet_size) if k <= params.W else 0.0
                     for k in ks])


def literal_prob(params: ModelParams = ModelParams(), exact_max: bool = False) -> float:
    """``p_l = sum_k p_k (1 - p_{k+1}) p_{k+1}`` for ``k`` in ``[k_min, k_max]``.

    ``p_k (1 - p_{k+1})`` stands for "the longest match has length exactly k";
    ``exact_max`` uses the exact ``p_k - p_{k+1}`` instead, which is smaller
    when ``p_{k+1}`` is not negligible (small windows).
    """
    p = _match_probs(params)
    cur, nxt = p[:-1], p[1:]
    exactly = cur - nxt if exact_max else cur * (1.0 - nxt)
    return float(np.sum(exactly * nxt))


def expected_literals(params: ModelParams = ModelParams(), p_l: float | None = None):
    """Return ``(E_l, L_1)``: expected lazy-match literals per window and their fraction."""
    p_l = literal_prob(params) if p_l is None else p_l
    e = p_l * params.W / (params.l_a + 2)
    return e, e / params.W


@dataclass(frozen=True)
class ModelCurve:
    index: np.ndarray
    literal_fraction: np.ndarray

    @property
    def undetermined_fraction(self):
        return 1.0 - self.literal_fraction

    def rows(self):
        return [(int(i), float(l), float(1.0 - l))
                for i, l in zip(self.index, self.literal_fraction)]

    def __len__(self):
        return len(self.index)


def _check_l1(L_1, n_blocks):
    if not 0 < L_1 <= 1:
        raise ValueError("L_1 must lie in (0, 1]")
    if n_blocks < 1:
        raise ValueError("n_blocks must be positive")


def literal_fraction_curve(L_1: float, n_blocks: int) -> ModelCurve:
    """``L_i = 1 - (1 - L_1)^i`` for ``i = 1..n_blocks``."""
    _check_l1(L_1, n_blocks)
    i = np.arange(1, n_blocks + 1)
    return ModelCurve(i, -np.expm1(i * math.log1p(-L_1)) if L_1 < 1 else np.ones(n_blocks))


def literal_fraction_recurrence(L_1: float, n_blocks: int) -> ModelCurve:
    """Same curve built from ``L_{i+1} = L_1 + (1 - L_1) L_i``."""
    _check_l1(L_1, n_blocks)
    vals = np.empty(n_blocks)
    cur = L_1
    for j in range(n_blocks):
        vals[j] = cur
        cur = L_1 + (1 - L_1) * cur
    return ModelCurve(np.arange(1, n_blocks + 1), vals)


# Reference lazy parser.  Exhaustive match search: slow, but obviously right.

@njit(cache=True)
def _longest(s, i, W, k_min, k_max, prev_block):
    """Longest match for ``s[i:]``; returns (length, offset), length 0 if < k_min."""
    n = s.shape[0]
    cap = min(k_max, n - i)
    best = 0
    best_off = 0
    if prev_block:
        blk = i // W
        lo = (blk - 1) * W
        hi = blk * W
        if blk == 0:
            return 0, 0
    else:
        lo = max(0, i - W)
        hi = i
    for j in range(hi - 1, lo - 1, -1):
        lim = cap
        if prev_block:
            lim = min(lim, hi - j)
        m = 0
        while m < lim and s[j + m] == s[i + m]:
            m += 1
        if m > best:
            best = m
            best_off = i - j
            if best == cap:
                break
    if best < k_min:
        return 0, 0
    return best, best_off


@njit(cache=True)
def _lazy_parse(s, W, k_min, k_max, prev_block, kind, val, ln):
    n = s.shape[0]
    i = 0
    t = 0
    while i < n:
        l, off = _longest(s, i, W, k_min, k_max, prev_block)
        l2 = 0
        off2 = 0
        if i + 1 < n:
            l2, off2 = _longest(s, i + 1, W, k_min, k_max, prev_block)
        if l2 > l:
            kind[t] = 0
            val[t] = s[i]
            t += 1
            kind[t] = 1
            val[t] = off2
            ln[t] = l2
            t += 1
            i += 1 + l2
        elif l > 0:
            kind[t] = 1
            val[t] = off
            ln[t] = l
            t += 1
            i += l
        else:
            kind[t] = 0
            val[t] = s[i]
            t += 1
            i += 1
    return t


def _parse_arrays(s, W, k_min, k_max, previous_block):
    arr = np.frombuffer(bytes(s), dtype=np.uint8)
    if arr.size < 1:
        raise ValueError("cannot parse an empty string")
    kind = np.zeros(arr.size + 1, dtype=np.uint8)
    val = np.zeros(arr.size + 1, dtype=np.int64)
    ln = np.zeros(arr.size + 1, dtype=np.int64)
    t = _lazy_parse(arr, W, k_min, k_max, previous_block, kind, val, ln)
    return kind[:t], val[:t], ln[:t]


def simulate_nongreedy_parse(s, W: int, previous_block: bool = False, k_min: int = 3,
                             k_max: int = 258) -> list:
    """Lazy-matching parse of ``s`` into literal and match tokens.

    If the longest match at ``i+1`` is strictly longer than at ``i``, emit
    the literal ``s[i]`` then that match and continue after it; otherwise
    take the match at ``i`` if any, else a literal.  Ties in length go to the
    nearest source.  With ``previous_block`` the string is cut into blocks
    of ``W`` bytes and matches must lie entirely inside the preceding block.
    """
    kind, val, ln = _parse_arrays(s, W, k_min, k_max, previous_block)
    return [Token.lit(int(v)) if k == 0 else Token.match(int(v), int(l))
            for k, v, l in zip(kind, val, ln)]


def count_block_literals(s, W: int, previous_block: bool = True):
    """Literal tokens per ``W``-byte block of the lazy parse of ``s``."""
    kind, val, ln = _parse_arrays(s, W, 3, 258, previous_block)
    pos = np.concatenate([[0], np.cumsum(np.where(kind == 0, 1, ln))[:-1]])
    nblocks = -(-len(s) // W)
    return np.bincount(pos[kind == 0] // W, minlength=nblocks)


@njit(cache=True)
def _sim_lazy_literal(seed, trials, W, a, k_min, k_max, independent):
    np.random.seed(seed)
    span = k_max + 2
    both = np.empty(W + 2 * span, dtype=np.uint8)
    hits = 0
    for _ in range(trials):
        for j in range(both.shape[0]):
            both[j] = np.random.randint(a)
        # the second position reads its own fresh letters when independent
        second = W + span if independent else W + 1
        l = 0
        l2 = 0
        for src in range(W):
            m = 0
            while m < k_max and src + m < W and both[src + m] == both[W + m]:
                m += 1
            if m > l:
                l = m
            m = 0
            while m < k_max and src + m < W and both[src + m] == both[second + m]:
                m += 1
            if m > l2:
                l2 = m
        if l >= k_min and l2 > l:
            hits += 1
    return hits


def simulate_literal_prob(W: int, trials: int, seed: int = 0, alphabet_size: int = 4,
                          k_min: int = 3, k_max: int = 258, independent: bool = True) -> float:
    """Monte-Carlo estimate of ``p_l`` against a random block of ``W`` letters.

    A lazy literal occurs when the first position has a match of at least
    ``k_min`` and the second a strictly longer one.  With ``independent`` the
    two positions read unrelated letters, as the closed form assumes;
    otherwise they are consecutive positions of one random string.
    """
    hits = _sim_lazy_literal(seed, trials, W, alphabet_size, k_min, k_max, independent)
    return hits / trials


def model_rows(params: ModelParams = ModelParams(), n_blocks: int = 100):
    """CSV-ready ``(i, L_i, 1 - L_i)`` rows of the default model curve."""
    _, l1 = expected_literals(params)
    return literal_fraction_curve(l1, n_blocks).rows()
