"""Bit <-> activated-cell mapping via the combinatorial number system.

A payload integer D in [0, C(n_cells, L)) maps bijectively to the strictly
increasing cell vector s with D = sum_i C(s_i, i+1); the grid cell
s = (row-1)*2^sf + col then yields the chirp rate r = floor(s/2^sf) + min_rate
and the offset q solving mod(r*q, N) = s mod 2^sf (N prime, so r is
invertible).
"""

from __future__ import annotations

import math

import numpy as np


def bits_per_symbol(n_cells: int, n_active: int) -> int:
    """floor(log2 C(n_cells, n_active)), computed exactly on big integers."""
    if not 1 <= n_active <= n_cells:
        raise ValueError(f"need 1 <= n_active <= n_cells, got {n_active}, {n_cells}")
    c = math.comb(n_cells, n_active)
    if c < 2:
        raise ValueError(f"C({n_cells},{n_active}) = {c} carries no bits")
    return c.bit_length() - 1


def encode(d: int, n_cells: int, n_active: int) -> np.ndarray:
    """Map payload integer d to its strictly increasing cell vector.

    Greedy from the top: pick the largest s with C(s, k) <= remainder for
    k = n_active down to 1. Accepts the full combinatorial range
    [0, C(n_cells, n_active)); the transmit path restricts d to 2^eta_b values.
    """
    d = int(d)
    if not 0 <= d < math.comb(n_cells, n_active):
        raise ValueError(f"payload {d} outside [0, C({n_cells},{n_active}))")
    cells = np.empty(n_active, dtype=np.int64)
    rem = d
    hi = n_cells  # exclusive upper bound for the next (largest) element
    for k in range(n_active, 0, -1):
        lo = k - 1  # C(lo, k) = 0 <= rem always holds
        while lo + 1 < hi:
            mid = (lo + hi) // 2
            if math.comb(mid, k) <= rem:
                lo = mid
            else:
                hi = mid
        cells[k - 1] = lo
        rem -= math.comb(lo, k)
        hi = lo
    return cells


def decode(cells) -> int:
    """Inverse of encode: D = sum_i C(cells[i], i+1) for ascending cells."""
    cells = np.asarray(cells, dtype=np.int64)
    if cells.ndim != 1 or cells.size == 0:
        raise ValueError("cells must be a non-empty 1-D index vector")
    if np.any(cells[1:] <= cells[:-1]) or cells[0] < 0:
        raise ValueError(f"cells must be strictly increasing and non-negative: {cells}")
    return sum(math.comb(int(c), i + 1) for i, c in enumerate(cells))


def comb_table(n_cells: int, n_active: int) -> np.ndarray:
    """C(a, k) for a in [0, n_cells], k in [0, n_active], as an int64 matrix.

    Raises if any entry would overflow int64 (vectorized codec paths then
    fall back to exact big-integer arithmetic).
    """
    if math.comb(n_cells, n_active) > np.iinfo(np.int64).max:
        raise OverflowError("combination table exceeds int64")
    table = np.zeros((n_cells + 1, n_active + 1), dtype=np.int64)
    table[:, 0] = 1
    for k in range(1, n_active + 1):
        # C(a, k) = C(a-1, k) + C(a-1, k-1)
        table[1:, k] = np.cumsum(table[:-1, k - 1])
    return table


def encode_batch(d: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Vectorized encode for a batch of payload integers using comb_table."""
    n_active = table.shape[1] - 1
    rem = np.asarray(d, dtype=np.int64).copy()
    cells = np.empty((rem.size, n_active), dtype=np.int64)
    for k in range(n_active, 0, -1):
        # After subtracting C(s_k, k) the remainder is < C(s_k, k-1), so the
        # greedy search never has to be clipped below the previous element.
        col = table[:, k]
        s = np.searchsorted(col, rem, side="right") - 1
        cells[:, k - 1] = s
        rem -= col[s]
    return cells


def decode_batch(cells: np.ndarray, table: np.ndarray) -> np.ndarray:
    """Vectorized decode of ascending cell rows using comb_table."""
    cells = np.asarray(cells, dtype=np.int64)
    k = np.arange(1, cells.shape[1] + 1)
    return table[cells, k].sum(axis=1)


def rate_offset(cell: int, sf: int, prime: int, min_rate: int = 1) -> tuple[int, int]:
    """Chirp rate and offset of one grid cell.

    rate = floor(cell / 2^sf) + min_rate; offset solves
    mod(rate*offset, prime) = cell mod 2^sf via the modular inverse.
    """
    n_bins = 1 << sf
    cell = int(cell)
    if cell < 0:
        raise ValueError(f"cell must be non-negative, got {cell}")
    rate = cell // n_bins + min_rate
    target = cell % n_bins
    offset = (target * pow(rate, -1, prime)) % prime
    return rate, offset


def rate_offset_arrays(cells, sf: int, prime: int, min_rate: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """rate_offset over a cell vector; returns (rates, offsets)."""
    pairs = [rate_offset(c, sf, prime, min_rate) for c in np.asarray(cells).ravel()]
    rates = np.array([p[0] for p in pairs], dtype=np.int64)
    offsets = np.array([p[1] for p in pairs], dtype=np.int64)
    return rates, offsets


def cell_index(row: int, col: int, sf: int) -> int:
    """Grid cell of the 1-based (row, col) demodulation coordinates."""
    n_bins = 1 << sf
    if not 1 <= col <= n_bins:
        raise ValueError(f"col must lie in [1, {n_bins}], got {col}")
    if row < 1:
        raise ValueError(f"row must be >= 1, got {row}")
    return (row - 1) * n_bins + col - 1


def int_to_bits(d: int, width: int) -> np.ndarray:
    """Little-endian bit vector of d (bit i carries weight 2^i)."""
    d = int(d)
    if d < 0 or d >> width:
        raise ValueError(f"{d} does not fit in {width} bits")
    return (d >> np.arange(width)) & 1


def bits_to_int(bits) -> int:
    """Inverse of int_to_bits."""
    bits = np.asarray(bits)
    return int((bits.astype(object) << np.arange(bits.size, dtype=object)).sum())
