"""Waveform synthesis and non-coherent grid demodulation.

modulate stacks the activated cells' chirps at amplitude
sqrt(Es/(N*L)) each; demod_grid dechirps the received vector at every
rate of the configured range and keeps the first 2^sf DFT bins per row,
giving the n_rates x 2^sf detection grid. Matched cells carry magnitude
|h|*sqrt(Es/L); mismatched-rate components spread flat at
|h|*sqrt(Es/(L*N)) per bin, so picking the L largest magnitudes
recovers the symbol without any phase reference.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from . import codec, zc
from .config import SystemConfig


@lru_cache(maxsize=32)
def cell_chirps(sf: int, prime: int, min_rate: int, n_rates: int) -> np.ndarray:
    """(n_cells, prime) table of unit-amplitude chirps, one row per grid cell."""
    n_bins = 1 << sf
    table = np.empty((n_rates * n_bins, prime), dtype=np.complex128)
    for cell in range(table.shape[0]):
        rate, offset = codec.rate_offset(cell, sf, prime, min_rate)
        table[cell] = zc.zc_sequence(prime, rate, offset) * np.sqrt(prime)
    table.setflags(write=False)
    return table


@lru_cache(maxsize=32)
def dechirp_bank(prime: int, min_rate: int, n_rates: int) -> np.ndarray:
    """(n_rates, prime) conjugate chirps for the configured rate range."""
    bank = np.stack([zc.conj_dechirp(prime, min_rate + i) for i in range(n_rates)])
    bank.setflags(write=False)
    return bank


def _validate_symbol(cells: np.ndarray, cfg: SystemConfig) -> np.ndarray:
    cells = np.asarray(cells, dtype=np.int64)
    if cells.shape != (cfg.n_active,):
        raise ValueError(f"expected {cfg.n_active} cells, got shape {cells.shape}")
    if np.any(cells < 0) or np.any(cells >= cfg.n_cells):
        raise ValueError(f"cells out of range [0, {cfg.n_cells}): {cells}")
    if np.any(np.diff(cells) <= 0):
        raise ValueError(f"cells must be strictly increasing: {cells}")
    return cells


def modulate(cells, cfg: SystemConfig) -> np.ndarray:
    """Transmit waveform sqrt(Es/(N*L)) * sum of the activated cells' chirps."""
    cells = _validate_symbol(cells, cfg)
    table = cell_chirps(cfg.sf, cfg.prime, cfg.min_rate, cfg.n_rates)
    scale = np.sqrt(cfg.symbol_energy / (cfg.prime * cfg.n_active))
    return scale * table[cells].sum(axis=0)


def demod_grid(rx, cfg: SystemConfig) -> np.ndarray:
    """(n_rates, 2^sf) complex grid: dechirp+DFT per rate, first 2^sf bins kept."""
    rx = np.asarray(rx)
    if rx.shape != (cfg.prime,):
        raise ValueError(f"rx must have length {cfg.prime}, got {rx.shape}")
    bank = dechirp_bank(cfg.prime, cfg.min_rate, cfg.n_rates)
    return np.fft.fft(rx[None, :] * bank, axis=1)[:, : cfg.n_bins]


def detect_peaks(grid: np.ndarray, n_active: int) -> tuple[np.ndarray, np.ndarray]:
    """0-based (rows, cols) of the n_active largest |grid| cells.

    Ordered by descending magnitude; exact ties fall back to ascending
    (row, col) position so detection is reproducible.
    """
    mag = np.abs(np.asarray(grid))
    if n_active > mag.size:
        raise ValueError(f"cannot pick {n_active} peaks from {mag.size} cells")
    order = np.argsort(-mag.ravel(), kind="stable")[:n_active]
    rows, cols = np.unravel_index(order, mag.shape)
    return rows, cols


def demodulate(rx, cfg: SystemConfig) -> tuple[np.ndarray, int]:
    """Estimated (sorted cell vector, payload integer) from one received symbol.

    The payload is the raw combinatorial rank of the detected cells; it can
    reach C(n_cells, L)-1, beyond the 2^eta_b transmit range, since peak
    detection may emit any cell combination.
    """
    grid = demod_grid(rx, cfg)
    rows, cols = detect_peaks(grid, cfg.n_active)
    cells = np.sort(np.array(
        [codec.cell_index(int(r) + 1, int(c) + 1, cfg.sf) for r, c in zip(rows, cols)],
        dtype=np.int64))
    return cells, codec.decode(cells)
