"""Per-user chirp-rate partition, frame layout, and collision resolution.

User u owns the disjoint rate range [(u-1)*P+1, u*P] and announces itself
with a preamble of base chirps at the range minimum, so the gateway can
detect arrivals per user and demodulate each user on its own grid rows.
Colliding payload symbols (symbol-granular arrival offsets) are resolved
by peak-detection SIC: decode the strongest user, rebuild its waveform at
the committed peak energy, find the unknown channel phase by sweeping K
candidate rotations until the residual energy at the detected peaks drops
below beta = 2(1-cos(pi/K)) of the committed energy, subtract, repeat.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import codec, modem, zc
from .channel import draw_fading_batch, ebn0_to_n0
from .config import SystemConfig


@dataclass(frozen=True)
class UserProfile:
    """Rate-range assignment of one user."""

    user_id: int
    min_rate: int
    max_rate: int
    preamble_rate: int


def assign_rates(user_id: int, n_rates: int, prime: int) -> UserProfile:
    """Rate range [(u-1)*P+1, u*P] and preamble rate for user u (1-based)."""
    if user_id < 1 or n_rates < 1:
        raise ValueError("user_id and n_rates must be >= 1")
    lo = (user_id - 1) * n_rates + 1
    hi = user_id * n_rates
    if hi > prime - 1:
        raise ValueError(
            f"user {user_id} needs rates up to {hi} but prime {prime} caps them at {prime - 1}")
    return UserProfile(user_id=user_id, min_rate=lo, max_rate=hi, preamble_rate=lo)


def user_config(cfg: SystemConfig, user_id: int) -> SystemConfig:
    """The base config shifted onto user_id's rate range."""
    profile = assign_rates(user_id, cfg.n_rates, cfg.prime)
    return cfg.with_min_rate(profile.min_rate)


@dataclass
class Frame:
    """Preamble + placeholder sync/SFD markers + payload waveforms."""

    preamble: list[np.ndarray]
    sync: list[np.ndarray]
    sfd: list[np.ndarray]
    payload: list[np.ndarray]

    def samples(self) -> np.ndarray:
        parts = self.preamble + self.sync + self.sfd + self.payload
        return np.concatenate(parts) if parts else np.zeros(0, dtype=np.complex128)


def build_frame(payloads, cfg: SystemConfig, n_preamble: int = 8) -> Frame:
    """Frame for one user: n_preamble base chirps at cfg.min_rate, then the payload symbols."""
    base = np.sqrt(cfg.symbol_energy) * zc.zc_sequence(cfg.prime, cfg.min_rate, 0)
    table = codec.comb_table(cfg.n_cells, cfg.n_active)
    symbols = codec.encode_batch(np.asarray(payloads, dtype=np.int64), table)
    waves = [modem.modulate(s, cfg) for s in symbols]
    return Frame(preamble=[base.copy() for _ in range(n_preamble)],
                 sync=[], sfd=[], payload=waves)


def detect_preamble(rx, profile: UserProfile, cfg: SystemConfig,
                    n_preamble: int = 8, min_ratio: float = 4.0) -> int | None:
    """Symbol-granular arrival offset of profile's preamble, or None if absent.

    For each candidate offset the dechirp power spectra of n_preamble
    consecutive symbol windows are summed (every preamble chirp peaks in
    bin 0, so the peak accumulates coherently across the run); the best
    offset wins, and the frame counts as present only when its peak bin
    carries at least min_ratio times the median off-peak bin energy.
    """
    rx = np.asarray(rx)
    n = cfg.prime
    n_slots = len(rx) // n
    if n_slots < n_preamble:
        return None
    windows = rx[: n_slots * n].reshape(n_slots, n)
    ref = zc.conj_dechirp(n, profile.preamble_rate)
    spectra2 = np.abs(np.fft.fft(windows * ref[None, :], axis=1)) ** 2
    runs = np.cumsum(spectra2, axis=0)
    runs = np.concatenate([np.zeros((1, n)), runs], axis=0)
    summed = runs[n_preamble:] - runs[:-n_preamble]  # (candidates, n)
    peaks = summed.max(axis=1)
    best = int(np.argmax(peaks))
    spectrum = summed[best]
    k_peak = int(np.argmax(spectrum))
    floor = float(np.median(np.delete(spectrum, k_peak)))
    if peaks[best] <= 0.0 or peaks[best] < min_ratio * floor:
        return None
    return best


def peak_energy(grid: np.ndarray, n_active: int) -> float:
    """Sum of the n_active largest |grid|^2 entries."""
    mag2 = np.abs(np.asarray(grid)).ravel() ** 2
    if n_active > mag2.size:
        raise ValueError(f"cannot take {n_active} peaks from {mag2.size} cells")
    return float(np.partition(mag2, mag2.size - n_active)[-n_active:].sum())


def cancellation_coefficient(k_phases: int) -> float:
    """Residual-energy acceptance threshold beta = (2 sin(pi/2K))^2 = 2(1-cos(pi/K))."""
    if k_phases < 1:
        raise ValueError("k_phases must be >= 1")
    return float(2.0 * (1.0 - np.cos(np.pi / k_phases)))


def reconstruct(cells, energy: float, cfg: SystemConfig) -> np.ndarray:
    """Cancellation waveform: the detected symbol re-modulated at the committed energy.

    The peak-energy sum approximates |h|^2*Es, so the amplitude self-calibrates
    the fading magnitude; only the phase stays unknown.
    """
    if energy < 0:
        raise ValueError("energy must be non-negative")
    if energy == 0.0:
        return np.zeros(cfg.prime, dtype=np.complex128)
    return modem.modulate(cells, cfg.with_energy(energy))


@dataclass
class CollisionScene:
    """One composite reception: per-user frames at symbol-granular offsets.

    Every user transmits n_symbols payload symbols; user u's j-th symbol
    occupies global slot offsets[u-1] + j, so colliding symbols align to
    whole slots and each slot is an independent collision problem.
    """

    cfg: SystemConfig
    offsets: np.ndarray
    payloads: list[np.ndarray]
    gains: np.ndarray
    stream: np.ndarray
    n_symbols: int

    @property
    def n_users(self) -> int:
        return len(self.payloads)

    @property
    def n_slots(self) -> int:
        return int(self.offsets.max()) + self.n_symbols


def build_collision_scene(cfg: SystemConfig, n_users: int, n_symbols: int,
                          rng: np.random.Generator, m: float | None = 3.0,
                          ebn0_db: float | None = None,
                          offsets=None, offset_spread: int = 8) -> CollisionScene:
    """Random payloads, independent per-user fading, optional AWGN."""
    bits = cfg.bits_per_symbol
    if offsets is None:
        offsets = np.concatenate(
            [[0], rng.integers(0, offset_spread + 1, size=n_users - 1)])
    offsets = np.asarray(offsets, dtype=np.int64)
    gains = (np.ones(n_users, dtype=np.complex128) if m is None
             else draw_fading_batch(m, n_users, rng))

    n = cfg.prime
    n_slots = int(offsets.max()) + n_symbols
    stream = np.zeros(n_slots * n, dtype=np.complex128)
    payloads = []
    for u in range(1, n_users + 1):
        ucfg = user_config(cfg, u)
        table = modem.cell_chirps(ucfg.sf, ucfg.prime, ucfg.min_rate, ucfg.n_rates)
        ctab = codec.comb_table(cfg.n_cells, cfg.n_active)
        d = rng.integers(0, 1 << bits, size=n_symbols)
        cells = codec.encode_batch(d, ctab)
        scale = np.sqrt(cfg.symbol_energy / (n * cfg.n_active))
        waves = scale * table[cells].sum(axis=1)
        start = offsets[u - 1] * n
        stream[start : start + n_symbols * n] += gains[u - 1] * waves.ravel()
        payloads.append(d)
    if ebn0_db is not None:
        n0 = ebn0_to_n0(ebn0_db, cfg)
        noise = np.sqrt(n0 / 2.0) * (rng.standard_normal(stream.shape)
                                     + 1j * rng.standard_normal(stream.shape))
        stream = stream + noise
    return CollisionScene(cfg=cfg, offsets=offsets, payloads=payloads,
                          gains=gains, stream=stream, n_symbols=n_symbols)


@dataclass
class MultiuserDecode:
    """Per-user decode of a collision scene."""

    payloads: list[np.ndarray]
    cells: list[np.ndarray]
    cancel_failures: int = 0
    committed_phases: list[np.ndarray] = field(default_factory=list)


def _grid_of(window: np.ndarray, ucfg: SystemConfig) -> np.ndarray:
    bank = modem.dechirp_bank(ucfg.prime, ucfg.min_rate, ucfg.n_rates)
    return np.fft.fft(window[None, :] * bank, axis=1)[:, : ucfg.n_bins]


def direct_demod_multiuser(scene: CollisionScene) -> MultiuserDecode:
    """Baseline: every user decoded from the raw stream, no cancellation."""
    cfg = scene.cfg
    n = cfg.prime
    ctab = codec.comb_table(cfg.n_cells, cfg.n_active)
    out_d, out_c = [], []
    for u in range(1, scene.n_users + 1):
        ucfg = user_config(cfg, u)
        bank = modem.dechirp_bank(ucfg.prime, ucfg.min_rate, ucfg.n_rates)
        start = int(scene.offsets[u - 1])
        windows = scene.stream[start * n : (start + scene.n_symbols) * n].reshape(-1, n)
        grids = np.fft.fft(windows[:, None, :] * bank[None, :, :], axis=2)[..., : cfg.n_bins]
        mag2 = np.abs(grids.reshape(scene.n_symbols, -1)) ** 2
        top = np.argpartition(-mag2, cfg.n_active - 1, axis=1)[:, : cfg.n_active]
        c_hat = np.sort(top.astype(np.int64), axis=1)
        out_d.append(codec.decode_batch(c_hat, ctab))
        out_c.append(c_hat)
    return MultiuserDecode(payloads=out_d, cells=out_c)


def pd_sic(scene: CollisionScene, k_phases: int = 8) -> MultiuserDecode:
    """Peak-detection SIC over every symbol slot of the scene.

    Per slot: users are consumed in decreasing committed peak-energy order;
    all but the last are re-modulated at their committed energy, the phase
    grid theta_d = 2*pi*d/K is swept, and the first rotation that pushes the
    residual energy at the detected peaks below beta*E is subtracted from
    the slot (which every later demodulation of that slot then sees). If no
    rotation passes, the slot is left untouched and the failure is counted.
    """
    cfg = scene.cfg
    n = cfg.prime
    n_bins = cfg.n_bins
    n_act = cfg.n_active
    beta = cancellation_coefficient(k_phases)
    phases = np.exp(2j * np.pi * np.arange(k_phases) / k_phases)

    residual = scene.stream.astype(np.complex128, copy=True)
    ucfgs = {u: user_config(cfg, u) for u in range(1, scene.n_users + 1)}

    out_d = [np.empty(scene.n_symbols, dtype=np.int64) for _ in range(scene.n_users)]
    out_c = [np.empty((scene.n_symbols, n_act), dtype=np.int64)
             for _ in range(scene.n_users)]
    out_p = [np.full(scene.n_symbols, -1, dtype=np.int64) for _ in range(scene.n_users)]
    failures = 0

    for t in range(scene.n_slots):
        active = [u for u in range(1, scene.n_users + 1)
                  if scene.offsets[u - 1] <= t < scene.offsets[u - 1] + scene.n_symbols]
        if not active:
            continue
        window = residual[t * n : (t + 1) * n]
        grids = {u: _grid_of(window, ucfgs[u]) for u in active}
        energy = {u: peak_energy(grids[u], n_act) for u in active}

        first = True
        remaining = list(active)
        while remaining:
            chi = max(remaining, key=lambda u: (energy[u], -u))
            if not first:
                grids[chi] = _grid_of(window, ucfgs[chi])
            first = False
            rows, cols = modem.detect_peaks(grids[chi], n_act)
            cells = np.sort(rows.astype(np.int64) * n_bins + cols)
            j = t - int(scene.offsets[chi - 1])
            out_c[chi - 1][j] = cells
            out_d[chi - 1][j] = codec.decode(cells)
            remaining.remove(chi)
            if not remaining:
                break

            e_chi = energy[chi]
            x_rec = reconstruct(cells, e_chi, ucfgs[chi])
            y_r = grids[chi][rows, cols]
            y_x = _grid_of(x_rec, ucfgs[chi])[rows, cols]
            # DFT linearity: the grid of (window - e^{j theta} x_rec) at the
            # peak cells is y_r - e^{j theta} y_x, so the K-phase sweep needs
            # no further transforms.
            committed = -1
            for d in range(k_phases):
                e_hat = float(np.sum(np.abs(y_r - phases[d] * y_x) ** 2))
                if e_hat < beta * e_chi:
                    committed = d
                    break
            if committed >= 0:
                window -= phases[committed] * x_rec
                out_p[chi - 1][j] = committed
            else:
                failures += 1
            energy[chi] = 0.0
    return MultiuserDecode(payloads=out_d, cells=out_c, cancel_failures=failures,
                           committed_phases=out_p)
