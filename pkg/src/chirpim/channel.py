"""Block Nakagami-m fading and complex AWGN with Eb/N0 bookkeeping.

One fading draw applies to a whole symbol (and in collision scenes to a
whole frame). Noise is CN(0, N0) per complex sample: N0/2 per real
dimension, which keeps the per-cell grid noise power at N0 after the
normalized dechirp+DFT.
"""

from __future__ import annotations

import numpy as np

from .config import SystemConfig

OMEGA = 1.0  # fixed mean-square envelope spread


def draw_fading(m: float, rng: np.random.Generator) -> complex:
    """One complex gain with Nakagami-m envelope (|h|^2 ~ Gamma(m, 1/m)) and uniform phase."""
    return complex(draw_fading_batch(m, 1, rng)[0])


def draw_fading_batch(m: float, size: int, rng: np.random.Generator) -> np.ndarray:
    if m < 0.5:
        raise ValueError(f"Nakagami shape must be >= 0.5, got {m}")
    power = rng.gamma(m, OMEGA / m, size=size)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=size)
    return np.sqrt(power) * np.exp(1j * phase)


def add_awgn(x, n0: float, rng: np.random.Generator) -> np.ndarray:
    """x plus circular complex Gaussian noise of total variance n0 per sample."""
    x = np.asarray(x)
    if n0 <= 0:
        raise ValueError(f"n0 must be positive, got {n0}")
    sigma = np.sqrt(n0 / 2.0)
    return x + sigma * (rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape))


def ebn0_to_n0(ebn0_db: float, cfg: SystemConfig) -> float:
    """Noise level N0 = Es / (eta_b * 10^(Eb/N0 dB / 10))."""
    return cfg.symbol_energy / (cfg.bits_per_symbol * 10.0 ** (ebn0_db / 10.0))
