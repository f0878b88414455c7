"""Zadoff-Chu and LoRa chirp primitives: generation, dechirp+DFT, correlations.

A ZC sequence of prime length N with chirp rate r and offset q is
x[n] = exp(j*pi*r*(n+1+2q)*n/N)/sqrt(N). Dechirping with the conjugate
base chirp of the same rate and taking an N-point DFT collapses the
sequence to a single tone at bin mod(r*q, N); a mismatched rate spreads
the energy flat at 1/sqrt(N) per bin. Different rates give constant
cross-correlation magnitude 1/sqrt(N) (quasi-orthogonality), and chirps
of different lengths N1 > N2 with arbitrary symbol delay obey
|theta2|^2 <= (1+2*eps)/N1 with eps the max partial cosine sum of the
pair's quadratic phase difference.
"""

from __future__ import annotations

import math

import numpy as np

# Spreading factor -> prime sequence length (smallest prime above 2^sf).
SF_PRIMES = {6: 67, 7: 131, 8: 257, 9: 521, 10: 1031, 11: 2053, 12: 4099}


def is_prime(n: int) -> bool:
    """Deterministic trial division; intended for the small lengths used here."""
    n = int(n)
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True


def _check_zc_params(n: int, rate: int, offset: int) -> None:
    if not is_prime(n):
        raise ValueError(f"sequence length must be prime, got {n}")
    if not 1 <= rate <= n - 1:
        raise ValueError(f"chirp rate must lie in [1, {n - 1}], got {rate}")
    if not 0 <= offset <= n - 1:
        raise ValueError(f"offset must lie in [0, {n - 1}], got {offset}")


def zc_sequence(n: int, rate: int, offset: int = 0) -> np.ndarray:
    """Unit-energy ZC sequence of prime length n.

    x[k] = exp(j*pi*rate*(k+1+2*offset)*k/n)/sqrt(n). The integer phase
    numerator is reduced mod 2n before exponentiation so the phase stays
    exact for large n (the numerator has period 2n).
    """
    _check_zc_params(n, rate, offset)
    idx = np.arange(n, dtype=np.int64)
    num = (rate * (idx + 1 + 2 * offset) * idx) % (2 * n)
    return np.exp(1j * np.pi * num / n) / math.sqrt(n)


def conj_dechirp(n: int, rate: int) -> np.ndarray:
    """Conjugate base chirp exp(-j*pi*rate*(k+1)*k/n)/sqrt(n) used for dechirping."""
    if not is_prime(n):
        raise ValueError(f"sequence length must be prime, got {n}")
    if not 1 <= rate <= n - 1:
        raise ValueError(f"chirp rate must lie in [1, {n - 1}], got {rate}")
    idx = np.arange(n, dtype=np.int64)
    num = (rate * (idx + 1) * idx) % (2 * n)
    return np.exp(-1j * np.pi * num / n) / math.sqrt(n)


def dechirp_dft(rx: np.ndarray, n: int, rate: int) -> np.ndarray:
    """Dechirp rx with the conjugate rate-`rate` chirp and DFT (unnormalized).

    For rx = zc_sequence(n, r, q) the magnitude is 1 at bin mod(r*q, n) and 0
    elsewhere when r == rate, and 1/sqrt(n) in every bin when r != rate.
    """
    rx = np.asarray(rx)
    if rx.shape[-1] != n:
        raise ValueError(f"rx length {rx.shape[-1]} does not match n={n}")
    return np.fft.fft(rx * conj_dechirp(n, rate))


def lora_sequence(sf: int, rate: int, offset: int = 0) -> np.ndarray:
    """Unit-energy LoRa-style chirp of length 2^sf: exp(j*pi*(rate*k+2*offset)*k/N)/sqrt(N)."""
    n = 1 << sf
    idx = np.arange(n, dtype=np.int64)
    num = ((rate * idx + 2 * offset) * idx) % (2 * n)
    return np.exp(1j * np.pi * num / n) / math.sqrt(n)


def cross_correlation(x1: np.ndarray, x2: np.ndarray) -> complex:
    """Normalized inner product sum(x1 * conj(x2)) / (||x1|| * ||x2||)."""
    x1 = np.asarray(x1)
    x2 = np.asarray(x2)
    if x1.shape != x2.shape:
        raise ValueError(f"length mismatch: {x1.shape} vs {x2.shape}")
    n1 = np.linalg.norm(x1)
    n2 = np.linalg.norm(x2)
    if n1 == 0.0 or n2 == 0.0:
        raise ValueError("cross-correlation of a zero-norm input is undefined")
    return complex(np.vdot(x2, x1) / (n1 * n2))


def delayed_cross_sf_correlation(x1: np.ndarray, x2: np.ndarray, delay: int) -> complex:
    """Cross-correlation of a long signal x1 with a shorter x2 delayed by `delay` samples.

    Only the overlap window x1[delay : delay+len(x2)] enters the inner
    product; both full norms normalize it. For unit-energy ZC inputs this
    equals the 1/sqrt(N1*N2)-scaled overlap sum of the raw chirps.
    """
    x1 = np.asarray(x1)
    x2 = np.asarray(x2)
    n1, n2 = len(x1), len(x2)
    if n1 <= n2:
        raise ValueError(f"x1 must be strictly longer than x2 ({n1} vs {n2})")
    if not 0 <= delay <= n1 - n2:
        raise ValueError(f"delay must lie in [0, {n1 - n2}], got {delay}")
    norm1 = np.linalg.norm(x1)
    norm2 = np.linalg.norm(x2)
    if norm1 == 0.0 or norm2 == 0.0:
        raise ValueError("cross-correlation of a zero-norm input is undefined")
    seg = x1[delay : delay + n2]
    return complex(np.vdot(seg, x2) / (norm1 * norm2))


def multisym_sf_correlation(x1: np.ndarray, x2: np.ndarray, delay: int) -> complex:
    """delayed_cross_sf_correlation for composite (multi-component) signals.

    Composite chirp-sum signals at spreading factors nu1 > nu2 stay
    quasi-orthogonal: |theta2| <= L^2 * sqrt((1+2*eps)/N1) with eps the
    worst epsilon_bound over the component pairs. With L = 1 this is
    exactly the single-chirp correlation.
    """
    return delayed_cross_sf_correlation(x1, x2, delay)


def _quad_phase_fraction(n1: int, n2: int, r1: int, r2: int, q1: int, q2: int,
                         delay: int) -> tuple[int, int, int]:
    """Integer numerators (a_num, b_num, den) of the quadratic phase difference.

    The overlap product has phase 2*pi*(a*k^2 + b*k) with
    a = r2/(2*n2) - r1/(2*n1) and b = r2*(1+2*q2)/(2*n2) - r1*(1+2*delay+2*q1)/(2*n1);
    both are returned as exact fractions over den = 2*n1*n2 so callers can
    reduce phases mod 1 in integer arithmetic.
    """
    den = 2 * n1 * n2
    a_num = r2 * n1 - r1 * n2
    b_num = r2 * (1 + 2 * q2) * n1 - r1 * (1 + 2 * delay + 2 * q1) * n2
    return a_num, b_num, den


def epsilon_from_quadratic(a_num: int, b_num: int, den: int, n2: int) -> float:
    """Max over k of sum_{i=k+1}^{n2-1} cos(2*pi*(k-i)*(a*(k+i)+b)) with a=a_num/den, b=b_num/den.

    Exact integer reduction mod den keeps the cosine arguments small.
    The k = n2-1 row is an empty sum, so the result is never negative.
    """
    idx = np.arange(n2, dtype=np.int64)
    diff = idx[:, None] - idx[None, :]
    tot = idx[:, None] + idx[None, :]
    num = (diff * (a_num * tot + b_num)) % den
    c = np.cos(2.0 * np.pi * num / den)
    inner = np.where(idx[None, :] > idx[:, None], c, 0.0).sum(axis=1)
    return float(inner.max())


def epsilon_bound(n1: int, n2: int, r1: int, r2: int, q1: int, q2: int,
                  delay: int) -> float:
    """Epsilon of the delayed cross-SF correlation bound |theta2|^2 <= (1+2*eps)/n1."""
    a_num, b_num, den = _quad_phase_fraction(n1, n2, r1, r2, q1, q2, delay)
    return epsilon_from_quadratic(a_num, b_num, den, n2)
