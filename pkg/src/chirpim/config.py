"""Validated system configuration for the chirp index-modulation link."""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import codec, zc


@dataclass(frozen=True)
class SystemConfig:
    """All modulation parameters of one link.

    sf: spreading factor (2^sf frequency bins per chirp rate)
    n_rates: number of selectable chirp rates (grid rows)
    n_active: number of activated cells per symbol
    min_rate: lowest chirp rate of the range [min_rate, min_rate+n_rates-1]
    symbol_energy: transmit energy per symbol (dimensionless)
    prime: sequence length; defaults to the SF table entry, may be
        overridden with any prime > 2^sf (synthetic test sizes)
    """

    sf: int
    n_rates: int = 1
    n_active: int = 1
    min_rate: int = 1
    symbol_energy: float = 1.0
    prime: int | None = None

    def __post_init__(self):
        if self.prime is None:
            if self.sf not in zc.SF_PRIMES:
                raise ValueError(
                    f"sf={self.sf} has no table entry; pass an explicit prime")
            object.__setattr__(self, "prime", zc.SF_PRIMES[self.sf])
        if not zc.is_prime(self.prime):
            raise ValueError(f"prime={self.prime} is not prime")
        if self.prime <= self.n_bins:
            raise ValueError(f"prime={self.prime} must exceed 2^sf={self.n_bins}")
        if self.min_rate < 1:
            raise ValueError(f"min_rate must be >= 1, got {self.min_rate}")
        if self.max_rate > self.prime - 1:
            raise ValueError(
                f"rate range [{self.min_rate}, {self.max_rate}] exceeds prime-1={self.prime - 1}")
        if not 1 <= self.n_active <= self.n_cells:
            raise ValueError(f"n_active={self.n_active} outside [1, {self.n_cells}]")
        if self.symbol_energy <= 0:
            raise ValueError("symbol_energy must be positive")
        # Raises if the cell/active combination carries less than one bit.
        codec.bits_per_symbol(self.n_cells, self.n_active)

    @property
    def n_bins(self) -> int:
        return 1 << self.sf

    @property
    def n_cells(self) -> int:
        return self.n_rates * self.n_bins

    @property
    def max_rate(self) -> int:
        return self.min_rate + self.n_rates - 1

    @property
    def bits_per_symbol(self) -> int:
        return codec.bits_per_symbol(self.n_cells, self.n_active)

    def with_energy(self, symbol_energy: float) -> "SystemConfig":
        return replace(self, symbol_energy=symbol_energy)

    def with_min_rate(self, min_rate: int) -> "SystemConfig":
        return replace(self, min_rate=min_rate)
