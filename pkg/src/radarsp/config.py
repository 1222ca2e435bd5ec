"""Radar front-end and processing-grid configuration."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import c as SPEED_OF_LIGHT


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class RadarConfig:
    """Waveform, array and search-grid parameters shared by every pipeline.

    Note the stock parameter set is internally loose: n_fast * sample_period
    (581.8 ns) exceeds the PRI (500 ns).  The two are treated as independent
    knobs here; slow-time phase uses the PRI only.
    """

    n_fast: int = 1024                 # fast-time samples per pulse (P)
    n_ant: int = 32                    # ULA elements (L)
    n_pulses: int = 32                 # slow-time pulses (M)
    sample_period: float = 1.0 / 1.76e9   # DAC/ADC sample period (s)
    pri: float = 0.5e-6                # pulse repetition interval (s)
    wavelength: float = SPEED_OF_LIGHT / 60e9
    spacing: float = field(default=SPEED_OF_LIGHT / 60e9 / 2)  # element pitch d
    fov_deg: tuple[float, float] = (-90.0, 90.0)
    grid_step_deg: float = 1.0         # azimuth search step
    integration_factor: int = 512      # SARP fast-time samples integrated (IF)

    def __post_init__(self):
        if self.n_fast < 1 or self.n_ant < 1 or self.n_pulses < 1:
            raise ValueError("n_fast, n_ant, n_pulses must all be >= 1")
        if not _is_pow2(self.n_fast):
            raise ValueError(f"n_fast must be a power of two, got {self.n_fast}")
        if self.grid_step_deg <= 0:
            raise ValueError("grid_step_deg must be positive")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        if self.fov_deg[1] <= self.fov_deg[0]:
            raise ValueError("fov_deg must be an increasing (lo, hi) pair")
        span = self.fov_deg[1] - self.fov_deg[0]
        if abs(span / self.grid_step_deg - round(span / self.grid_step_deg)) > 1e-9:
            raise ValueError("grid_step_deg must divide the field of view span")
        if not (1 <= self.integration_factor <= self.n_fast):
            raise ValueError("integration_factor must lie in 1..n_fast")
        if self.n_fast % self.integration_factor:
            raise ValueError("integration_factor must divide n_fast")

    @property
    def n_grid(self) -> int:
        """Number of azimuth search angles (I)."""
        span = self.fov_deg[1] - self.fov_deg[0]
        return int(round(span / self.grid_step_deg)) + 1

    @property
    def grid_deg(self) -> np.ndarray:
        return self.fov_deg[0] + self.grid_step_deg * np.arange(self.n_grid)

    @property
    def occupied_len(self) -> int:
        """Transmit sequence length N = P/2."""
        return self.n_fast // 2

    @property
    def range_bin(self) -> float:
        """Range extent of one fast-time bin, c*dtau/2 (m)."""
        return SPEED_OF_LIGHT * self.sample_period / 2.0

    @property
    def r_max(self) -> float:
        """Maximum unambiguous range (P/2)*dtau*c/2 (m)."""
        return self.occupied_len * self.range_bin

    def delay_bin(self, r: float) -> int:
        """Fast-time bin of a two-way delay to range r, rounded to nearest."""
        return int(round(2.0 * r / (SPEED_OF_LIGHT * self.sample_period)))
