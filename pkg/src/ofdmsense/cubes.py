"""Complex data-cube containers and the estimate container.

The arrays inside are treated as immutable once constructed; nothing in the
package mutates them in place, so instances are safe to share across threads.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import tensorio
from .config import SystemConfig
from .core import delay_bins, signed_bins


@dataclass(frozen=True)
class EchoCube:
    """Received frequency-domain echo samples, indexed (rx antenna, subcarrier, symbol)."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ValueError("echo cube must be 3-D (n_rx, n_sc, n_sym)")

    @property
    def shape(self):
        return self.data.shape

    def check_config(self, cfg: SystemConfig):
        expected = (cfg.n_rx, cfg.n_sc, cfg.n_sym)
        if self.data.shape != expected:
            raise ValueError(f"echo cube shape {self.data.shape} != config {expected}")

    def save(self, path):
        tensorio.write_tensor(path, self.data)

    @classmethod
    def load(cls, path):
        return cls(tensorio.read_tensor(path))


@dataclass(frozen=True)
class RadarCube:
    """Processed angle-range-Doppler spectrum, indexed (angle bin, range bin, Doppler bin).

    Storage order follows the package bin convention: FFT ordering on the
    angle and Doppler axes, storage index k = signed bin -k on the range axis.
    """

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ValueError("radar cube must be 3-D (n_fft_angle, n_fft_range, n_fft_doppler)")

    @property
    def shape(self):
        return self.data.shape

    def angle_bins(self) -> np.ndarray:
        return signed_bins(self.data.shape[0])

    def range_bins(self) -> np.ndarray:
        return delay_bins(self.data.shape[1])

    def doppler_bins(self) -> np.ndarray:
        return signed_bins(self.data.shape[2])

    def save(self, path):
        tensorio.write_tensor(path, self.data)

    @classmethod
    def load(cls, path):
        return cls(tensorio.read_tensor(path))


@dataclass(frozen=True)
class EstimateSet:
    """Recovered target parameters, strongest peak first."""

    angles: np.ndarray        # [rad]
    ranges: np.ndarray        # [m]
    velocities: np.ndarray    # [m/s]
    peak_mags: np.ndarray     # linear magnitude of each selected peak
    requested: int
    clamp_count: int = 0      # coefficient divisions clamped during processing

    def __post_init__(self):
        n = len(self.angles)
        if not (len(self.ranges) == len(self.velocities) == len(self.peak_mags) == n):
            raise ValueError("estimate arrays must have equal length")

    @property
    def found(self) -> int:
        return len(self.angles)

    @property
    def complete(self) -> bool:
        return self.found == self.requested

    def __len__(self):
        return self.found

    def __iter__(self):
        return iter(zip(self.angles, self.ranges, self.velocities, self.peak_mags))

    @classmethod
    def empty(cls, requested: int = 0, clamp_count: int = 0):
        z = np.zeros(0)
        return cls(z, z.copy(), z.copy(), z.copy(), requested, clamp_count)
