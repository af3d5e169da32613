"""Array geometry, digital-frequency maps, path loss and DFT bin conventions.

Every axis of the processed data cube carries a "digital frequency": the
phase increment per index step.  The maps below convert physical target
parameters to those frequencies; the bin helpers fix the storage-order ↔
signed-bin convention used by all spectrum products:

* spatial and Doppler axes: storage index k maps to the signed bin k for
  k < ceil(N/2) and k - N otherwise (standard FFT ordering),
* delay axis: storage index k maps to the signed bin -k, because the
  round-trip delay frequency is confined to [-2*pi, 0].
"""
from __future__ import annotations

import numpy as np

from .config import SystemConfig


def tx_spatial_freq(theta, cfg: SystemConfig):
    """Phase increment per transmit antenna toward direction ``theta`` [rad]."""
    return 2.0 * np.pi * cfg.d_tx * np.sin(theta) / cfg.wavelength


def rx_spatial_freq(theta, cfg: SystemConfig):
    """Phase increment per receive antenna for an echo from ``theta`` [rad]."""
    return -2.0 * np.pi * cfg.d_rx * np.sin(theta) / cfg.wavelength


def range_freq(d, cfg: SystemConfig):
    """Phase increment per subcarrier for round-trip range ``d`` [m].

    Non-positive by construction; -2*pi is reached at the maximum
    unambiguous range.
    """
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise ValueError("range must be non-negative")
    return -4.0 * np.pi * cfg.delta_f * d / cfg.c


def doppler_freq(v, cfg: SystemConfig):
    """Phase increment per OFDM symbol for radial velocity ``v`` [m/s]."""
    return 4.0 * np.pi * cfg.t_total * np.asarray(v, dtype=float) * cfg.fc / cfg.c


def steering_vector(omega: float, n: int) -> np.ndarray:
    """Unit-modulus phase ramp [e^{j*0*w}, ..., e^{j*(n-1)*w}]."""
    if n < 1:
        raise ValueError("steering vector needs at least one element")
    return np.exp(1j * omega * np.arange(n))


def path_loss(d, cfg: SystemConfig):
    """One-way distance-dependent power gain ref_gain * (d/ref_dist)^(-pl_exp)."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("path loss requires d > 0")
    return cfg.ref_gain * (d / cfg.ref_dist) ** (-cfg.pl_exp)


def signed_bins(n: int) -> np.ndarray:
    """Signed bin index for each storage index of an n-point centered axis."""
    k = np.arange(n)
    return np.where(k < (n + 1) // 2, k, k - n)


def delay_bins(n: int) -> np.ndarray:
    """Signed (non-positive) bin index for each storage index of the delay axis."""
    return -np.arange(n)


def spatial_bin_freq(n_a: int) -> np.ndarray:
    """Digital frequency 2*pi*n/N of every spatial bin, storage order, in [-pi, pi)."""
    return 2.0 * np.pi * signed_bins(n_a) / n_a


def delay_bin_freq(n_d: int) -> np.ndarray:
    """Digital frequency of every delay bin, storage order, in (-2*pi, 0]."""
    return 2.0 * np.pi * delay_bins(n_d) / n_d


def doppler_bin_freq(n_v: int) -> np.ndarray:
    """Digital frequency of every Doppler bin, storage order, in [-pi, pi)."""
    return 2.0 * np.pi * signed_bins(n_v) / n_v


def storage_index(signed: int, n: int, axis: str) -> int:
    """Inverse of the signed-bin maps; ``axis`` is 'angle', 'range' or 'doppler'."""
    if axis == "range":
        if not -n < signed <= 0:
            raise ValueError("delay bin out of range")
        return -signed
    if axis in ("angle", "doppler"):
        if not -(n // 2) <= signed < (n + 1) // 2:
            raise ValueError("signed bin out of range")
        return signed % n
    raise ValueError(f"unknown axis {axis!r}")
