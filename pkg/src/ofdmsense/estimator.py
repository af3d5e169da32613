"""Joint angle-range-velocity estimation over the echo cube.

Pipeline: normalized spatial DFT over the receive antennas, power-preserving
removal of the transmit-dependent coefficients in every angular bin, a
normalized 2-D DFT over subcarriers and symbols, then joint peak picking in
the resulting angle-range-Doppler cube and closed-form parameter recovery.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft

from .config import SystemConfig
from .core import (delay_bins, signed_bins, spatial_bin_freq, steering_vector)
from .cubes import EchoCube, EstimateSet, RadarCube
from .peaks import select_peaks
from .txgen import TxSignal

DEFAULT_CLAMP_EPS = 1e-3


@dataclass(frozen=True)
class AngularSpectrum:
    """Per-(subcarrier, symbol) spatial spectrum, shape (n_fft_angle, n_sc, n_sym)."""

    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3:
            raise ValueError("angular spectrum must be 3-D")


@dataclass(frozen=True)
class ScalingFactors:
    """Per-angular-bin positive factors that make coefficient removal power preserving."""

    alpha: np.ndarray
    clamp_count: int = 0

    def __post_init__(self):
        if np.any(self.alpha <= 0):
            raise ValueError("scaling factors must be strictly positive")


@dataclass(frozen=True)
class PeakSet:
    """Selected cube peaks: storage indices, signed bins and magnitudes."""

    storage: np.ndarray   # (n_found, 3) int
    signed: np.ndarray    # (n_found, 3) int
    mags: np.ndarray      # (n_found,)
    requested: int

    @property
    def complete(self) -> bool:
        return len(self.mags) == self.requested


def spatial_dft(cube: EchoCube, n_fft_angle: int) -> AngularSpectrum:
    """Zero-padded DFT over the antenna axis with 1/n_rx normalization."""
    n_rx = cube.data.shape[0]
    if n_fft_angle < n_rx:
        raise ValueError("n_fft_angle must be >= n_rx (zero-padding never truncates)")
    return AngularSpectrum(sfft.fft(cube.data, n=n_fft_angle, axis=0) / n_rx)


def divisor_coefficients(tx: TxSignal, cfg: SystemConfig, n_fft_angle: int,
                         clamp_eps: float = DEFAULT_CLAMP_EPS):
    """Transmit-dependent divisor for every (angular bin, subcarrier, symbol).

    Entry (b,i,l) is the transmit steering projection a^H(w_b) x_i[l], where
    w_b = (-d_tx/d_rx) times bin b's spatial frequency.  Magnitudes below
    clamp_eps times the bin's mean magnitude are raised to that floor with
    phase kept, so later divisions stay bounded; returns (coef, clamp_count).
    """
    omega = (-cfg.d_tx / cfg.d_rx) * spatial_bin_freq(n_fft_angle)
    # rows of e^{-j n w_b}: conjugated steering vectors
    proj = np.exp(-1j * np.outer(omega, np.arange(cfg.n_tx)))
    coef = np.tensordot(proj, tx.x, axes=(1, 0))  # (n_fft_angle, n_sc, n_sym)

    mags = np.abs(coef)
    floor = clamp_eps * mags.mean(axis=(1, 2), keepdims=True)
    low = mags < floor
    clamp_count = int(np.count_nonzero(low))
    if clamp_count:
        uf = np.broadcast_to(floor, coef.shape)[low]
        m = mags[low]
        phase = np.where(m > 0, coef[low] / np.where(m > 0, m, 1.0), 1.0 + 0.0j)
        coef = coef.copy()
        coef[low] = uf * phase
    # a bin whose transmit projection is identically zero cannot be divided out
    dead = mags.sum(axis=(1, 2)) == 0
    if np.any(dead):
        coef = coef.copy()
        coef[dead] = 1.0
    return coef, clamp_count


def scaling_factors(spectrum: AngularSpectrum, tx: TxSignal, cfg: SystemConfig,
                    clamp_eps: float = DEFAULT_CLAMP_EPS,
                    coef: np.ndarray | None = None) -> ScalingFactors:
    """Per-bin factors so dividing by (alpha * coefficient) keeps each bin's power.

    A bin with zero total spectrum power gets alpha = 1, which preserves the
    all-zero signal without a 0/0.
    """
    clamp_count = 0
    if coef is None:
        coef, clamp_count = divisor_coefficients(tx, cfg, spectrum.data.shape[0], clamp_eps)
    pow_before = np.sum(np.abs(spectrum.data) ** 2, axis=(1, 2))
    pow_divided = np.sum(np.abs(spectrum.data / coef) ** 2, axis=(1, 2))
    alpha = np.ones_like(pow_before)
    ok = pow_before > 0
    alpha[ok] = np.sqrt(pow_divided[ok] / pow_before[ok])
    alpha[alpha <= 0] = 1.0
    return ScalingFactors(alpha=alpha, clamp_count=clamp_count)


def remove_coefficients(spectrum: AngularSpectrum, tx: TxSignal,
                        scaling: ScalingFactors | np.ndarray, cfg: SystemConfig,
                        clamp_eps: float = DEFAULT_CLAMP_EPS,
                        coef: np.ndarray | None = None) -> np.ndarray:
    """Divide the angular spectrum by the scaled transmit-dependent coefficients."""
    alpha = scaling.alpha if isinstance(scaling, ScalingFactors) else np.asarray(scaling)
    if coef is None:
        coef, _ = divisor_coefficients(tx, cfg, spectrum.data.shape[0], clamp_eps)
    return spectrum.data / (alpha[:, None, None] * coef)


def range_doppler_dft(divided: np.ndarray, n_fft_range: int, n_fft_doppler: int) -> RadarCube:
    """Zero-padded 2-D DFT over (subcarrier, symbol) with 1/(n_sc*n_sym) scaling.

    The delay axis stores bin k at the signed frequency -k (its digital
    frequency lives in (-2*pi, 0]); the Doppler axis uses FFT ordering.
    """
    n_a, n_sc, n_sym = divided.shape
    if n_fft_range < n_sc:
        raise ValueError("n_fft_range must be >= n_sc")
    if n_fft_doppler < n_sym:
        raise ValueError("n_fft_doppler must be >= n_sym")
    spec = sfft.fft(divided, n=n_fft_doppler, axis=2)
    spec = sfft.ifft(spec, n=n_fft_range, axis=1) * (n_fft_range / (n_sc * n_sym))
    return RadarCube(spec)


def resolution_cell(cfg: SystemConfig) -> tuple:
    """Exclusion half-widths in bins: one un-padded resolution cell per axis."""
    return (max(1, round(cfg.n_fft_angle / cfg.n_rx)),
            max(1, round(cfg.n_fft_range / cfg.n_sc)),
            max(1, round(cfg.n_fft_doppler / cfg.n_sym)))


def find_peaks(cube: RadarCube, n_peaks: int, cfg: SystemConfig) -> PeakSet:
    """Greedy local-maxima search over the cube magnitude.

    The spatial and Doppler axes are circular, the delay axis is one-sided.
    Accepted peaks exclude a one-resolution-cell box around themselves; if
    fewer than ``n_peaks`` maxima exist, the shorter set is returned.
    """
    mag = np.abs(cube.data)
    storage = select_peaks(
        mag, n_peaks,
        half_widths=resolution_cell(cfg),
        wrap=(True, False, True),
        signed_axes=(signed_bins(mag.shape[0]), delay_bins(mag.shape[1]),
                     signed_bins(mag.shape[2])),
    )
    signed = np.column_stack([
        signed_bins(mag.shape[0])[storage[:, 0]],
        delay_bins(mag.shape[1])[storage[:, 1]],
        signed_bins(mag.shape[2])[storage[:, 2]],
    ]) if len(storage) else np.zeros((0, 3), dtype=int)
    mags = mag[tuple(storage.T)] if len(storage) else np.zeros(0)
    return PeakSet(storage=storage, signed=signed, mags=mags, requested=n_peaks)


def recover_params(peakset: PeakSet, cfg: SystemConfig,
                   clamp_count: int = 0) -> EstimateSet:
    """Closed-form bin-to-parameter recovery for every selected peak.

    Angle arguments outside [-1, 1] (possible only for d_rx below half a
    wavelength) are clipped, reporting the edge of the ambiguity region.
    """
    s = peakset.signed
    if len(s) == 0:
        return EstimateSet.empty(peakset.requested, clamp_count)
    arg = -s[:, 0] * cfg.wavelength / (cfg.d_rx * cfg.n_fft_angle)
    angles = np.arcsin(np.clip(arg, -1.0, 1.0))
    ranges = -cfg.c * s[:, 1] / (2.0 * cfg.n_fft_range * cfg.delta_f)
    velocities = cfg.c * s[:, 2] / (2.0 * cfg.n_fft_doppler * cfg.t_total * cfg.fc)
    return EstimateSet(angles=angles, ranges=ranges, velocities=velocities,
                       peak_mags=peakset.mags.copy(), requested=peakset.requested,
                       clamp_count=clamp_count)


def estimate_joint(cube: EchoCube, tx: TxSignal, cfg: SystemConfig, n_targets: int,
                   use_scaling: bool = True,
                   clamp_eps: float = DEFAULT_CLAMP_EPS) -> tuple:
    """Run the full joint estimation pipeline; returns (EstimateSet, RadarCube).

    ``use_scaling=False`` forces all per-bin scaling factors to one, which
    re-weights the angular profile by the coefficient magnitudes and is kept
    only as a benchmark variant.
    """
    cube.check_config(cfg)
    tx.check_config(cfg)
    spectrum = spatial_dft(cube, cfg.n_fft_angle)
    coef, clamp_count = divisor_coefficients(tx, cfg, cfg.n_fft_angle, clamp_eps)
    if use_scaling:
        scaling = scaling_factors(spectrum, tx, cfg, clamp_eps, coef=coef)
        scaling = ScalingFactors(scaling.alpha, clamp_count)
    else:
        scaling = ScalingFactors(np.ones(cfg.n_fft_angle), clamp_count)
    divided = remove_coefficients(spectrum, tx, scaling, cfg, clamp_eps, coef=coef)
    radar = range_doppler_dft(divided, cfg.n_fft_range, cfg.n_fft_doppler)
    peakset = find_peaks(radar, n_targets, cfg)
    return recover_params(peakset, cfg, clamp_count), radar
