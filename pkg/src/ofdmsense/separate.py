"""Successive (angle, then range, then velocity) baseline estimator.

Angle and range are estimated from the first OFDM symbol only (the l = 0
slab, with the single (i = 0, l = 0) spatial snapshot for angle), and each
later stage reuses the earlier estimates even when they are wrong, so angular
errors propagate into range and velocity.  Velocity necessarily spans all
symbols.
"""
from __future__ import annotations

import numpy as np
from scipy import fft as sfft

from .config import SystemConfig
from .core import signed_bins, steering_vector, tx_spatial_freq
from .cubes import EchoCube, EstimateSet
from .estimator import DEFAULT_CLAMP_EPS, resolution_cell
from .peaks import select_peaks
from .txgen import TxSignal


def _clamped(coef: np.ndarray, clamp_eps: float):
    mags = np.abs(coef)
    floor = clamp_eps * mags.mean()
    low = mags < floor
    count = int(np.count_nonzero(low))
    if count:
        coef = coef.copy()
        m = mags[low]
        coef[low] = floor * np.where(m > 0, coef[low] / np.where(m > 0, m, 1.0), 1.0 + 0.0j)
    if mags.sum() == 0:
        coef = np.ones_like(coef)
    return coef, count


def estimate_separate(cube: EchoCube, tx: TxSignal, cfg: SystemConfig,
                      n_targets: int, clamp_eps: float = DEFAULT_CLAMP_EPS) -> EstimateSet:
    """Successive baseline estimate; may return fewer entries than requested
    when the single-snapshot angular spectrum resolves fewer peaks."""
    cube.check_config(cfg)
    tx.check_config(cfg)
    n_a, n_d, n_v = cfg.n_fft_angle, cfg.n_fft_range, cfg.n_fft_doppler
    half_a = resolution_cell(cfg)[0]

    # stage 1: angle bins from the single spatial snapshot
    snapshot = cube.data[:, 0, 0]
    spec1 = sfft.fft(snapshot, n=n_a) / cfg.n_rx
    picked = select_peaks(np.abs(spec1), n_targets, half_widths=(half_a,),
                          wrap=(True,), signed_axes=(signed_bins(n_a),))
    bins_a = signed_bins(n_a)[picked[:, 0]] if len(picked) else np.zeros(0, dtype=int)

    sym0 = cube.data[:, :, 0]  # angle and range stages touch no other symbol
    m_idx = np.arange(cfg.n_rx)
    i_idx = np.arange(cfg.n_sc)

    angles, ranges, velocities, mags = [], [], [], []
    clamp_count = 0
    for k, n_bin in enumerate(bins_a):
        omega_hat = 2.0 * np.pi * n_bin / n_a
        arg = np.clip(-n_bin * cfg.wavelength / (cfg.d_rx * n_a), -1.0, 1.0)
        theta_hat = float(np.arcsin(arg))

        # stage 2: range from the l = 0 per-subcarrier sequence at the angle bin
        proj0 = sym0.T @ np.exp(-1j * omega_hat * m_idx) / cfg.n_rx  # (n_sc,)
        steer = steering_vector((-cfg.d_tx / cfg.d_rx) * omega_hat, cfg.n_tx).conj()
        coef0, c0 = _clamped(steer @ tx.x[:, :, 0], clamp_eps)
        clamp_count += c0
        range_spec = sfft.ifft(proj0 / coef0, n=n_d) * (n_d / cfg.n_sc)
        k_d = int(np.argmax(np.abs(range_spec)))
        d_hat = cfg.c * k_d / (2.0 * n_d * cfg.delta_f)  # signed bin is -k_d

        # stage 3: velocity from all symbols at the estimated (angle, range) pair
        proj = np.einsum("m,mil->il", np.exp(-1j * omega_hat * m_idx), cube.data) / cfg.n_rx
        coef, c1 = _clamped(np.tensordot(steer, tx.x, axes=(0, 0)), clamp_eps)
        clamp_count += c1
        range_kernel = np.exp(-1j * (2.0 * np.pi * (-k_d) / n_d) * i_idx)
        gated = range_kernel @ (proj / coef) / cfg.n_sc  # (n_sym,)
        vel_spec = sfft.fft(gated, n=n_v) / cfg.n_sym
        k_v = int(np.argmax(np.abs(vel_spec)))
        n_bin_v = int(signed_bins(n_v)[k_v])
        v_hat = cfg.c * n_bin_v / (2.0 * n_v * cfg.t_total * cfg.fc)

        angles.append(theta_hat)
        ranges.append(d_hat)
        velocities.append(v_hat)
        mags.append(float(np.abs(vel_spec[k_v])))

    return EstimateSet(angles=np.array(angles), ranges=np.array(ranges),
                       velocities=np.array(velocities), peak_mags=np.array(mags),
                       requested=n_targets, clamp_count=clamp_count)
