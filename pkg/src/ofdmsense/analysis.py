"""Closed-form performance quantities and experiment metrics.

Unambiguous limits and resolutions follow from the 2*pi periodicity and the
un-padded DFT grid of each cube axis.  The SNR forms evaluate the realized
transmit tensor; the processing gain is capped at n_rx * n_sc * n_sym with
equality exactly when the transmit projection modulus is constant.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment

from .config import SystemConfig, Target
from .core import path_loss, steering_vector, tx_spatial_freq
from .cubes import EchoCube, EstimateSet, RadarCube
from .echosim import sensing_noise
from .estimator import (DEFAULT_CLAMP_EPS, divisor_coefficients, range_doppler_dft,
                        remove_coefficients, spatial_dft)
from .seeds import derive_rng
from .txgen import TxSignal


class UnambiguousLimits(NamedTuple):
    angle: float      # [rad]
    range: float      # [m]
    velocity: float   # [m/s]


class Resolutions(NamedTuple):
    angle_sin: float  # width in sin(angle); angular width in radians varies with angle
    range: float      # [m]
    velocity: float   # [m/s]


def max_unambiguous(cfg: SystemConfig) -> UnambiguousLimits:
    """Largest angle/range/velocity representable without phase wrapping."""
    arg = cfg.wavelength / (2.0 * cfg.d_rx)
    theta_max = math.asin(arg) if arg < 1.0 else math.pi / 2.0
    return UnambiguousLimits(
        angle=theta_max,
        range=cfg.c / (2.0 * cfg.delta_f),
        velocity=cfg.c / (4.0 * cfg.t_total * cfg.fc),
    )


def resolutions(cfg: SystemConfig) -> Resolutions:
    """Un-padded DFT grid spacing per axis; zero-padding does not change it."""
    return Resolutions(
        angle_sin=cfg.wavelength / (cfg.n_rx * cfg.d_rx),
        range=cfg.c / (2.0 * cfg.n_sc * cfg.delta_f),
        velocity=cfg.c / (2.0 * cfg.fc * cfg.n_sym * cfg.t_total),
    )


def _target_coef(cfg: SystemConfig, target: Target, tx: TxSignal) -> np.ndarray:
    steer = steering_vector(tx_spatial_freq(target.angle, cfg), cfg.n_tx).conj()
    return np.tensordot(steer, tx.x, axes=(0, 0))  # (n_sc, n_sym)


def received_snr(cfg: SystemConfig, target: Target, tx: TxSignal) -> float:
    """Echo SNR over one CPI for this target with the realized transmit tensor."""
    coef_pow = np.sum(np.abs(_target_coef(cfg, target, tx)) ** 2)
    return (cfg.beta_pow * path_loss(2.0 * target.range, cfg) * coef_pow
            / (cfg.n_sc * cfg.n_sym * cfg.noise_pow_sense))


def output_snr(cfg: SystemConfig, target: Target, tx: TxSignal,
               clamp_eps: float = DEFAULT_CLAMP_EPS) -> float:
    """Post-processing SNR of this target's cube peak (analytical form).

    Uses the same magnitude clamping as the estimator's coefficient division
    so near-zero projections cannot blow up the denominator.
    """
    coef = _target_coef(cfg, target, tx)
    mags = np.abs(coef)
    floor = clamp_eps * mags.mean()
    mags = np.maximum(mags, floor)
    denom = np.sum(cfg.noise_pow_sense / mags ** 2)
    n = cfg.n_rx * cfg.n_sc ** 2 * cfg.n_sym ** 2
    return n * cfg.beta_pow * path_loss(2.0 * target.range, cfg) / denom


def processing_gain_bound(cfg: SystemConfig) -> float:
    """Upper bound on output/received SNR: the data-cube size."""
    return float(cfg.n_rx * cfg.n_sc * cfg.n_sym)


def processed_noise_variance(cfg: SystemConfig, tx: TxSignal, alpha: np.ndarray,
                             angle_storage_bin: int,
                             clamp_eps: float = DEFAULT_CLAMP_EPS) -> float:
    """Variance of processed pure noise in any (range, Doppler) bin of one angular bin."""
    coef, _ = divisor_coefficients(tx, cfg, cfg.n_fft_angle, clamp_eps)
    c2 = np.abs(coef[angle_storage_bin]) ** 2
    a2 = float(np.asarray(alpha)[angle_storage_bin]) ** 2
    n = cfg.n_rx * cfg.n_sc ** 2 * cfg.n_sym ** 2
    return float(np.sum(cfg.noise_pow_sense / (n * a2 * c2)))


def empirical_output_snr(radar_cube: RadarCube, peak_storage_index, noise_trials: int,
                         cfg: SystemConfig, tx: TxSignal, alpha: np.ndarray,
                         seed: int = 0, clamp_eps: float = DEFAULT_CLAMP_EPS,
                         method: str = "pipeline") -> float:
    """Peak power over the measured noise power at the same bin.

    Noise-only cubes are pushed through the processing chain with the given
    (signal-derived) scaling factors; ``method='projection'`` evaluates the
    chain's single-bin linear functional directly, which is algebraically
    identical and much faster for sweeps.
    """
    if noise_trials < 1:
        raise ValueError("noise_trials must be >= 1")
    ka, kd, kv = (int(v) for v in peak_storage_index)
    peak_power = float(np.abs(radar_cube.data[ka, kd, kv]) ** 2)
    alpha = np.asarray(alpha, dtype=float)
    coef, _ = divisor_coefficients(tx, cfg, cfg.n_fft_angle, clamp_eps)

    if method == "projection":
        m = np.arange(cfg.n_rx)
        i = np.arange(cfg.n_sc)
        ell = np.arange(cfg.n_sym)
        # storage bins already encode the signed frequencies modulo 2*pi
        wm = np.exp(-2j * np.pi * ka * m / cfg.n_fft_angle)
        wi = np.exp(2j * np.pi * kd * i / cfg.n_fft_range)
        wl = np.exp(-2j * np.pi * kv * ell / cfg.n_fft_doppler)
        weights = (wm[:, None, None] * (wi[:, None] * wl[None, :])[None, :, :]
                   / (cfg.n_rx * cfg.n_sc * cfg.n_sym * alpha[ka] * coef[ka]))
        power = 0.0
        for t in range(noise_trials):
            rng = derive_rng(seed, "noise", t)
            z = np.sqrt(cfg.noise_pow_sense / 2.0) * (
                rng.standard_normal(weights.shape) + 1j * rng.standard_normal(weights.shape))
            power += abs(np.vdot(weights.conj(), z)) ** 2
    elif method == "pipeline":
        power = 0.0
        for t in range(noise_trials):
            rng = derive_rng(seed, "noise", t)
            shape = (cfg.n_rx, cfg.n_sc, cfg.n_sym)
            z = np.sqrt(cfg.noise_pow_sense / 2.0) * (
                rng.standard_normal(shape) + 1j * rng.standard_normal(shape))
            spec = spatial_dft(EchoCube(z), cfg.n_fft_angle)
            div = remove_coefficients(spec, tx, alpha, cfg, clamp_eps, coef=coef)
            out = range_doppler_dft(div, cfg.n_fft_range, cfg.n_fft_doppler)
            power += abs(out.data[ka, kd, kv]) ** 2
    else:
        raise ValueError(f"unknown method {method!r}")
    return peak_power / (power / noise_trials)


def _miss_penalties(cfg: SystemConfig) -> tuple:
    """Per-dimension error charged for an unmatched truth: the full unambiguous span."""
    lim = max_unambiguous(cfg)
    return (2.0 * lim.angle, lim.range, 2.0 * lim.velocity)


def match_estimates(truth, est: EstimateSet, cfg: SystemConfig):
    """Minimum-total-squared-error assignment of estimates to true targets.

    Errors are normalized by the per-dimension resolution (angle compared in
    sin space, where the angular grid is uniform) so the three dimensions
    weigh equally.  Returns (truth_idx, est_idx) pairs; truths beyond
    ``est.found`` stay unmatched.
    """
    if not truth:
        raise ValueError("truth scene must contain at least one target")
    if est.found == 0:
        return []
    res = resolutions(cfg)
    t_ang = np.array([math.sin(t.angle) for t in truth])
    t_rng = np.array([t.range for t in truth])
    t_vel = np.array([t.velocity for t in truth])
    cost = (((t_ang[:, None] - np.sin(est.angles)[None, :]) / res.angle_sin) ** 2
            + ((t_rng[:, None] - est.ranges[None, :]) / res.range) ** 2
            + ((t_vel[:, None] - est.velocities[None, :]) / res.velocity) ** 2)
    rows, cols = linear_sum_assignment(cost)
    return list(zip(rows.tolist(), cols.tolist()))


def trial_squared_errors(truth, est: EstimateSet, cfg: SystemConfig) -> tuple:
    """Per-dimension mean squared error over the scene for one trial.

    Angle errors are in radians.  Unmatched truths (missed detections) are
    charged the full unambiguous span of each dimension.
    """
    pairs = match_estimates(truth, est, cfg)
    pen = _miss_penalties(cfg)
    sq = [0.0, 0.0, 0.0]
    matched = set()
    for ti, ei in pairs:
        matched.add(ti)
        t = truth[ti]
        sq[0] += (t.angle - est.angles[ei]) ** 2
        sq[1] += (t.range - est.ranges[ei]) ** 2
        sq[2] += (t.velocity - est.velocities[ei]) ** 2
    n_miss = len(truth) - len(matched)
    for d in range(3):
        sq[d] += n_miss * pen[d] ** 2
    q = len(truth)
    return (sq[0] / q, sq[1] / q, sq[2] / q)


_DIM_INDEX = {"angle": 0, "range": 1, "velocity": 2}


def rmse(truth, est: EstimateSet, cfg: SystemConfig, dimension: str) -> float:
    """Single-trial RMSE of one dimension (radians / m / m/s)."""
    return math.sqrt(trial_squared_errors(truth, est, cfg)[_DIM_INDEX[dimension]])


def rmse_over_trials(per_trial_mean_sq) -> float:
    """Aggregate trial-level mean squared errors into the final RMSE."""
    arr = np.asarray(list(per_trial_mean_sq), dtype=float)
    if arr.size == 0:
        raise ValueError("no trials to aggregate")
    return float(np.sqrt(arr.mean()))
