"""Frequency-domain echo synthesis for point-target scenes.

The received cube is built directly in the frequency domain: each target
contributes its reflection-weighted transmit projection times three phase
ramps (receive antenna, subcarrier, symbol).  Per-symbol Doppler is constant
across subcarriers and only first-order reflections are modelled.
"""
from __future__ import annotations

import numpy as np

from .config import SystemConfig, Target, check_cp_window
from .core import (doppler_freq, path_loss, range_freq, rx_spatial_freq,
                   steering_vector, tx_spatial_freq)
from .cubes import EchoCube
from .seeds import derive_rng
from .txgen import TxSignal


def reflection_coefficients(n_targets: int, beta_pow: float, seed: int) -> np.ndarray:
    """I.i.d. circular complex Gaussian reflection coefficients, E|b|^2 = beta_pow.

    Coefficients are constant within a CPI; Monte-Carlo sweeps redraw them
    per trial through the seed path.
    """
    if n_targets < 0:
        raise ValueError("n_targets must be >= 0")
    rng = derive_rng(seed, "reflection")
    draw = rng.standard_normal(n_targets) + 1j * rng.standard_normal(n_targets)
    return np.sqrt(beta_pow / 2.0) * draw


def sensing_noise(cfg: SystemConfig, seed: int) -> np.ndarray:
    """One cube of i.i.d. circular complex Gaussian noise with power noise_pow_sense."""
    rng = derive_rng(seed, "noise")
    shape = (cfg.n_rx, cfg.n_sc, cfg.n_sym)
    return np.sqrt(cfg.noise_pow_sense / 2.0) * (rng.standard_normal(shape)
                                                 + 1j * rng.standard_normal(shape))


def target_contribution(cfg: SystemConfig, target: Target, tx: TxSignal) -> np.ndarray:
    """Noise-free cube contribution of a single target."""
    coef = np.tensordot(steering_vector(tx_spatial_freq(target.angle, cfg), cfg.n_tx).conj(),
                        tx.x, axes=(0, 0))  # a^H x, shape (n_sc, n_sym)
    amp = target.reflection * np.sqrt(path_loss(2.0 * target.range, cfg))
    ramp_rx = np.exp(1j * rx_spatial_freq(target.angle, cfg) * np.arange(cfg.n_rx))
    ramp_sc = np.exp(1j * range_freq(target.range, cfg) * np.arange(cfg.n_sc))
    ramp_sym = np.exp(1j * doppler_freq(target.velocity, cfg) * np.arange(cfg.n_sym))
    plane = amp * coef * ramp_sc[:, None] * ramp_sym[None, :]
    return ramp_rx[:, None, None] * plane[None, :, :]


def simulate_echo_cube(cfg: SystemConfig, targets, tx: TxSignal,
                       noise_on: bool = True, seed: int = 0) -> EchoCube:
    """Synthesize the received echo cube (n_rx, n_sc, n_sym) for a target scene.

    Deterministic given ``seed``; the noise stream does not depend on the
    target list, so adding targets never perturbs the noise realisation.
    """
    tx.check_config(cfg)
    check_cp_window(cfg, targets)
    data = np.zeros((cfg.n_rx, cfg.n_sc, cfg.n_sym), dtype=complex)
    for target in targets:
        data += target_contribution(cfg, target, tx)
    if noise_on:
        data += sensing_noise(cfg, seed)
    return EchoCube(data)
