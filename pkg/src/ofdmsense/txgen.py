"""Transmit-side generation: QAM streams, zero-forcing precoders, tx tensor.

The precoder treats requested sensing directions as virtual users: their
steering rows are stacked under the real user channels before inversion, so
the beams are steered at users and prospective targets while cross-stream
interference is nulled.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import SystemConfig
from .core import steering_vector, tx_spatial_freq
from .seeds import derive_rng


class SingularChannelError(ValueError):
    """Stacked user/sensing channel matrix is rank deficient on some subcarrier."""


@dataclass(frozen=True)
class TxSignal:
    """Frequency-domain transmit tensor with the precoders and symbols that built it."""

    x: np.ndarray          # (n_tx, n_sc, n_sym)
    precoders: np.ndarray  # (n_sc, n_tx, n_streams)
    symbols: np.ndarray    # (n_streams, n_sc, n_sym)

    def __post_init__(self):
        n_tx, n_sc, n_sym = self.x.shape
        if self.precoders.shape[:2] != (n_sc, n_tx):
            raise ValueError("precoder tensor shape mismatch")
        if self.symbols.shape != (self.precoders.shape[2], n_sc, n_sym):
            raise ValueError("symbol tensor shape mismatch")

    @property
    def n_streams(self) -> int:
        return self.precoders.shape[2]

    def check_config(self, cfg: SystemConfig):
        if self.x.shape != (cfg.n_tx, cfg.n_sc, cfg.n_sym):
            raise ValueError(f"tx tensor shape {self.x.shape} != config "
                             f"{(cfg.n_tx, cfg.n_sc, cfg.n_sym)}")


@dataclass(frozen=True)
class CommChannel:
    """Per-user, per-subcarrier downlink channel vectors, shape (n_users, n_sc, n_tx)."""

    h: np.ndarray

    def __post_init__(self):
        if self.h.ndim != 3:
            raise ValueError("channel tensor must be (n_users, n_sc, n_tx)")


def qam_constellation(order: int) -> np.ndarray:
    """Square-QAM constellation points normalised to unit average power."""
    m = int(round(np.sqrt(order)))
    if m * m != order or order < 4:
        raise ValueError(f"order {order} is not square QAM")
    levels = np.arange(-(m - 1), m, 2, dtype=float)
    points = (levels[None, :] + 1j * levels[:, None]).ravel()
    return points / np.sqrt(2.0 * (m * m - 1) / 3.0)


def gen_qam_symbols(n_streams: int, n_sc: int, n_sym: int, order: int,
                    seed: int) -> np.ndarray:
    """Uniform i.i.d. draws from the unit-power constellation, (n_streams, n_sc, n_sym)."""
    const = qam_constellation(order)
    rng = derive_rng(seed, "symbols")
    idx = rng.integers(0, len(const), size=(n_streams, n_sc, n_sym))
    return const[idx]


def rayleigh_channel(cfg: SystemConfig, seed: int, flat: bool = False) -> CommChannel:
    """I.i.d. unit-power complex Gaussian channel; ``flat`` reuses one draw per user."""
    rng = derive_rng(seed, "channel")
    if flat:
        h1 = (rng.standard_normal((cfg.n_users, 1, cfg.n_tx))
              + 1j * rng.standard_normal((cfg.n_users, 1, cfg.n_tx))) / np.sqrt(2.0)
        h = np.broadcast_to(h1, (cfg.n_users, cfg.n_sc, cfg.n_tx)).copy()
    else:
        h = (rng.standard_normal((cfg.n_users, cfg.n_sc, cfg.n_tx))
             + 1j * rng.standard_normal((cfg.n_users, cfg.n_sc, cfg.n_tx))) / np.sqrt(2.0)
    return CommChannel(h)


def zf_precoder(channel: CommChannel, sense_dirs, cfg: SystemConfig,
                sense_power_fraction: float | None = None) -> np.ndarray:
    """Per-subcarrier zero-forcing precoders toward users and sensing directions.

    Returns a (n_sc, n_tx, n_users + n_sense) tensor.  Each subcarrier's
    stacked matrix [user channels; sensing steering rows] is inverted and the
    columns are scaled to an exact total power of ``cfg.tx_power``.  By
    default the budget is split equally over all columns; with
    ``sense_power_fraction`` set, that fraction goes to the sensing columns
    (split equally) and the rest to the users.
    """
    h = channel.h
    n_users, n_sc, n_tx = h.shape
    sense_dirs = list(sense_dirs)
    n_streams = n_users + len(sense_dirs)
    if n_streams > n_tx:
        raise ValueError(f"{n_users} users + {len(sense_dirs)} sensing directions "
                         f"exceed {n_tx} transmit antennas")

    # per-stream power budget
    if sense_power_fraction is None:
        stream_pow = np.full(n_streams, cfg.tx_power / n_streams)
    else:
        if not 0.0 <= sense_power_fraction < 1.0:
            raise ValueError("sense_power_fraction must be in [0, 1)")
        if not sense_dirs:
            raise ValueError("sense_power_fraction given but no sensing directions")
        stream_pow = np.empty(n_streams)
        stream_pow[:n_users] = cfg.tx_power * (1.0 - sense_power_fraction) / n_users
        stream_pow[n_users:] = cfg.tx_power * sense_power_fraction / len(sense_dirs)

    sense_rows = np.array([steering_vector(tx_spatial_freq(phi, cfg), n_tx).conj()
                           for phi in sense_dirs])  # (n_sense, n_tx)

    w = np.empty((n_sc, n_tx, n_streams), dtype=complex)
    for i in range(n_sc):
        rows = h[:, i, :].conj()  # user rows h^H
        eff = np.vstack([rows, sense_rows]) if len(sense_dirs) else rows
        if np.linalg.matrix_rank(eff) < n_streams:
            raise SingularChannelError(f"effective channel on subcarrier {i} is rank deficient")
        raw = np.linalg.pinv(eff)  # right inverse: eff @ raw = I
        norms = np.linalg.norm(raw, axis=0)
        w[i] = raw * (np.sqrt(stream_pow) / norms)
    return w


def assemble_tx(precoders: np.ndarray, symbols: np.ndarray) -> TxSignal:
    """Apply the per-subcarrier precoders to the symbol streams."""
    n_sc, n_tx, n_streams = precoders.shape
    if symbols.shape[0] != n_streams or symbols.shape[1] != n_sc:
        raise ValueError(f"symbols {symbols.shape} do not match precoders {precoders.shape}")
    # x(n,i,l) = sum_k W_i[n,k] s(k,i,l)
    x = np.einsum("ink,kil->nil", precoders, symbols)
    return TxSignal(x=x, precoders=precoders, symbols=symbols)


def comm_rx(channel: CommChannel, tx: TxSignal, noise_pow: float, seed: int) -> np.ndarray:
    """Per-user received scalar sequence y(k,i,l) = h^H x + noise."""
    h = channel.h
    if h.shape[2] != tx.x.shape[0] or h.shape[1] != tx.x.shape[1]:
        raise ValueError("channel / tx shape mismatch")
    y = np.einsum("kin,nil->kil", h.conj(), tx.x)
    if noise_pow > 0:
        rng = derive_rng(seed, "comm_noise")
        y = y + np.sqrt(noise_pow / 2.0) * (rng.standard_normal(y.shape)
                                            + 1j * rng.standard_normal(y.shape))
    return y


def make_tx(cfg: SystemConfig, sense_dirs, seed: int,
            sense_power_fraction: float | None = None,
            flat_channel: bool = False) -> tuple[TxSignal, CommChannel]:
    """Draw a channel, build the ZF precoders and assemble a transmit tensor."""
    channel = rayleigh_channel(cfg, seed, flat=flat_channel)
    w = zf_precoder(channel, sense_dirs, cfg, sense_power_fraction)
    symbols = gen_qam_symbols(w.shape[2], cfg.n_sc, cfg.n_sym, cfg.qam_order, seed)
    return assemble_tx(w, symbols), channel
