"""System configuration and target-scene types shared by the whole toolkit.

Angles are radians everywhere inside the package; degrees appear only at the
CLI / config-file boundary.  Powers and gains are linear (watts) internally;
dB / dBm conversions happen at the same boundary.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

SPEED_OF_LIGHT = 3e8  # propagation speed [m/s]

_REL_TOL = 1e-12
_SQUARE_QAM_ORDERS = (4, 16, 64, 256)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def linear_to_db(x: float) -> float:
    return 10.0 * math.log10(x)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def watts_to_dbm(w: float) -> float:
    return 10.0 * math.log10(w) + 30.0


@dataclass(frozen=True)
class SystemConfig:
    """All OFDM / array / noise parameters plus the processing DFT sizes.

    ``t_sym`` and ``t_total`` may be omitted; they are then derived as
    ``1/delta_f`` and ``t_sym + t_cp``.  If given explicitly they must agree
    with those identities to 1e-12 relative.
    """

    fc: float            # carrier frequency [Hz]
    delta_f: float       # subcarrier spacing [Hz]
    n_sc: int            # subcarriers per OFDM symbol
    t_cp: float          # cyclic-prefix duration [s]
    n_sym: int           # OFDM symbols per coherent processing interval
    n_tx: int            # transmit antennas
    n_rx: int            # receive antennas
    d_tx: float          # transmit antenna spacing [m]
    d_rx: float          # receive antenna spacing [m]
    ref_gain: float      # path-loss gain at the reference distance [linear]
    ref_dist: float      # path-loss reference distance [m]
    pl_exp: float        # path-loss exponent
    beta_pow: float      # mean target reflection power E|beta|^2 [linear]
    noise_pow_comm: float   # per-user receiver noise power [W]
    noise_pow_sense: float  # per-antenna sensing noise power [W]
    qam_order: int
    n_fft_angle: int     # DFT size along the spatial (receive-antenna) axis
    n_fft_range: int     # DFT size along the delay (subcarrier) axis
    n_fft_doppler: int   # DFT size along the Doppler (symbol) axis
    n_users: int         # communication users served by the precoder
    tx_power: float      # total transmit power [W]
    t_sym: float = 0.0   # useful OFDM symbol duration [s]
    t_total: float = 0.0  # total symbol duration incl. CP [s]
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if self.t_sym == 0.0:
            object.__setattr__(self, "t_sym", 1.0 / self.delta_f)
        if self.t_total == 0.0:
            object.__setattr__(self, "t_total", self.t_sym + self.t_cp)
        self.validate()

    def validate(self):
        for name in ("fc", "delta_f", "t_cp", "d_tx", "d_rx", "ref_gain",
                     "ref_dist", "pl_exp", "beta_pow", "noise_pow_comm",
                     "noise_pow_sense", "tx_power", "t_sym", "t_total", "c"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        for name in ("n_sc", "n_sym", "n_tx", "n_rx", "n_users"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive count")
        if abs(self.t_sym * self.delta_f - 1.0) > _REL_TOL:
            raise ValueError("t_sym must equal 1/delta_f")
        if abs(self.t_total - (self.t_sym + self.t_cp)) > _REL_TOL * self.t_total:
            raise ValueError("t_total must equal t_sym + t_cp")
        if self.qam_order not in _SQUARE_QAM_ORDERS:
            raise ValueError(f"qam_order must be one of {_SQUARE_QAM_ORDERS}")
        # zero-padding may never truncate any processing axis
        if self.n_fft_angle < self.n_rx:
            raise ValueError("n_fft_angle must be >= n_rx")
        if self.n_fft_range < self.n_sc:
            raise ValueError("n_fft_range must be >= n_sc")
        if self.n_fft_doppler < self.n_sym:
            raise ValueError("n_fft_doppler must be >= n_sym")
        if self.n_users > self.n_tx:
            raise ValueError("n_users must not exceed n_tx (zero-forcing feasibility)")

    @property
    def wavelength(self) -> float:
        return self.c / self.fc

    def replace(self, **changes) -> "SystemConfig":
        """Return a copy with fields changed; derived timings are re-checked."""
        if ("delta_f" in changes or "t_cp" in changes) and "t_sym" not in changes:
            changes.setdefault("t_sym", 0.0)
            changes.setdefault("t_total", 0.0)
        return replace(self, **changes)


@dataclass(frozen=True)
class Target:
    """Ground truth of one point target."""

    angle: float       # direction of arrival/departure [rad], in (-pi/2, pi/2)
    range: float       # distance [m], > 0
    velocity: float    # radial velocity [m/s]
    reflection: complex  # complex reflection coefficient

    def __post_init__(self):
        if not -math.pi / 2 < self.angle < math.pi / 2:
            raise ValueError("target angle must lie in (-pi/2, pi/2)")
        if self.range <= 0:
            raise ValueError("target range must be positive")


# full-scale 5G NR mmWave-style configuration.  The CP duration is chosen so
# that the total symbol duration is exactly 8.92 us while t_sym = 1/delta_f.
_TABLE_BASE = dict(
    fc=28e9,
    delta_f=120e3,
    n_sc=512,
    t_cp=8.92e-6 - 1.0 / 120e3,
    n_sym=256,
    n_tx=16,
    n_rx=16,
    d_tx=0.5 * SPEED_OF_LIGHT / 28e9,
    d_rx=0.5 * SPEED_OF_LIGHT / 28e9,
    ref_gain=db_to_linear(-30.0),
    ref_dist=1.0,
    pl_exp=2.8,
    beta_pow=db_to_linear(-10.0),
    noise_pow_comm=dbm_to_watts(-60.0),
    noise_pow_sense=dbm_to_watts(-60.0),
    qam_order=16,
    n_users=2,
    tx_power=1.0,
)


def full_scale(**overrides) -> SystemConfig:
    """Full-size configuration (16x512x256 cube, 3x zero-padded DFTs)."""
    params = dict(_TABLE_BASE)
    params.update(n_fft_angle=3 * params["n_rx"], n_fft_range=3 * params["n_sc"],
                  n_fft_doppler=3 * params["n_sym"])
    params.update(overrides)
    return SystemConfig(**params)


def desk_scale(**overrides) -> SystemConfig:
    """Reduced-size configuration preserving all physical constants.

    Keeps every per-bin algebraic property of the full-scale setup while a
    single trial stays in the 10 ms class.
    """
    params = dict(_TABLE_BASE)
    params.update(n_tx=8, n_rx=8, n_sc=64, n_sym=32)
    params.update(n_fft_angle=3 * params["n_rx"], n_fft_range=3 * params["n_sc"],
                  n_fft_doppler=3 * params["n_sym"])
    params.update(overrides)
    return SystemConfig(**params)


class CpViolationError(ValueError):
    """Target delay spread exceeds the cyclic prefix: the ISI-free echo model
    does not apply."""


def check_cp_window(cfg: SystemConfig, targets, strict: bool = False) -> None:
    """Validate the cyclic prefix against a target scene.

    The inter-target round-trip delay spread must fit inside the CP for the
    frequency-domain echo model to be ISI-free (raises otherwise).  The
    absolute round-trip delay of the furthest target only triggers a warning
    unless ``strict`` is set, since the per-symbol model remains usable.
    """
    if not targets:
        return
    dmax = max(t.range for t in targets)
    dmin = min(t.range for t in targets)
    spread_delay = 2.0 * (dmax - dmin) / cfg.c
    if spread_delay > cfg.t_cp:
        raise CpViolationError(
            f"round-trip delay spread {spread_delay:.3e} s exceeds t_cp {cfg.t_cp:.3e} s")
    abs_delay = 2.0 * dmax / cfg.c
    if abs_delay > cfg.t_cp:
        msg = (f"round-trip delay {abs_delay:.3e} s of furthest target exceeds "
               f"t_cp {cfg.t_cp:.3e} s")
        if strict:
            raise CpViolationError(msg)
        warnings.warn(msg)


def warn_if_ambiguous(cfg: SystemConfig, targets) -> None:
    """Warn about targets outside the unambiguous angle/range/velocity region."""
    # deferred import: analysis depends on core which depends on config
    from .analysis import max_unambiguous

    theta_max, d_max, v_max = max_unambiguous(cfg)
    for k, t in enumerate(targets):
        if abs(t.angle) >= theta_max:
            warnings.warn(f"target {k}: |angle| >= unambiguous limit {theta_max:.4f} rad")
        if not 0 < t.range < d_max:
            warnings.warn(f"target {k}: range outside (0, {d_max:.1f}) m")
        if abs(t.velocity) >= v_max:
            warnings.warn(f"target {k}: |velocity| >= unambiguous limit {v_max:.2f} m/s")
