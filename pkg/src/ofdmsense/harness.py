"""Experiment harness: scenario construction, Monte-Carlo sweeps, persistence.

A sweep is fully determined by (experiment config, master seed): per-trial
random streams are derived from the master seed, the sweep-point index, the
trial index and a purpose tag through a splittable seed construction, so
results for one sweep point never change when other points are added.
"""
from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from .analysis import trial_squared_errors
from .config import SystemConfig, Target, db_to_linear, dbm_to_watts, desk_scale, full_scale
from .core import delay_bins, signed_bins
from .cubes import RadarCube
from .echosim import reflection_coefficients, simulate_echo_cube
from .estimator import estimate_joint
from .seeds import derive_rng
from .separate import estimate_separate
from .txgen import make_tx

DEFAULT_CAP_GB = 2.0

ESTIMATOR_NAMES = ("joint", "joint_no_scaling", "separate")

SWEEP_VARIABLES = ("tx_power_dbm", "n_tx", "n_rx", "n_sc", "n_sym", "n_targets")

CSV_COLUMNS = ("sweep_value", "trial", "estimator", "rmse_angle_deg",
               "rmse_range_m", "rmse_velocity_mps", "mean_peak_mag", "clamp_count")


class ResourceCapError(RuntimeError):
    """Configuration would exceed the radar-cube memory cap."""


def radar_cube_bytes(cfg: SystemConfig) -> int:
    return cfg.n_fft_angle * cfg.n_fft_range * cfg.n_fft_doppler * 16


def check_resource_cap(cfg: SystemConfig, cap_gb: float = DEFAULT_CAP_GB) -> None:
    need = radar_cube_bytes(cfg)
    cap = cap_gb * 1024 ** 3
    if need > cap:
        raise ResourceCapError(
            f"radar cube needs {need / 1024**3:.2f} GiB > cap {cap_gb:.2f} GiB; "
            "reduce n_sc/n_sym/n_rx or the DFT padding, or raise the cap")


@dataclass(frozen=True)
class SceneSpec:
    """Either a fixed target list or ranges for uniform random scenes.

    ``targets`` entries are (angle_rad, range_m, velocity_mps); reflection
    coefficients are drawn per trial (``reflection_mode='random'``) or fixed
    at sqrt(beta_pow) (``'fixed'``) for noise-free demonstrations.
    """

    targets: tuple = ()                      # fixed positions; empty = random scene
    n_targets: int = 1
    angle_range: tuple = (-math.pi / 6, math.pi / 6)
    range_range: tuple = (40.0, 80.0)
    velocity_range: tuple = (-50.0, 50.0)
    reflection_mode: str = "random"

    def __post_init__(self):
        if self.reflection_mode not in ("random", "fixed"):
            raise ValueError("reflection_mode must be 'random' or 'fixed'")
        if self.n_targets < 0:
            raise ValueError("n_targets must be >= 0")

    def count(self) -> int:
        return len(self.targets) if self.targets else self.n_targets


def trial_seed(master_seed: int, point_idx: int, trial_idx: int) -> int:
    """64-bit per-trial seed; purpose tags branch off it inside each draw."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(point_idx, trial_idx))
    return int(ss.generate_state(1, np.uint64)[0])


def build_scene(scene: SceneSpec, cfg: SystemConfig, seed: int) -> list:
    """Materialise one trial's target list (positions + reflection draws)."""
    n = scene.count()
    if scene.targets:
        pos = list(scene.targets)
    else:
        rng = derive_rng(seed, "scene")
        pos = [(rng.uniform(*scene.angle_range), rng.uniform(*scene.range_range),
                rng.uniform(*scene.velocity_range)) for _ in range(n)]
    if scene.reflection_mode == "fixed":
        betas = np.full(n, math.sqrt(cfg.beta_pow), dtype=complex)
    else:
        betas = reflection_coefficients(n, cfg.beta_pow, seed)
    return [Target(angle=a, range=r, velocity=v, reflection=b)
            for (a, r, v), b in zip(pos, betas)]


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemConfig
    scene: SceneSpec = field(default_factory=SceneSpec)
    sweep_variable: str | None = None
    sweep_values: tuple = (None,)
    trials: int = 1
    estimators: tuple = ("joint",)
    master_seed: int = 0
    noise: bool = True
    sense_dirs: object = "targets"     # "targets" | "none" | tuple of radians
    sense_power_fraction: float | None = None
    q_estimate: int | None = None
    workers: int = 1
    cap_gb: float = DEFAULT_CAP_GB

    def __post_init__(self):
        if self.sweep_variable is not None and self.sweep_variable not in SWEEP_VARIABLES:
            raise ValueError(f"unknown sweep variable {self.sweep_variable!r}")
        for e in self.estimators:
            if e not in ESTIMATOR_NAMES:
                raise ValueError(f"unknown estimator {e!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")


def apply_sweep(cfg: SystemConfig, variable: str | None, value) -> SystemConfig:
    """System config at one sweep point; DFT sizes keep their padding factor."""
    if variable is None or variable == "n_targets":
        return cfg
    if variable == "tx_power_dbm":
        return cfg.replace(tx_power=dbm_to_watts(value))
    value = int(value)
    if variable == "n_tx":
        return cfg.replace(n_tx=value)
    if variable == "n_rx":
        pad = cfg.n_fft_angle // cfg.n_rx
        return cfg.replace(n_rx=value, n_fft_angle=pad * value)
    if variable == "n_sc":
        pad = cfg.n_fft_range // cfg.n_sc
        return cfg.replace(n_sc=value, n_fft_range=pad * value)
    if variable == "n_sym":
        pad = cfg.n_fft_doppler // cfg.n_sym
        return cfg.replace(n_sym=value, n_fft_doppler=pad * value)
    raise ValueError(f"unknown sweep variable {variable!r}")


def scene_at(exp: ExperimentConfig, value) -> SceneSpec:
    if exp.sweep_variable == "n_targets":
        return SceneSpec(targets=(), n_targets=int(value),
                         angle_range=exp.scene.angle_range,
                         range_range=exp.scene.range_range,
                         velocity_range=exp.scene.velocity_range,
                         reflection_mode=exp.scene.reflection_mode)
    return exp.scene


def _sense_directions(exp: ExperimentConfig, cfg: SystemConfig, scene) -> list:
    if exp.sense_dirs == "none":
        return []
    if exp.sense_dirs == "targets":
        dirs = [t.angle for t in scene]
    else:
        dirs = list(exp.sense_dirs)
    # drop directions that would overload the zero-forcing row budget
    room = cfg.n_tx - cfg.n_users
    return dirs[:max(0, room)]


_ESTIMATORS = {
    "joint": lambda cube, tx, cfg, q: estimate_joint(cube, tx, cfg, q)[0],
    "joint_no_scaling": lambda cube, tx, cfg, q: estimate_joint(cube, tx, cfg, q,
                                                                use_scaling=False)[0],
    "separate": estimate_separate,
}


def run_trial(exp: ExperimentConfig, point_idx: int, trial_idx: int,
              timing: bool = False) -> list:
    """All estimator rows for one (sweep point, trial) unit of work."""
    value = exp.sweep_values[point_idx]
    cfg = apply_sweep(exp.system, exp.sweep_variable, value)
    seed = trial_seed(exp.master_seed, point_idx, trial_idx)
    scene = build_scene(scene_at(exp, value), cfg, seed)
    tx, _ = make_tx(cfg, _sense_directions(exp, cfg, scene), seed,
                    exp.sense_power_fraction)
    cube = simulate_echo_cube(cfg, scene, tx, noise_on=exp.noise, seed=seed)
    q = exp.q_estimate if exp.q_estimate is not None else len(scene)

    rows = []
    for name in exp.estimators:
        t0 = time.perf_counter()
        est = _ESTIMATORS[name](cube, tx, cfg, q)
        wall_ms = (time.perf_counter() - t0) * 1e3
        sq_a, sq_r, sq_v = trial_squared_errors(scene, est, cfg)
        row = {
            "sweep_value": value if value is not None else 0,
            "trial": trial_idx,
            "estimator": name,
            "rmse_angle_deg": math.degrees(math.sqrt(sq_a)),
            "rmse_range_m": math.sqrt(sq_r),
            "rmse_velocity_mps": math.sqrt(sq_v),
            "mean_peak_mag": float(est.peak_mags.mean()) if est.found else 0.0,
            "clamp_count": est.clamp_count,
        }
        if timing:
            row["wall_ms"] = wall_ms
        rows.append(row)
    return rows


def _trial_star(args):
    return run_trial(*args)


def run_sweep(exp: ExperimentConfig, timing: bool = False) -> list:
    """Run every (sweep point, trial) and return rows in deterministic order."""
    for value in exp.sweep_values:
        cfg = apply_sweep(exp.system, exp.sweep_variable, value)
        check_resource_cap(cfg, exp.cap_gb)
        if cfg.n_users > cfg.n_tx:
            raise ValueError(f"sweep point {value}: n_users exceeds n_tx")
    tasks = [(exp, p, t, timing)
             for p in range(len(exp.sweep_values)) for t in range(exp.trials)]
    if exp.workers > 1:
        with ProcessPoolExecutor(max_workers=exp.workers) as pool:
            nested = list(pool.map(_trial_star, tasks, chunksize=4))
    else:
        nested = [run_trial(*t) for t in tasks]
    return [row for rows in nested for row in rows]


def aggregate_rmse(rows) -> list:
    """Sweep-level RMSE per (sweep_value, estimator): root of mean squared trial RMSE."""
    groups = {}
    for r in rows:
        groups.setdefault((r["sweep_value"], r["estimator"]), []).append(r)
    out = []
    for (value, name), grp in sorted(groups.items(), key=lambda kv: (str(kv[0][0]), kv[0][1])):
        agg = {"sweep_value": value, "estimator": name, "trials": len(grp)}
        for col in ("rmse_angle_deg", "rmse_range_m", "rmse_velocity_mps"):
            agg[col] = math.sqrt(sum(r[col] ** 2 for r in grp) / len(grp))
        out.append(agg)
    return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_results_csv(path, rows, timing: bool = False) -> None:
    cols = CSV_COLUMNS + (("wall_ms",) if timing else ())
    lines = [",".join(cols)]
    for r in rows:
        lines.append(",".join(_fmt(r[c]) for c in cols))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _scene_dict(scene: SceneSpec) -> dict:
    return {
        "targets": [[math.degrees(a), r, v] for a, r, v in scene.targets],
        "n_targets": scene.n_targets,
        "angle_deg_range": [math.degrees(scene.angle_range[0]),
                            math.degrees(scene.angle_range[1])],
        "range_m_range": list(scene.range_range),
        "velocity_mps_range": list(scene.velocity_range),
        "reflection_mode": scene.reflection_mode,
    }


def manifest_dict(exp: ExperimentConfig) -> dict:
    """Fully resolved experiment description (deterministic content)."""
    sys_fields = {k: getattr(exp.system, k) for k in (
        "fc", "delta_f", "n_sc", "t_sym", "t_cp", "t_total", "n_sym", "n_tx",
        "n_rx", "d_tx", "d_rx", "ref_gain", "ref_dist", "pl_exp", "beta_pow",
        "noise_pow_comm", "noise_pow_sense", "qam_order", "n_fft_angle",
        "n_fft_range", "n_fft_doppler", "n_users", "tx_power", "c")}
    return {
        "version": __version__,
        "system": sys_fields,
        "scene": _scene_dict(exp.scene),
        "sweep_variable": exp.sweep_variable,
        "sweep_values": list(exp.sweep_values),
        "trials": exp.trials,
        "estimators": list(exp.estimators),
        "master_seed": exp.master_seed,
        "noise": exp.noise,
        "sense_dirs": (exp.sense_dirs if isinstance(exp.sense_dirs, str)
                       else [math.degrees(d) for d in exp.sense_dirs]),
        "sense_power_fraction": exp.sense_power_fraction,
        "q_estimate": exp.q_estimate,
        "workers": exp.workers,
        "cap_gb": exp.cap_gb,
    }


def write_manifest(path, exp: ExperimentConfig) -> None:
    with open(path, "w") as fh:
        json.dump(manifest_dict(exp), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# experiment config files (flat JSON, boundary units: degrees / dB / dBm)

_SYSTEM_INT_KEYS = ("n_sc", "n_sym", "n_tx", "n_rx", "qam_order", "n_users",
                    "n_fft_angle", "n_fft_range", "n_fft_doppler")
_SYSTEM_SI_KEYS = ("fc", "delta_f", "t_cp", "d_tx", "d_rx", "ref_dist", "pl_exp")


def experiment_from_dict(doc: dict) -> ExperimentConfig:
    """Build an ExperimentConfig from a flat key-value document.

    Unknown keys are rejected.  ``preset`` selects the base system
    ("desk", default, or "full"); explicit system keys override it.
    """
    doc = dict(doc)
    preset = doc.pop("preset", "desk")
    base = {"desk": desk_scale, "full": full_scale}
    if preset not in base:
        raise ValueError(f"unknown preset {preset!r}")

    overrides = {}
    for key in _SYSTEM_SI_KEYS:
        if key in doc:
            overrides[key] = float(doc.pop(key))
    for key in _SYSTEM_INT_KEYS:
        if key in doc:
            overrides[key] = int(doc.pop(key))
    if "ref_gain_db" in doc:
        overrides["ref_gain"] = db_to_linear(float(doc.pop("ref_gain_db")))
    if "beta_pow_db" in doc:
        overrides["beta_pow"] = db_to_linear(float(doc.pop("beta_pow_db")))
    if "noise_comm_dbm" in doc:
        overrides["noise_pow_comm"] = dbm_to_watts(float(doc.pop("noise_comm_dbm")))
    if "noise_sense_dbm" in doc:
        overrides["noise_pow_sense"] = dbm_to_watts(float(doc.pop("noise_sense_dbm")))
    if "tx_power_dbm" in doc:
        overrides["tx_power"] = dbm_to_watts(float(doc.pop("tx_power_dbm")))
    system = base[preset](**overrides)

    scene_kwargs = {}
    if "targets" in doc:
        scene_kwargs["targets"] = tuple(
            (math.radians(a), float(r), float(v)) for a, r, v in doc.pop("targets"))
    if "n_targets" in doc:
        scene_kwargs["n_targets"] = int(doc.pop("n_targets"))
    if "angle_deg_range" in doc:
        lo, hi = doc.pop("angle_deg_range")
        scene_kwargs["angle_range"] = (math.radians(lo), math.radians(hi))
    if "range_m_range" in doc:
        scene_kwargs["range_range"] = tuple(doc.pop("range_m_range"))
    if "velocity_mps_range" in doc:
        scene_kwargs["velocity_range"] = tuple(doc.pop("velocity_mps_range"))
    if "reflection_mode" in doc:
        scene_kwargs["reflection_mode"] = doc.pop("reflection_mode")
    scene = SceneSpec(**scene_kwargs)

    sense_dirs = doc.pop("sense_dirs", "targets")
    if not isinstance(sense_dirs, str):
        sense_dirs = tuple(math.radians(d) for d in sense_dirs)

    exp_kwargs = dict(
        system=system,
        scene=scene,
        sweep_variable=doc.pop("sweep_variable", None),
        sweep_values=tuple(doc.pop("sweep_values", (None,))),
        trials=int(doc.pop("trials", 1)),
        estimators=tuple(doc.pop("estimators", ("joint",))),
        master_seed=int(doc.pop("master_seed", 0)),
        noise=bool(doc.pop("noise", True)),
        sense_dirs=sense_dirs,
        sense_power_fraction=doc.pop("sense_power_fraction", None),
        q_estimate=doc.pop("q_estimate", None),
        workers=int(doc.pop("workers", 1)),
        cap_gb=float(doc.pop("cap_gb", DEFAULT_CAP_GB)),
    )
    if doc:
        raise ValueError(f"unknown experiment config keys: {sorted(doc)}")
    return ExperimentConfig(**exp_kwargs)


def experiment_from_file(path) -> ExperimentConfig:
    with open(path) as fh:
        return experiment_from_dict(json.load(fh))


# ---------------------------------------------------------------------------
# radar image export

_AXIS_ORDER = {"angle": 0, "range": 1, "velocity": 2}


def _axis_values(radar: RadarCube, cfg: SystemConfig, axis: str) -> np.ndarray:
    n_a, n_d, n_v = radar.data.shape
    if axis == "angle":
        arg = -signed_bins(n_a) * cfg.wavelength / (cfg.d_rx * n_a)
        return np.degrees(np.arcsin(np.clip(arg, -1.0, 1.0)))
    if axis == "range":
        return -delay_bins(n_d) * cfg.c / (2.0 * n_d * cfg.delta_f)
    if axis == "velocity":
        return signed_bins(n_v) * cfg.c / (2.0 * n_v * cfg.t_total * cfg.fc)
    raise ValueError(f"unknown axis {axis!r}")


def export_radar_image(radar: RadarCube, cfg: SystemConfig, axes) -> tuple:
    """Max-reduce |cube| over the third axis; returns (row_vals, col_vals, image).

    ``axes`` is a pair from {'angle','range','velocity'}; both axes are
    returned sorted ascending in physical units.
    """
    axes = tuple(axes)
    if len(axes) != 2 or axes[0] == axes[1] or not set(axes) <= set(_AXIS_ORDER):
        raise ValueError(f"invalid axis pair {axes!r}")
    a0, a1 = (_AXIS_ORDER[a] for a in axes)
    drop = ({0, 1, 2} - {a0, a1}).pop()
    img = np.abs(radar.data).max(axis=drop)
    if a0 > a1:
        img = img.T
    row_vals = _axis_values(radar, cfg, axes[0])
    col_vals = _axis_values(radar, cfg, axes[1])
    r_order = np.argsort(row_vals, kind="stable")
    c_order = np.argsort(col_vals, kind="stable")
    return row_vals[r_order], col_vals[c_order], img[np.ix_(r_order, c_order)]


def write_image_csv(path, axes, row_vals, col_vals, image) -> None:
    """CSV matrix with physical-axis headers: first row is the column axis."""
    header = f"{axes[0]}\\{axes[1]}," + ",".join(repr(float(v)) for v in col_vals)
    lines = [header]
    for rv, row in zip(row_vals, image):
        lines.append(repr(float(rv)) + "," + ",".join(repr(float(x)) for x in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
