"""Command-line interface.

Subcommands: simulate (scene -> echo-cube file), estimate (echo cube + tx
tensor -> estimates JSON), sweep (experiment config -> CSV + manifest),
analyze (closed-form limits / resolutions / gain table) and radar-image
(processed cube -> CSV image).  Config files are flat JSON; angles are in
degrees and powers in dB/dBm at this boundary.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import tensorio
from .analysis import max_unambiguous, processing_gain_bound, resolutions
from .config import linear_to_db, watts_to_dbm
from .cubes import EchoCube, RadarCube
from .echosim import simulate_echo_cube
from .estimator import estimate_joint
from .harness import (aggregate_rmse, build_scene, check_resource_cap,
                      experiment_from_file, export_radar_image, radar_cube_bytes,
                      run_sweep, trial_seed, write_image_csv, write_manifest,
                      write_results_csv, _sense_directions)
from .separate import estimate_separate
from .txgen import make_tx


def _cmd_simulate(args) -> int:
    exp = experiment_from_file(args.config)
    cfg = exp.system
    seed = trial_seed(exp.master_seed, 0, args.trial)
    scene = build_scene(exp.scene, cfg, seed)
    tx, _ = make_tx(cfg, _sense_directions(exp, cfg, scene), seed,
                    exp.sense_power_fraction)
    cube = simulate_echo_cube(cfg, scene, tx, noise_on=exp.noise, seed=seed)
    cube.save(args.out)
    print(f"wrote echo cube {cube.shape} to {args.out}")
    if args.tx_out:
        tensorio.write_tensor(args.tx_out, tx.x)
        print(f"wrote tx tensor {tx.x.shape} to {args.tx_out}")
    return 0


def _cmd_estimate(args) -> int:
    exp = experiment_from_file(args.config)
    cfg = exp.system
    check_resource_cap(cfg, exp.cap_gb)
    cube = EchoCube.load(args.cube)
    tx = tensorio.read_tensor(args.tx)
    q = args.q if args.q is not None else exp.scene.count()
    if args.estimator == "separate":
        est = estimate_separate(cube, tx, cfg, q)
        radar = None
    else:
        est, radar = estimate_joint(cube, tx, cfg, q,
                                    use_scaling=(args.estimator == "joint"))
    result = {
        "estimator": args.estimator,
        "requested": est.requested,
        "found": est.found,
        "clamp_count": est.clamp_count,
        "estimates": [
            {"angle_deg": math.degrees(a), "range_m": r, "velocity_mps": v,
             "peak_magnitude": m}
            for a, r, v, m in est
        ],
    }
    text = json.dumps(result, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    if args.radar_out:
        if radar is None:
            print("note: --radar-out ignored (separate estimator has no cube)",
                  file=sys.stderr)
        else:
            radar.save(args.radar_out)
            print(f"wrote radar cube {radar.shape} to {args.radar_out}",
                  file=sys.stderr)
    return 0


def _cmd_sweep(args) -> int:
    exp = experiment_from_file(args.config)
    if args.workers is not None:
        exp = type(exp)(**{**exp.__dict__, "workers": args.workers})
    rows = run_sweep(exp, timing=args.timing)
    csv_path = f"{args.out_dir}/results.csv"
    write_results_csv(csv_path, rows, timing=args.timing)
    write_manifest(f"{args.out_dir}/manifest.json", exp)
    print(f"wrote {len(rows)} rows to {csv_path}")
    print("sweep_value estimator trials rmse_angle_deg rmse_range_m rmse_velocity_mps")
    for agg in aggregate_rmse(rows):
        print(f"{agg['sweep_value']} {agg['estimator']} {agg['trials']} "
              f"{agg['rmse_angle_deg']:.6g} {agg['rmse_range_m']:.6g} "
              f"{agg['rmse_velocity_mps']:.6g}")
    return 0


def _cmd_analyze(args) -> int:
    exp = experiment_from_file(args.config)
    cfg = exp.system
    lim = max_unambiguous(cfg)
    res = resolutions(cfg)
    gain = processing_gain_bound(cfg)
    print(f"theta_max_deg = {math.degrees(lim.angle):.6g}")
    print(f"d_max_m = {lim.range:.6g}")
    print(f"v_max_mps = {lim.velocity:.6g}")
    print(f"angle_resolution_sin = {res.angle_sin:.6g}")
    print(f"range_resolution_m = {res.range:.6g}")
    print(f"velocity_resolution_mps = {res.velocity:.6g}")
    print(f"processing_gain_bound = {gain:.6g}")
    print(f"processing_gain_bound_db = {linear_to_db(gain):.6g}")
    print(f"tx_power_dbm = {watts_to_dbm(cfg.tx_power):.6g}")
    print(f"radar_cube_gb = {radar_cube_bytes(cfg) / 1024**3:.6g}")
    return 0


def _cmd_radar_image(args) -> int:
    exp = experiment_from_file(args.config)
    axes = tuple(args.axes.split(","))
    radar = RadarCube.load(args.cube)
    row_vals, col_vals, img = export_radar_image(radar, exp.system, axes)
    write_image_csv(args.out, axes, row_vals, col_vals, img)
    print(f"wrote {img.shape[0]}x{img.shape[1]} {axes[0]}-{axes[1]} image to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ofdmsense",
                                description="MIMO-OFDM sensing simulator and estimators")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="synthesize an echo cube from a scene")
    sim.add_argument("--config", required=True)
    sim.add_argument("--out", required=True, help="echo cube output file")
    sim.add_argument("--tx-out", help="also write the transmit tensor")
    sim.add_argument("--trial", type=int, default=0, help="trial index for the seed path")
    sim.set_defaults(func=_cmd_simulate)

    est = sub.add_parser("estimate", help="estimate targets from cube + tx files")
    est.add_argument("--config", required=True)
    est.add_argument("--cube", required=True)
    est.add_argument("--tx", required=True)
    est.add_argument("--q", type=int, help="number of targets to extract")
    est.add_argument("--estimator", default="joint",
                     choices=("joint", "joint_no_scaling", "separate"))
    est.add_argument("--out", help="write estimates JSON here instead of stdout")
    est.add_argument("--radar-out", help="also write the processed radar cube")
    est.set_defaults(func=_cmd_estimate)

    sw = sub.add_parser("sweep", help="run a Monte-Carlo sweep")
    sw.add_argument("--config", required=True)
    sw.add_argument("--out-dir", required=True)
    sw.add_argument("--timing", action="store_true",
                    help="add wall_ms to the CSV (breaks byte reproducibility)")
    sw.add_argument("--workers", type=int, help="override worker count")
    sw.set_defaults(func=_cmd_sweep)

    an = sub.add_parser("analyze", help="closed-form limits, resolutions, gain")
    an.add_argument("--config", required=True)
    an.set_defaults(func=_cmd_analyze)

    im = sub.add_parser("radar-image", help="export a 2-D image from a radar cube")
    im.add_argument("--config", required=True)
    im.add_argument("--cube", required=True, help="radar cube file")
    im.add_argument("--axes", default="angle,range",
                    help="axis pair, e.g. angle,range")
    im.add_argument("--out", required=True)
    im.set_defaults(func=_cmd_radar_image)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
