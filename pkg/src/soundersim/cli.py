"""Command-line front end: scenario files in, metrics/tensors/estimates out.

Commands
  metrics    validate a scenario and print its derived performance figures
  simulate   synthesize the channel tensor (and optionally the raw streams)
  estimate   run the superresolution path estimator on a saved tensor
  calibrate  build a completed back-to-back calibration set from captures

Exit codes: 0 success, 1 runtime error, 2 input/schema error.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from soundersim import calib, channel, config, estimate, scenario, schedule, waveform
from soundersim.errors import (
    IncompleteSeedError,
    InvalidConfigError,
    InvalidRootError,
    SounderError,
    UnsupportedGridError,
)
from soundersim.tensors import ChannelTensor

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_INPUT = 2

_INPUT_ERRORS = (
    InvalidConfigError,
    InvalidRootError,
    UnsupportedGridError,
    IncompleteSeedError,
    FileNotFoundError,
)

_ANGLE_FIELDS = {"aod_az", "aod_el", "aoa_az", "aoa_el"}
_PATH_FIELDS = {"tau", "doppler"} | _ANGLE_FIELDS


def _load(args) -> scenario.Scenario:
    return scenario.load_scenario(args.scenario)


def cmd_metrics(args) -> int:
    sc = _load(args)
    report = config.validate_config(sc.cfg, _scene_bounds(sc))
    metrics = config.derive_metrics(sc.cfg)
    print(metrics.to_table())
    for w in report.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "metrics.json").write_text(metrics.to_json())
    if not report.ok:
        for v in report.violations:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _scene_bounds(sc: scenario.Scenario) -> dict:
    if not sc.mpcs:
        return {}
    taus = [m.tau for m in sc.mpcs]
    return {"tau0_max": min(taus), "dtau_max": max(taus) - min(taus)}


def cmd_simulate(args) -> int:
    sc = _load(args)
    cfg = sc.cfg
    seed = sc.seed if args.seed is None else args.seed
    tones = waveform.build_tones(cfg.L, cfg.F, cfg.zc_root)
    plan = schedule.build_schedule(cfg)
    tmap = schedule.timestamps(plan, cfg, sc.snapshots)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    tensor = channel.synth_transfer(
        sc.mpcs, sc.geometry, cfg, tones, tmap,
        noise_power=sc.noise_power, seed=seed,
    )
    tensor.save(out / "tensor.c8")

    if args.raw_stream:
        streams, meta = channel.synth_stream(
            sc.mpcs, sc.geometry, cfg, plan, tones,
            noise_power=sc.noise_power, snapshots=sc.snapshots,
            seed=seed, full_scale=sc.full_scale,
        )
        np.save(out / "streams.npy", streams)
        (out / "streams.json").write_text(json.dumps(meta))
        raw = estimate.process_stream(streams, meta, cfg, plan, sc.snapshots)
        h = estimate.transfer_function(raw, tones, cfg.f_c, cfg.f_s)
        h.save(out / "tensor_from_stream.c8")
    return EXIT_OK


def _parse_subspace(spec: str) -> dict:
    """'aoa_az=-30:30,tau=0:1e-6' -> parameter bounds; angles in degrees."""
    bounds = {}
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            name, interval = part.split("=")
            lo, hi = (float(v) for v in interval.split(":"))
        except ValueError:
            raise InvalidConfigError(f"bad subspace term {part!r}, want name=lo:hi") from None
        name = name.strip()
        if name not in _PATH_FIELDS:
            raise InvalidConfigError(f"unknown subspace parameter {name!r}")
        if name in _ANGLE_FIELDS:
            lo, hi = math.radians(lo), math.radians(hi)
        bounds[name] = (lo, hi)
    return bounds


def _write_paths_csv(path, paths, window_time: float) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["time_s", "tau_s", "doppler_hz",
             "aod_az_deg", "aod_el_deg", "aoa_az_deg", "aoa_el_deg",
             "gain_db", "power_db"]
        )
        for p in paths:
            mag = float(np.linalg.norm(p.gain))
            writer.writerow(
                [f"{window_time:.9g}", f"{p.tau:.12g}", f"{p.doppler:.9g}",
                 f"{math.degrees(p.aod_az):.6f}", f"{math.degrees(p.aod_el):.6f}",
                 f"{math.degrees(p.aoa_az):.6f}", f"{math.degrees(p.aoa_el):.6f}",
                 f"{20.0 * math.log10(max(mag, 1e-300)):.6f}", f"{p.power_db:.6f}"]
            )


def cmd_estimate(args) -> int:
    sc = _load(args)
    cfg = sc.cfg
    tensor = ChannelTensor.load(args.tensor)
    plan = schedule.build_schedule(cfg)
    tmap = schedule.timestamps(plan, cfg, tensor.snapshots)
    settings = estimate.SageSettings(max_paths=args.max_paths)
    paths, residual = estimate.sage_estimate(tensor, sc.geometry, tmap, settings)
    if args.subspace:
        paths = estimate.subspace_filter(paths, _parse_subspace(args.subspace))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_paths_csv(out / "paths.csv", paths, window_time=0.0)
    trace = residual.meta.get("residual_power_trace", [])
    (out / "residual.json").write_text(
        json.dumps({"paths": len(paths), "residual_power_trace": trace})
    )
    return EXIT_OK


def cmd_calibrate(args) -> int:
    sc = _load(args)
    cfg = sc.cfg
    tones = waveform.build_tones(cfg.L, cfg.F, cfg.zc_root)
    if args.attenuator:
        freqs, s21 = calib.load_attenuator_trace(args.attenuator)
        rf = cfg.f_c + tones.baseband_offsets(cfg.f_s)
        if freqs.size == 1:
            s21_occ = np.full(tones.F, s21[0])
        else:
            s21_occ = np.interp(rf, freqs, s21.real) + 1j * np.interp(rf, freqs, s21.imag)
    else:
        s21_occ = np.ones(tones.F, dtype=complex)

    with np.load(args.captures) as captures:
        partial = calib.B2bSet(s21_att=s21_occ)
        for key in captures.files:
            p_t, p_r = (int(v) for v in key.split("_"))
            partial.add(p_t, p_r, calib.b2b_response(captures[key], tones, s21_occ))
    residual = calib.completion_residual(partial, cfg.n_rf)
    seeds = calib.B2bSet(
        responses={
            p: partial.responses[p]
            for p in calib.seed_pairs(cfg.n_rf) & partial.pairs()
        },
        s21_att=s21_occ,
    )
    full = calib.complete_combinations(seeds, cfg.n_rf)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    full.save(out / "b2b.c16")
    (out / "calibration.json").write_text(
        json.dumps({"pairs": len(full.responses), "completion_residual": residual})
    )
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="soundersim", description="channel sounder software twin"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("metrics", help="derived performance metrics")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("simulate", help="synthesize tensors from a scene")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--raw-stream", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="superresolution path estimation")
    p.add_argument("--scenario", required=True)
    p.add_argument("--tensor", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--subspace", default=None, help="name=lo:hi[,...] filter")
    p.add_argument("--max-paths", type=int, default=5)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("calibrate", help="complete a back-to-back set")
    p.add_argument("--scenario", required=True)
    p.add_argument("--captures", required=True, help=".npz of 'pT_pR' spectra")
    p.add_argument("--attenuator", default=None, help="S21 trace text file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _INPUT_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SounderError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
