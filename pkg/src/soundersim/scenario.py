"""Scenario files: a YAML description of one measurement setup.

A scenario bundles the sounder configuration, the array geometry (one
entry per RF chain), a propagation scene (an explicit path list and/or a
moving point converted to a time-varying line-of-sight path), noise and
seed. All physical quantities carry their unit in the key name
(``f_c_hz``, ``position_m``, ``aoa_az_deg``); unknown keys are rejected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np
import yaml

from soundersim import antenna
from soundersim.antenna import ChainArray, SPEED_OF_LIGHT
from soundersim.channel import Mpc
from soundersim.config import SounderConfig
from soundersim.errors import InvalidConfigError
from soundersim.schedule import compute_R

_VEC3 = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 3,
    "maxItems": 3,
}

_COMPLEX_PAIR = {
    "type": "array",
    "items": {"type": "number"},
    "minItems": 2,
    "maxItems": 2,
}

_GAIN_MATRIX = {
    "type": "array",
    "items": {"type": "array", "items": _COMPLEX_PAIR, "minItems": 2, "maxItems": 2},
    "minItems": 2,
    "maxItems": 2,
}

_MPC_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["tau_s", "aoa_az_deg", "aoa_el_deg"],
    "properties": {
        "tau_s": {"type": "number", "minimum": 0},
        "doppler_hz": {"type": "number"},
        "aod_az_deg": {"type": "number"},
        "aod_el_deg": {"type": "number"},
        "aoa_az_deg": {"type": "number"},
        "aoa_el_deg": {"type": "number"},
        "gain": _GAIN_MATRIX,          # explicit 2x2 [re, im] entries
        "gain_db": {"type": "number"},  # or scalar magnitude on one pol pair
        "phase_deg": {"type": "number"},
        "pol": {"enum": ["vv", "vh", "hv", "hh"]},
    },
}

_TRAJECTORY_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["start_m", "velocity_mps", "tx_chain", "rx_chain"],
    "properties": {
        "start_m": _VEC3,
        "velocity_mps": _VEC3,
        "tx_chain": {"type": "integer", "minimum": 0},
        "rx_chain": {"type": "integer", "minimum": 0},
        "gain_db": {"type": "number"},
        "time_s": {"type": "number"},
    },
}

_GEOMETRY_ITEM = {
    "type": "object",
    "additionalProperties": False,
    "required": ["kind", "position_m"],
    "properties": {
        "kind": {"enum": ["panel", "antenna"]},
        "position_m": _VEC3,
        "boresight_az_deg": {"type": "number"},
        "rows": {"type": "integer", "minimum": 1},
        "cols": {"type": "integer", "minimum": 1},
        "spacing_m": {"type": "number", "exclusiveMinimum": 0},
        "dual_pol": {"type": "boolean"},
        "pol": {"enum": ["V", "H"]},
    },
}

SCENARIO_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["config", "geometry"],
    "properties": {
        "config": {
            "type": "object",
            "additionalProperties": False,
            "required": ["f_c_hz", "f_s_hz", "L", "F", "M", "K", "P", "n_T", "n_R", "T_sw_s"],
            "properties": {
                "f_c_hz": {"type": "number", "exclusiveMinimum": 0},
                "f_s_hz": {"type": "number", "exclusiveMinimum": 0},
                "L": {"type": "integer", "minimum": 1},
                "F": {"type": "integer", "minimum": 1},
                "M": {"type": "integer", "minimum": 1},
                "K": {"type": "integer", "minimum": 0},
                "P": {"type": "integer", "minimum": 0},
                "R": {"type": "integer", "minimum": 0},
                "t_rep_s": {"type": "number", "exclusiveMinimum": 0},
                "n_T": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "n_R": {"type": "array", "items": {"type": "integer", "minimum": 0}},
                "T_sw_s": {"type": "number", "minimum": 0},
                "adc_bits": {"type": "integer", "minimum": 2, "maximum": 16},
                "tx_power_dbm": {"type": "number"},
                "noise_figure_db": {"type": "number"},
                "n_rf_usrp": {"type": "integer", "minimum": 1},
                "zc_root": {"type": "integer", "minimum": 1},
            },
        },
        "geometry": {"type": "array", "items": _GEOMETRY_ITEM, "minItems": 1},
        "scene": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mpcs": {"type": "array", "items": _MPC_SCHEMA},
                "trajectory": _TRAJECTORY_SCHEMA,
            },
        },
        "noise": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"power": {"type": "number", "minimum": 0}},
        },
        "seed": {"type": "integer", "minimum": 0},
        "options": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "snapshots": {"type": "integer", "minimum": 1},
                "full_scale": {"type": "number", "exclusiveMinimum": 0},
            },
        },
    },
}

_POL_INDEX = {"h": 0, "v": 1}


@dataclass
class Scenario:
    cfg: SounderConfig
    geometry: list[ChainArray]
    mpcs: list[Mpc] = field(default_factory=list)
    noise_power: float = 0.0
    seed: int = 0
    snapshots: int = 1
    full_scale: float | None = None


def _mpc_from_dict(entry: dict) -> Mpc:
    if "gain" in entry and "gain_db" in entry:
        raise InvalidConfigError("give either 'gain' or 'gain_db', not both")
    if "gain" in entry:
        gain = np.array(
            [[complex(re, im) for re, im in row] for row in entry["gain"]]
        )
    else:
        mag = 10.0 ** (entry.get("gain_db", 0.0) / 20.0)
        phase = math.radians(entry.get("phase_deg", 0.0))
        pol = entry.get("pol", "vv")
        gain = np.zeros((2, 2), dtype=complex)
        gain[_POL_INDEX[pol[0]], _POL_INDEX[pol[1]]] = mag * np.exp(1j * phase)
    return Mpc(
        tau=entry["tau_s"],
        doppler=entry.get("doppler_hz", 0.0),
        aod_az=math.radians(entry.get("aod_az_deg", 0.0)),
        aod_el=math.radians(entry.get("aod_el_deg", 90.0)),
        aoa_az=math.radians(entry["aoa_az_deg"]),
        aoa_el=math.radians(entry["aoa_el_deg"]),
        gain=gain,
    )


def _direction_angles(vec: np.ndarray) -> tuple[float, float]:
    d = float(np.linalg.norm(vec))
    if d == 0:
        raise InvalidConfigError("trajectory point coincides with an array")
    az = math.atan2(vec[1], vec[0])
    el = math.acos(max(-1.0, min(1.0, vec[2] / d)))
    return az, el


def trajectory_los_mpc(
    traj: dict, geometry: list[ChainArray], f_c: float, t: float | None = None
) -> Mpc:
    """The line-of-sight path tx -> moving point -> rx at time t.

    The point moves with constant velocity; Doppler is the bistatic
    range rate scaled to the carrier.
    """
    t = traj.get("time_s", 0.0) if t is None else t
    p = np.asarray(traj["start_m"], dtype=float) + t * np.asarray(
        traj["velocity_mps"], dtype=float
    )
    v = np.asarray(traj["velocity_mps"], dtype=float)
    tx_c = np.mean(geometry[traj["tx_chain"]].positions, axis=0)
    rx_c = np.mean(geometry[traj["rx_chain"]].positions, axis=0)
    d_tx = p - tx_c
    d_rx = p - rx_c
    aod_az, aod_el = _direction_angles(d_tx)
    aoa_az, aoa_el = _direction_angles(d_rx)
    tau = (np.linalg.norm(d_tx) + np.linalg.norm(d_rx)) / SPEED_OF_LIGHT
    range_rate = v @ (d_tx / np.linalg.norm(d_tx)) + v @ (d_rx / np.linalg.norm(d_rx))
    doppler = -f_c * range_rate / SPEED_OF_LIGHT
    gain = np.zeros((2, 2), dtype=complex)
    gain[1, 1] = 10.0 ** (traj.get("gain_db", 0.0) / 20.0)
    return Mpc(
        tau=float(tau), doppler=float(doppler),
        aod_az=aod_az, aod_el=aod_el, aoa_az=aoa_az, aoa_el=aoa_el, gain=gain,
    )


def _build_geometry(entries: list[dict], f_c: float) -> list[ChainArray]:
    chains = []
    for entry in entries:
        if entry["kind"] == "panel":
            chains.append(
                antenna.paper_panel(
                    center=np.asarray(entry["position_m"], dtype=float),
                    boresight_azimuth=math.radians(entry.get("boresight_az_deg", 0.0)),
                    f_ref=f_c,
                    rows=entry.get("rows", 2),
                    cols=entry.get("cols", 4),
                    spacing=entry.get("spacing_m", antenna.PANEL_SPACING_M),
                    dual_pol=entry.get("dual_pol", True),
                )
            )
        else:
            chains.append(
                antenna.standalone_antenna(
                    np.asarray(entry["position_m"], dtype=float),
                    f_ref=f_c,
                    pol=entry.get("pol", "V"),
                )
            )
    return chains


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file; schema problems raise
    InvalidConfigError with the offending path."""
    try:
        raw = yaml.safe_load(Path(path).read_text())
    except yaml.YAMLError as exc:
        raise InvalidConfigError(f"unparseable scenario file: {exc}") from exc
    if not isinstance(raw, dict):
        raise InvalidConfigError("scenario file must hold a mapping at top level")
    try:
        jsonschema.validate(raw, SCENARIO_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise InvalidConfigError(f"scenario schema violation at {where}: {exc.message}") from exc

    c = raw["config"]
    if ("R" in c) == ("t_rep_s" in c):
        raise InvalidConfigError("config needs exactly one of 'R' or 't_rep_s'")
    base = dict(
        f_c=c["f_c_hz"], f_s=c["f_s_hz"], L=c["L"], F=c["F"], M=c["M"], K=c["K"],
        P=c["P"], R=c.get("R", 0),
        n_T=tuple(c["n_T"]), n_R=tuple(c["n_R"]), T_sw=c["T_sw_s"],
    )
    for src, dst in (
        ("adc_bits", "adc_bits"), ("tx_power_dbm", "tx_power_dbm"),
        ("noise_figure_db", "noise_figure_db"), ("n_rf_usrp", "n_rf_usrp"),
        ("zc_root", "zc_root"),
    ):
        if src in c:
            base[dst] = c[src]
    cfg = SounderConfig(**base)
    if "t_rep_s" in c:
        cfg = SounderConfig(**{**base, "R": compute_R(cfg, c["t_rep_s"])})

    geometry = _build_geometry(raw["geometry"], cfg.f_c)
    if len(geometry) != cfg.n_rf:
        raise InvalidConfigError(
            f"geometry lists {len(geometry)} chains but config has {cfg.n_rf}"
        )
    for i, (chain, n_t, n_r) in enumerate(zip(geometry, cfg.n_T, cfg.n_R)):
        needed = max(n_t, n_r)
        if chain.n_ports < needed:
            raise InvalidConfigError(
                f"chain {i} provides {chain.n_ports} ports but config needs {needed}"
            )

    scene = raw.get("scene", {})
    mpcs = [_mpc_from_dict(m) for m in scene.get("mpcs", [])]
    if "trajectory" in scene:
        traj = dict(scene["trajectory"])
        if traj["tx_chain"] >= cfg.n_rf or traj["rx_chain"] >= cfg.n_rf:
            raise InvalidConfigError("trajectory references an unknown chain")
        mpcs.append(trajectory_los_mpc(traj, geometry, cfg.f_c))

    options = raw.get("options", {})
    return Scenario(
        cfg=cfg,
        geometry=geometry,
        mpcs=mpcs,
        noise_power=raw.get("noise", {}).get("power", 0.0),
        seed=raw.get("seed", 0),
        snapshots=options.get("snapshots", 1),
        full_scale=options.get("full_scale"),
    )
