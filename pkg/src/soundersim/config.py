"""Sounder configuration, frame-timing validation and derived metrics.

All timing quantities are in SI units (seconds, Hz); antenna counts are
per-RF-chain vectors of equal length. A chain is "bidirectional" when it
both transmits and receives; a chain can never measure itself.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict

from soundersim.errors import InvalidConfigError

# 16-bit samples leave this many spare bits for averager growth beyond the
# ADC word; exceeding it is a warning (captures rarely sit at full scale).
HEADROOM_BITS = 2

BYTES_PER_COMPLEX_SAMPLE = 4  # complex short: 16-bit I + 16-bit Q
BOLTZMANN_NOISE_DBM_HZ = -174.0


@dataclass(frozen=True)
class SounderConfig:
    """Full parameter set of one sounder deployment."""

    f_c: float  # carrier frequency (Hz)
    f_s: float  # baseband sample rate (samples/s)
    L: int      # sounding-waveform length (samples)
    F: int      # number of occupied tones
    M: int      # waveforms summed per average
    K: int      # right-shift exponent (divide by 2**K)
    P: int      # discarded samples per slot
    R: int      # inter-snapshot skip (samples)
    n_T: tuple[int, ...]  # tx antennas per RF chain
    n_R: tuple[int, ...]  # rx antennas per RF chain
    T_sw: float = 0.0     # worst-case switch settling time (s)
    adc_bits: int = 12
    tx_power_dbm: float = 18.0
    noise_figure_db: float = 5.0
    n_rf_usrp: int = 4    # RF chains per host group
    zc_root: int = 1

    def __post_init__(self):
        object.__setattr__(self, "n_T", tuple(int(x) for x in self.n_T))
        object.__setattr__(self, "n_R", tuple(int(x) for x in self.n_R))
        if len(self.n_T) != len(self.n_R):
            raise InvalidConfigError(
                f"n_T and n_R length mismatch: {len(self.n_T)} vs {len(self.n_R)}"
            )
        if len(self.n_T) < 1:
            raise InvalidConfigError("need at least one RF chain")
        if any(x < 0 for x in self.n_T + self.n_R):
            raise InvalidConfigError("antenna counts must be non-negative")
        if sum(self.n_T) == 0 or sum(self.n_R) == 0:
            raise InvalidConfigError("need at least one tx and one rx antenna")
        if self.L < 1 or not (1 <= self.F <= self.L):
            raise InvalidConfigError(f"need L >= 1 and 1 <= F <= L, got L={self.L} F={self.F}")
        if self.M < 1 or self.K < 0 or self.P < 0 or self.R < 0:
            raise InvalidConfigError("need M >= 1, K >= 0, P >= 0, R >= 0")
        if self.f_s <= 0:
            raise InvalidConfigError("sample rate must be positive")

    @property
    def n_rf(self) -> int:
        return len(self.n_T)

    @property
    def T_s(self) -> float:
        return 1.0 / self.f_s

    @property
    def slot_samples(self) -> int:
        """Samples consumed by one elementary sounding frame."""
        return self.P + self.M * self.L

    @property
    def time_slots(self) -> int:
        return max(self.n_R) * sum(self.n_T)

    @property
    def headroom_breach(self) -> bool:
        return math.ceil(math.log2(self.M)) - self.K > HEADROOM_BITS


@dataclass(frozen=True)
class DerivedMetrics:
    """Performance metrics derived from a configuration."""

    bandwidth: float
    snapshot_rate: float
    repetition_interval: float
    coherence_time: float
    channels_total: int
    channels_unique: int
    time_slots: int
    max_delay_spread: float
    doppler_limit_snapshot: float
    doppler_limit_burst: float
    doppler_limit_averager: float
    processing_gain_db: float
    data_rate: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def to_table(self) -> str:
        rows = [
            ("Bandwidth", f"{self.bandwidth / 1e6:.1f} MHz"),
            ("Snapshot rate", f"{self.snapshot_rate:.3f} Hz"),
            ("Repetition interval", f"{self.repetition_interval * 1e3:.3f} ms"),
            ("Coherence time", f"{self.coherence_time * 1e6:.1f} us"),
            ("Antenna combinations", str(self.channels_unique)),
            ("Time slots", str(self.time_slots)),
            ("Max delay spread", f"{self.max_delay_spread * 1e6:.2f} us"),
            ("Max Doppler (snapshot)", f"{self.doppler_limit_snapshot:.1f} Hz"),
            ("Max Doppler (burst)", f"{self.doppler_limit_burst / 1e3:.1f} kHz"),
            ("Max Doppler (averager)", f"{self.doppler_limit_averager:.1f} Hz"),
            ("Processing gain", f"{self.processing_gain_db:.1f} dB"),
            ("Data rate", f"{self.data_rate / 1e6:.1f} MB/s"),
        ]
        width = max(len(name) for name, _ in rows)
        return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def count_channels(n_T, n_R) -> dict:
    """Channel counts for per-chain antenna vectors.

    total counts ordered (tx antenna -> rx antenna) pairs across distinct
    chains. unique dedups unordered antenna pairs, so for all-bidirectional
    setups it is total/2 and for one-way links it equals the directional
    count.
    """
    n_T = tuple(int(x) for x in n_T)
    n_R = tuple(int(x) for x in n_R)
    if len(n_T) != len(n_R):
        raise InvalidConfigError("n_T and n_R length mismatch")
    if any(x < 0 for x in n_T + n_R):
        raise InvalidConfigError("antenna counts must be non-negative")

    total = sum(n_T) * sum(n_R) - sum(t * r for t, r in zip(n_T, n_R))

    unordered = set()
    for i, nt in enumerate(n_T):
        for j, nr in enumerate(n_R):
            if i == j:
                continue
            for a in range(nt):
                for b in range(nr):
                    unordered.add(frozenset(((i, a), (j, b))))
    return {
        "total": total,
        "unique": len(unordered),
        "time_slots": max(n_R) * sum(n_T),
    }


def validate_config(cfg: SounderConfig, scene_bounds: dict | None = None) -> ValidationReport:
    """Check frame timing against the scene's delay bounds.

    scene_bounds keys: tau0_max (max first-path delay, s) and dtau_max
    (max delay spread, s). Missing bounds default to zero.
    """
    bounds = scene_bounds or {}
    tau0_max = float(bounds.get("tau0_max", 0.0))
    dtau_max = float(bounds.get("dtau_max", 0.0))
    if tau0_max < 0 or dtau_max < 0:
        raise InvalidConfigError("scene bounds must be non-negative")

    report = ValidationReport()
    if cfg.L < dtau_max / cfg.T_s:
        report.violations.append(
            f"aliasing: L too short ({cfg.L} < {dtau_max / cfg.T_s:.1f} samples of delay spread)"
        )

    # A chain that both transmits and receives switches between roles, so
    # the stricter discard bound applies; rx-only switching relaxes it.
    switched_tx_and_rx = any(t > 0 and r > 0 for t, r in zip(cfg.n_T, cfg.n_R))
    if switched_tx_and_rx:
        p_min = (tau0_max + dtau_max + cfg.T_sw) / cfg.T_s
    else:
        p_min = max((tau0_max + dtau_max) / cfg.T_s, cfg.T_sw / cfg.T_s)
    if cfg.P < p_min:
        report.violations.append(
            f"discard window too short: P={cfg.P} < {p_min:.1f} samples"
        )

    if cfg.headroom_breach:
        report.warnings.append(
            f"fixed-point headroom: ceil(log2(M))-K = "
            f"{math.ceil(math.log2(cfg.M)) - cfg.K} exceeds {HEADROOM_BITS} bits"
        )
    return report


def max_doppler(cfg: SounderConfig) -> dict:
    """The three Doppler limits; no silent minimum is taken."""
    metrics_denominator = cfg.time_slots * cfg.slot_samples + cfg.R
    return {
        "per_snapshot": cfg.f_s / metrics_denominator,
        "per_burst": cfg.f_s / cfg.slot_samples,
        "averager_limit": 0.1 * cfg.f_s / (cfg.M * cfg.L),
    }


def derive_metrics(cfg: SounderConfig) -> DerivedMetrics:
    counts = count_channels(cfg.n_T, cfg.n_R)
    denominator = cfg.time_slots * cfg.slot_samples + cfg.R
    f_rep = cfg.f_s / denominator
    doppler = max_doppler(cfg)
    data_rate = (
        BYTES_PER_COMPLEX_SAMPLE * cfg.f_s * cfg.L * cfg.time_slots * cfg.n_rf_usrp
    ) / denominator
    return DerivedMetrics(
        bandwidth=cfg.f_s * cfg.F / cfg.L,
        snapshot_rate=f_rep,
        repetition_interval=denominator / cfg.f_s,
        coherence_time=cfg.time_slots * cfg.slot_samples / cfg.f_s,
        channels_total=counts["total"],
        channels_unique=counts["unique"],
        time_slots=counts["time_slots"],
        max_delay_spread=cfg.L / cfg.f_s,
        doppler_limit_snapshot=doppler["per_snapshot"],
        doppler_limit_burst=doppler["per_burst"],
        doppler_limit_averager=doppler["averager_limit"],
        processing_gain_db=10.0 * math.log10(cfg.M * cfg.L),
        data_rate=data_rate,
    )


def link_budget(
    cfg: SounderConfig,
    path_loss_db: float,
    tx_ant_gain_dbi: float = 0.0,
    rx_ant_gain_dbi: float = 0.0,
) -> dict:
    """Single-link budget: received power, noise floor and SNR before and
    after the matched-filter/averaging processing gain."""
    bandwidth = cfg.f_s * cfg.F / cfg.L
    rx_power = cfg.tx_power_dbm + tx_ant_gain_dbi + rx_ant_gain_dbi - path_loss_db
    noise_floor = (
        BOLTZMANN_NOISE_DBM_HZ + 10.0 * math.log10(bandwidth) + cfg.noise_figure_db
    )
    snr = rx_power - noise_floor
    return {
        "rx_power_dbm": rx_power,
        "noise_floor_dbm": noise_floor,
        "snr_db": snr,
        "snr_after_gain_db": snr + 10.0 * math.log10(cfg.M * cfg.L),
    }
