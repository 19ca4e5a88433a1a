"""TDMA measurement schedule, timestamps and switch timeline.

Slot order: transmit antennas advance in (chain, antenna) lexicographic
order; within one transmit antenna the receive switches step synchronously
through max(n_R) positions. Chains with fewer receive antennas idle in the
surplus positions, and a chain never receives while it transmits.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass

from soundersim.config import SounderConfig
from soundersim.errors import EmptyPlanError, InfeasibleError

MAX_SWITCH_RATE_HZ = 50e3


@dataclass(frozen=True)
class Slot:
    index: int
    tx: tuple[int, int]                  # (chain, antenna)
    rx: tuple[tuple[int, int], ...]      # active (chain, antenna) set


@dataclass(frozen=True)
class ChannelPlan:
    slots: tuple[Slot, ...]
    slot_duration: float   # (P + M*L) * T_s
    snapshot_slots: int

    def directional_pairs(self) -> set:
        """All measured ((tx chain, tx ant), (rx chain, rx ant)) pairs."""
        pairs = set()
        for slot in self.slots:
            for rx in slot.rx:
                pairs.add((slot.tx, rx))
        return pairs

    def to_json(self) -> str:
        return json.dumps(
            {
                "slot_duration": self.slot_duration,
                "snapshot_slots": self.snapshot_slots,
                "slots": [
                    {"index": s.index, "tx": list(s.tx), "rx": [list(r) for r in s.rx]}
                    for s in self.slots
                ],
            },
            indent=2,
        )

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["slot", "tx_chain", "tx_antenna", "rx_chain", "rx_antenna"])
            for slot in self.slots:
                for chain, ant in slot.rx:
                    writer.writerow([slot.index, slot.tx[0], slot.tx[1], chain, ant])


@dataclass(frozen=True)
class TimestampMap:
    """Measurement time of every channel, seconds from capture start."""

    times: dict  # (snapshot, p_T, p_R, m_T, m_R) -> seconds
    T_rep: float
    snapshots: int

    def t(self, s: int, p_t: int, p_r: int, m_t: int, m_r: int) -> float:
        return self.times[(s, p_t, p_r, m_t, m_r)]


def build_schedule(cfg: SounderConfig) -> ChannelPlan:
    if sum(cfg.n_T) == 0 or sum(cfg.n_R) == 0:
        raise EmptyPlanError("no tx or no rx antennas configured")
    max_rx = max(cfg.n_R)
    slots = []
    index = 0
    for tx_chain, n_tx in enumerate(cfg.n_T):
        for tx_ant in range(n_tx):
            for position in range(max_rx):
                rx = tuple(
                    (chain, position)
                    for chain, n_rx in enumerate(cfg.n_R)
                    if chain != tx_chain and position < n_rx
                )
                slots.append(Slot(index=index, tx=(tx_chain, tx_ant), rx=rx))
                index += 1
    return ChannelPlan(
        slots=tuple(slots),
        slot_duration=cfg.slot_samples * cfg.T_s,
        snapshot_slots=len(slots),
    )


def compute_R(cfg_without_r: SounderConfig, T_rep: float) -> int:
    """Inter-snapshot skip realizing the target repetition interval.

    Uses the convention consistent with the snapshot-rate formula:
    R = ceil(T_rep/T_s) - time_slots*(P + M*L). The R field of the input
    config is ignored.
    """
    cfg = cfg_without_r
    active = cfg.time_slots * cfg.slot_samples
    r = math.ceil(T_rep * cfg.f_s) - active
    if r < 0:
        raise InfeasibleError(
            f"T_rep={T_rep} too short: needs at least {active * cfg.T_s} s"
        )
    return r


def timestamps(plan: ChannelPlan, cfg: SounderConfig, snapshots: int) -> TimestampMap:
    """Per-channel capture times, anchored at the first retained sample of
    the M-average window (after the P discards)."""
    t_rep = (cfg.time_slots * cfg.slot_samples + cfg.R) / cfg.f_s
    times = {}
    for s in range(snapshots):
        base = s * t_rep
        for slot in plan.slots:
            t = base + slot.index * cfg.slot_samples * cfg.T_s + cfg.P * cfg.T_s
            p_t, m_t = slot.tx
            for p_r, m_r in slot.rx:
                times[(s, p_t, p_r, m_t, m_r)] = t
    return TimestampMap(times=times, T_rep=t_rep, snapshots=snapshots)


def switch_timeline(plan: ChannelPlan, cfg: SounderConfig) -> tuple[list[dict], list[str]]:
    """One switch event per chain per slot at slot start.

    Returns (events, warnings); a warning is emitted when the slot rate
    exceeds the maximum RF switch frequency.
    """
    events = []
    warnings = []
    if plan.slot_duration < 1.0 / MAX_SWITCH_RATE_HZ:
        warnings.append(
            f"switch rate {1.0 / plan.slot_duration / 1e3:.1f} kHz exceeds "
            f"{MAX_SWITCH_RATE_HZ / 1e3:.0f} kHz"
        )
    for slot in plan.slots:
        t = slot.index * plan.slot_duration
        tx_chain, tx_ant = slot.tx
        events.append({"time": t, "chain": tx_chain, "switch_state": ("tx", tx_ant)})
        for chain, ant in slot.rx:
            events.append({"time": t, "chain": chain, "switch_state": ("rx", ant)})
    return events, warnings
