"""Back-to-back hardware response handling.

The sounder cannot measure a chain against itself, so the calibration set
only ever holds off-diagonal chain pairs. A minimal seed set of
2*(N_RF - 2) + 1 cabled connections (chain 0 to every other chain, chain 1
to every remaining chain), each measured in both directions, completes the
full matrix when the chain responses factor into per-chain transmit and
receive parts.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from soundersim.errors import (
    CalibrationIncompleteError,
    DivisionDegenerateError,
    IncompleteSeedError,
    InvalidConfigError,
)
from soundersim.tensors import ChannelTensor, KIND_CALIBRATED
from soundersim.waveform import ToneSpec

ZERO_BIN_THRESHOLD = 1e-30


@dataclass
class B2bSet:
    """Chain-pair responses on the occupied bins."""

    responses: dict = field(default_factory=dict)  # (p_T, p_R) -> complex (F,)
    s21_att: np.ndarray | None = None

    def add(self, p_t: int, p_r: int, b: np.ndarray) -> None:
        if p_t == p_r:
            raise InvalidConfigError("a chain cannot be calibrated against itself")
        self.responses[(p_t, p_r)] = np.asarray(b, dtype=complex)

    def response(self, p_t: int, p_r: int) -> np.ndarray:
        try:
            return self.responses[(p_t, p_r)]
        except KeyError:
            raise CalibrationIncompleteError(
                f"no back-to-back response for chain pair ({p_t}, {p_r})"
            ) from None

    def pairs(self) -> set:
        return set(self.responses)

    def save(self, path) -> None:
        path = Path(path)
        pairs = sorted(self.responses)
        stack = np.stack([self.responses[p] for p in pairs]) if pairs else np.zeros((0, 0))
        stack.astype("<c16").tofile(path)
        sidecar = {
            "pairs": [list(p) for p in pairs],
            "bins": int(stack.shape[1]) if pairs else 0,
            "s21_att": None
            if self.s21_att is None
            else [[float(v.real), float(v.imag)] for v in self.s21_att],
        }
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar))

    @classmethod
    def load(cls, path) -> "B2bSet":
        path = Path(path)
        sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        pairs = [tuple(p) for p in sidecar["pairs"]]
        data = np.fromfile(path, dtype="<c16").reshape(len(pairs), sidecar["bins"])
        out = cls()
        for p, row in zip(pairs, data):
            out.responses[p] = row
        if sidecar["s21_att"] is not None:
            out.s21_att = np.array([complex(re, im) for re, im in sidecar["s21_att"]])
        return out


def load_attenuator_trace(path) -> tuple[np.ndarray, np.ndarray]:
    """Two-column text file: frequency (Hz) and complex S21 (re+imj or re,im).

    Accepts either ``freq re im`` or ``freq complex`` rows; '#' comments.
    """
    freqs = []
    vals = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.replace(",", " ").split()
        freqs.append(float(parts[0]))
        if len(parts) >= 3:
            vals.append(complex(float(parts[1]), float(parts[2])))
        else:
            vals.append(complex(parts[1]))
    return np.asarray(freqs), np.asarray(vals)


def b2b_response(y_b2b: np.ndarray, tones: ToneSpec, s21_att) -> np.ndarray:
    """One pair's hardware response from a cabled capture through a known
    attenuator: b(k) = Y(k) / (x(k) * s21(k)) on the occupied bins.

    y_b2b may be length L (full spectrum) or length F (occupied only);
    s21_att is a scalar or length-F vector.
    """
    y = np.asarray(y_b2b, dtype=complex)
    if y.size == tones.L:
        y = y[tones.occupied]
    elif y.size != tones.F:
        raise InvalidConfigError(
            f"capture length {y.size} matches neither L={tones.L} nor F={tones.F}"
        )
    s21 = np.broadcast_to(np.asarray(s21_att, dtype=complex), (tones.F,))
    if np.any(np.abs(s21) < ZERO_BIN_THRESHOLD):
        raise DivisionDegenerateError("attenuator trace has (near-)zero bins")
    return y / (tones.x[tones.occupied] * s21)


def seed_connections(n_rf: int) -> set:
    """The 2*(N_RF - 2) + 1 cabled hookups completion starts from: chain 0
    to every other chain, and chain 1 to every chain except 0 and 1."""
    conns = {frozenset((0, p)) for p in range(1, n_rf)}
    conns |= {frozenset((1, p)) for p in range(2, n_rf)}
    return conns


def seed_pairs(n_rf: int) -> set:
    """Directional (p_T, p_R) responses of the seed hookups; one cabled
    connection measures both directions."""
    pairs = set()
    for conn in seed_connections(n_rf):
        a, b = sorted(conn)
        pairs.add((a, b))
        pairs.add((b, a))
    return pairs


def complete_combinations(partial: B2bSet, n_rf: int) -> B2bSet:
    """Fill every off-diagonal pair from the seed set.

    b(p_T, p_R) = b(0, p_R) * b(p_T, 1) / b(0, 1); exact when the chain
    responses factor as tx(p_T) * rx(p_R).
    """
    missing = seed_pairs(n_rf) - partial.pairs()
    if missing:
        raise IncompleteSeedError(f"seed set missing pairs: {sorted(missing)}")
    full = B2bSet(responses=dict(partial.responses), s21_att=partial.s21_att)
    b01 = partial.response(0, 1)
    if np.any(np.abs(b01) < ZERO_BIN_THRESHOLD):
        raise DivisionDegenerateError("reference pair (0, 1) has zero bins")
    for p_t in range(n_rf):
        for p_r in range(n_rf):
            if p_t == p_r or (p_t, p_r) in full.responses:
                continue
            full.responses[(p_t, p_r)] = (
                partial.response(0, p_r) * partial.response(p_t, 1) / b01
            )
    return full


def completion_residual(measured: B2bSet, n_rf: int) -> float:
    """Max relative error of completion against any directly measured pair
    not in the seed set (a diagnostic for non-factorizable chains)."""
    completed = complete_combinations(
        B2bSet(
            responses={p: measured.responses[p] for p in seed_pairs(n_rf) & measured.pairs()},
            s21_att=measured.s21_att,
        ),
        n_rf,
    )
    worst = 0.0
    for pair in measured.pairs() - seed_pairs(n_rf):
        direct = measured.response(*pair)
        rebuilt = completed.response(*pair)
        denom = np.max(np.abs(direct))
        if denom > 0:
            worst = max(worst, float(np.max(np.abs(direct - rebuilt)) / denom))
    return worst


def remove_hardware(h_raw: ChannelTensor, bset: B2bSet) -> ChannelTensor:
    """Divide each measured entry by its chain-pair response."""
    values = h_raw.values.copy()
    seen = set()
    for p_t, p_r, m_t, m_r in h_raw.measured_entries():
        if (p_t, p_r) not in seen:
            seen.add((p_t, p_r))
        b = bset.response(p_t, p_r)
        values[:, p_t, p_r, m_t, m_r, :] /= b
    return ChannelTensor(
        values=values,
        kind=KIND_CALIBRATED,
        freqs=h_raw.freqs,
        measured=h_raw.measured.copy(),
        meta=dict(h_raw.meta),
    )
