"""The six-index channel record and its file format.

Axis order is fixed: (snapshot, tx chain, rx chain, tx antenna,
rx antenna, sample-or-frequency). Entries for combinations that are never
measured are zero; the boolean ``measured`` mask marks the valid ones.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from soundersim.errors import InvalidConfigError

KIND_RAW = "raw"              # sample-domain averaged waveforms (D)
KIND_SPECTRAL = "spectral"    # DFT over the sample axis (Y)
KIND_HARDWARE = "hardware"    # Y/x: channel including the RF chains (H_hw)
KIND_CALIBRATED = "calibrated"  # hardware response removed (H)


@dataclass
class ChannelTensor:
    values: np.ndarray            # complex, 6 axes
    kind: str
    freqs: np.ndarray | None = None   # absolute RF frequency per last-axis bin
    measured: np.ndarray | None = None  # bool, shape values.shape[1:5]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values.ndim != 6:
            raise InvalidConfigError(
                f"tensor must have 6 axes, got {self.values.ndim}"
            )
        if self.measured is None:
            self.measured = np.ones(self.values.shape[1:5], dtype=bool)

    @property
    def snapshots(self) -> int:
        return self.values.shape[0]

    def measured_entries(self):
        """Iterate (p_T, p_R, m_T, m_R) index tuples of measured channels."""
        for idx in np.argwhere(self.measured):
            yield tuple(int(i) for i in idx)

    def save(self, path) -> None:
        """Binary complex64 values + JSON sidecar, little-endian."""
        path = Path(path)
        self.values.astype("<c8").tofile(path)
        sidecar = {
            "shape": list(self.values.shape),
            "axis_order": ["s", "p_T", "p_R", "m_T", "m_R", "k"],
            "kind": self.kind,
            "dtype": "<c8",
            "freqs": None if self.freqs is None else list(map(float, self.freqs)),
            "measured": self.measured.astype(int).ravel().tolist(),
            "meta": self.meta,
        }
        path.with_suffix(path.suffix + ".json").write_text(json.dumps(sidecar))

    @classmethod
    def load(cls, path) -> "ChannelTensor":
        path = Path(path)
        sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        shape = tuple(sidecar["shape"])
        values = np.fromfile(path, dtype=sidecar["dtype"]).reshape(shape).astype(complex)
        freqs = sidecar["freqs"]
        measured = np.asarray(sidecar["measured"], dtype=bool).reshape(shape[1:5])
        return cls(
            values=values,
            kind=sidecar["kind"],
            freqs=None if freqs is None else np.asarray(freqs),
            measured=measured,
            meta=sidecar.get("meta", {}),
        )
