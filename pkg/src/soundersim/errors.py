"""Exception types shared across the package."""


class SounderError(Exception):
    """Base class for all package errors."""


class InvalidConfigError(SounderError):
    """Malformed sounder configuration (bad vectors, infeasible values)."""


class InvalidRootError(SounderError):
    """Zadoff-Chu root not coprime with the sequence length."""


class EmptyPlanError(SounderError):
    """Schedule requested for a config with no usable tx/rx antennas."""


class InfeasibleError(SounderError):
    """Requested timing cannot be realized (e.g. snapshot interval too short)."""


class TruncatedCaptureError(SounderError):
    """Sample stream ended before the requested snapshots were framed.

    Carries the frames recovered so far in ``partial``.
    """

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial if partial is not None else []


class AliasingError(SounderError):
    """Scene delay spread exceeds what the waveform length can represent."""


class CalibrationIncompleteError(SounderError):
    """A required chain-pair response is missing from the calibration set."""


class IncompleteSeedError(SounderError):
    """Back-to-back seed set is missing a required chain pair."""


class DivisionDegenerateError(SounderError):
    """Deconvolution would divide by a (near-)zero reference bin."""


class UnsupportedGridError(SounderError):
    """Pattern samples are not on the regular sphere grid the fit expects."""


class UndefinedPaprError(SounderError):
    """PAPR requested for a zero-energy waveform."""
