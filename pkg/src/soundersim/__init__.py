"""Software twin of a wideband switched-array channel sounder.

Plan and validate sounder configurations, synthesize the multi-tone
sounding waveform, emulate the fixed-point receive path, simulate
specular multipath scenes, calibrate the hardware response out and
estimate path parameters by iterative superresolution.
"""
from soundersim.config import (  # noqa: F401
    SounderConfig,
    DerivedMetrics,
    ValidationReport,
    count_channels,
    derive_metrics,
    link_budget,
    max_doppler,
    validate_config,
)
from soundersim.errors import SounderError  # noqa: F401
from soundersim.kernels import BACKEND  # noqa: F401

__version__ = "0.1.0"
