"""Simulation and analysis of AVX-induced frequency-license transitions."""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    LicenseLevel,
    FrequencyTable,
    TransitionCostTable,
    break_even_time,
    break_even_table,
    dilate,
)
from .trace import SegmentClass, TraceSegment, WorkloadTrace  # noqa: F401
from .simengine import SimConfig, TimeoutMode, simulate  # noqa: F401
