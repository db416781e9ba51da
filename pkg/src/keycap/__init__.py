"""Secret-key capacity of fast-fading MIMO wiretap channels."""

from .capacity import CapacityEstimate, SweepSeries, estimate_capacity, sweep
from .channel import ChannelConfig, ChannelSample, sample_channel
from .rng import SeedSpec

__version__ = "0.1.0"

__all__ = [
    "CapacityEstimate", "SweepSeries", "estimate_capacity", "sweep",
    "ChannelConfig", "ChannelSample", "sample_channel", "SeedSpec",
]
