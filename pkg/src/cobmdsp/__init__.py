"""Burst-mode coherent optical TDMA receiver simulator."""

from .channel import ChannelConfig, assemble_uplink, impair_burst
from .config import ExperimentConfig, bundled_config, load_config
from .sigcore import DspParams, DualPolBurst

__all__ = [
    "ChannelConfig",
    "DspParams",
    "DualPolBurst",
    "ExperimentConfig",
    "assemble_uplink",
    "bundled_config",
    "impair_burst",
    "load_config",
]
__version__ = "0.1.0"
