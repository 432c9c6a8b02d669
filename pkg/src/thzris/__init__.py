"""Hybrid beamforming for multi-hop RIS-assisted THz downlinks with DDPG."""

from .channel import ChannelSet, ThzLinkParams, Topology, realize_channels
from .ddpg import Hyper, run_training
from .errors import InfeasibleError, RejectedInputError, ScenarioError, SingularityError, UsageError
from .system import BeamformingSolution, SystemConfig, sum_rate

__version__ = "0.1.0"

__all__ = [
    "BeamformingSolution", "ChannelSet", "Hyper", "InfeasibleError", "RejectedInputError",
    "ScenarioError", "SingularityError", "SystemConfig", "ThzLinkParams", "Topology", "UsageError",
    "realize_channels", "run_training", "sum_rate",
]
