"""railbeam: simulator and optimizer for base stations whose antenna arrays
move along a circular rail while each antenna switches among discrete
radiation patterns."""

from .channel import ChannelSample, PhysicalConfig, SelectionState, UserGeom
from .config import ExperimentConfig, load_config
from .geometry import StationGeometry
from .optimizer import OptimizerConfig, SolverState, Workspace, solve
from .radiation import PatternCodebook, build_codebook

__version__ = "0.1.0"

__all__ = [
    "ChannelSample",
    "ExperimentConfig",
    "OptimizerConfig",
    "PatternCodebook",
    "PhysicalConfig",
    "SelectionState",
    "SolverState",
    "StationGeometry",
    "UserGeom",
    "Workspace",
    "build_codebook",
    "load_config",
    "solve",
    "__version__",
]
