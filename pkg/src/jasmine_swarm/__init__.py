"""Simulation of small-robot swarm protocols: light-seeded aggregation,
communication streets and capability feedback, over a compact 31-bit
radio frame."""

from .arena import ArenaConfig, LightSource, Pose, RobotState, Vec2, World, run, step
from .codec import Packet, ParityError, LengthError, decode, encode, frame_from_hex, frame_to_hex
from .graph import ClusterLabel, build_graph, classify, components

__all__ = [
    "ArenaConfig", "LightSource", "Pose", "RobotState", "Vec2", "World", "run", "step",
    "Packet", "ParityError", "LengthError", "decode", "encode", "frame_from_hex", "frame_to_hex",
    "ClusterLabel", "build_graph", "classify", "components",
]
__version__ = "0.1.0"
