"""Simulation and control of a tri-tiltrotor aerial manipulator with an origami delta arm."""

from aerialdelta.errors import AerialDeltaError

__version__ = "0.1.0"

__all__ = ["AerialDeltaError", "__version__"]
