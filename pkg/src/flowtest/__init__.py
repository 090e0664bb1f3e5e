"""Synthesis of reactive test environments via network-flow edge cuts."""

__version__ = "0.1.0"
