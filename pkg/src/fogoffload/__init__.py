"""Simulation and estimation of container-based Cloud-to-Fog offload times."""

__version__ = "0.1.0"
