"""Simulation and verification harness for a fifth-order dispersive equation on a half-strip."""

from .config import RunConfig, load_config, load_preset, validate
from .eigenbasis import EigenBasis, build_basis, mode_table
from .weights import WeightSpec

__version__ = "0.1.0"

__all__ = ["EigenBasis", "RunConfig", "WeightSpec", "build_basis", "load_config", "load_preset",
           "mode_table", "validate", "__version__"]
