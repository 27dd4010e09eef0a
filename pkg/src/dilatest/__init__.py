"""Weighted smoothness-space numerics: dyadic-cube quadrature, Muckenhoupt
diagnostics, Fourier- and difference-side norms, and dilation-bound checks."""

from .dyadic import Box, DyadicCube, GridFunction
from .norms import SpaceParams
from .weights import WeightSequence

__all__ = ["Box", "DyadicCube", "GridFunction", "SpaceParams", "WeightSequence"]
__version__ = "0.1.0"
