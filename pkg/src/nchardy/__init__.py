"""Numerical toolkit for matrix-valued Hardy spaces and BMO on the line."""

from ._backend import BACKEND
from .gridfn import GridSpec, MatrixField, RatInterval
from .reports import NormReport

__version__ = "0.1.0"
__all__ = ["BACKEND", "GridSpec", "MatrixField", "RatInterval", "NormReport", "__version__"]
