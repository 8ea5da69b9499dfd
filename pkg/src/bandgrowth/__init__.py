"""Exact bandwidth-growth calculus for row- and column-finite infinite matrices."""

from .field import FieldConfig, FieldScalar
from .curves import GrowthCurve, power, table
from .core import (
    LazyMatrix,
    WindowMatrix,
    BandProfile,
    make_window,
    band_profile,
    add,
    scale,
    mul,
    transpose,
    verify_growth,
)

__version__ = "0.1.0"
