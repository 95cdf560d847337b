"""Wiener measure, heat kernel and Feynman-Kac tools for the Heisenberg group H^n."""

__version__ = "0.1.0"

from .hgroup import (DimensionError, GroupPoint, dilate, distance, homogeneous_norm, inverse,
                     left_increment, multiply)
from .heatkernel import KernelConfig, kernel_eval, marginal_char_u, normalization, semigroup_residual
from .sampler import PathGrid, RngStreamSpec, sample_path, sample_paths
from .measure import CylinderSet, HolderSpec, cylinder_measure_mc, cylinder_measure_quadrature
from .feynmankac import InitialData, Potential, fk_solve, heat_reference

__all__ = [
    "DimensionError", "GroupPoint", "dilate", "distance", "homogeneous_norm", "inverse",
    "left_increment", "multiply", "KernelConfig", "kernel_eval", "marginal_char_u",
    "normalization", "semigroup_residual", "PathGrid", "RngStreamSpec", "sample_path",
    "sample_paths", "CylinderSet", "HolderSpec", "cylinder_measure_mc",
    "cylinder_measure_quadrature", "InitialData", "Potential", "fk_solve", "heat_reference",
]
