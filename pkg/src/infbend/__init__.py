"""Infinitesimal bendings of sampled Euclidean submanifolds."""
from .bending import AssociatedPair, BendingField, associated_pair, bending_residual
from .fundsys import SystemReport, verify
from .geometry import FramedGeometry, ImmersionScene, build_geometry, structure_residuals
from .numgrid import ChartGrid
from .scenes import make_bending, make_pair, make_product, make_scene

__all__ = [
    "AssociatedPair", "BendingField", "ChartGrid", "FramedGeometry", "ImmersionScene", "SystemReport",
    "associated_pair", "bending_residual", "build_geometry", "make_bending", "make_pair", "make_product",
    "make_scene", "structure_residuals", "verify",
]

__version__ = "0.1.0"
