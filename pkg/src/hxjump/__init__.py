"""Auxiliary-space preconditioning of edge-element Maxwell problems with jump coefficients."""
from .assembly import MaxwellSystem, assemble_system
from .hx import HxPreconditioner, build_hx, build_for_system, measure
from .linalg import NotSPDError, SpectrumReport, pcg
from .mesh import GeometryConfig, Mesh, Region, assign_subdomains, build_structured_cube, coarse_topology
from .topology import CoefficientField, TopologyReport, analyze

__version__ = "0.1.0"

__all__ = [
    "CoefficientField", "GeometryConfig", "HxPreconditioner", "MaxwellSystem", "Mesh",
    "NotSPDError", "Region", "SpectrumReport", "TopologyReport", "analyze", "assemble_system",
    "assign_subdomains", "build_for_system", "build_hx", "build_structured_cube",
    "coarse_topology", "measure", "pcg",
]
