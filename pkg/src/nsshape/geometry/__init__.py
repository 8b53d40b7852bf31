from .airfoil import AirfoilGeometry
from .mesh import (BoundaryTag, CurvilinearMesh, InvalidMeshError, SurfaceFrame, edge_integral,
                   mesh_area, surface_frame)
from .generate import generate_disk, generate_naca0012, generate_rectangle, smoothstep

__all__ = [
    "AirfoilGeometry", "BoundaryTag", "CurvilinearMesh", "InvalidMeshError", "SurfaceFrame",
    "edge_integral", "mesh_area", "surface_frame", "generate_disk", "generate_naca0012",
    "generate_rectangle", "smoothstep",
]
