from .hull import ConvexHull, DegenerateInput, HullFace, convex_hull
from .kernels import BACKEND
from .mesh import (EmptyMesh, MassProperties, Mesh, NonPositiveVolume,
                   ParseError, SurfaceRegion, load_mesh, load_mesh_path,
                   mass_properties, mesh_regions)
from .predicates import (point_in_mesh, point_in_triangle_projection,
                         segment_intersects_mesh)
from .sampling import SurfaceSample, sample_surface

__all__ = [
    "BACKEND", "ConvexHull", "DegenerateInput", "EmptyMesh", "HullFace",
    "MassProperties", "Mesh", "NonPositiveVolume", "ParseError",
    "SurfaceRegion", "SurfaceSample", "convex_hull", "load_mesh",
    "load_mesh_path", "mass_properties", "mesh_regions", "point_in_mesh",
    "point_in_triangle_projection", "sample_surface",
    "segment_intersects_mesh",
]
