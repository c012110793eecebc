"""Periodic conformal flattening of triangle meshes.

Genus-one surfaces map to a doubly periodic fundamental domain; doubly and
multiply connected genus-zero surfaces map to annuli and poly-annuli. The
maps minimize discrete conformal energy through two sparse symmetric linear
solves over a periodically folded cotangent Laplacian.
"""

from .errors import (
    MeshError,
    NumericalError,
    PathError,
    SingularSystemError,
    TopologyError,
)
from .mesh import (
    BoundaryLoop,
    SurfaceMesh,
    load_length_table,
    load_obj,
    topology,
    write_obj,
    write_obj_with_uv,
)

__version__ = "0.1.0"
