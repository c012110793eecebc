"""Synthetic test surfaces: structured tori, cylinders, frusta, holed disks.

These generators exist so the library can be exercised end to end without
external mesh data. Flat tori carry an intrinsic length table because no
isometric embedding of a flat torus exists in R^3.
"""

from __future__ import annotations

import numpy as np

from .mesh import SurfaceMesh

__all__ = [
    "grid_torus_faces",
    "flat_torus",
    "torus_of_revolution",
    "cylinder",
    "cone_frustum",
    "holed_disk",
    "perturbed",
    "grid_loops",
]


def grid_torus_faces(nu, nv):
    """Faces of an nu x nv periodic grid, each cell split along one diagonal.

    Vertex (i, j) has index ``i * nv + j`` with i modulo nu and j modulo nv.
    """
    faces = []
    for i in range(nu):
        for j in range(nv):
            v00 = i * nv + j
            v10 = ((i + 1) % nu) * nv + j
            v01 = i * nv + (j + 1) % nv
            v11 = ((i + 1) % nu) * nv + (j + 1) % nv
            faces.append([v00, v10, v11])
            faces.append([v00, v11, v01])
    return np.asarray(faces, dtype=np.int64)


def flat_torus(nu, nv, t_vec=(1.0, 0.0), h_vec=(0.0, 1.0)):
    """Flat torus R^2 / lattice(t_vec, h_vec) as an intrinsic grid mesh.

    Grid direction i follows ``t_vec`` and direction j follows ``h_vec``.
    The embedded coordinates are planar and wrap incorrectly at the seam,
    so the metric is supplied as an intrinsic per-face length table derived
    from the true lattice displacements.
    """
    t_vec = np.asarray(t_vec, dtype=np.float64)
    h_vec = np.asarray(h_vec, dtype=np.float64)
    faces = grid_torus_faces(nu, nv)

    ii, jj = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
    pts = (ii.reshape(-1, 1) / nu) * t_vec + (jj.reshape(-1, 1) / nv) * h_vec
    vertices = np.column_stack([pts, np.zeros(len(pts))])

    du = t_vec / nu
    dv = h_vec / nv
    # displacement of each face corner pair is a fixed lattice step
    lengths = np.empty((len(faces), 3))
    d_diag = du + dv
    per_cell = [
        # triangle (v00, v10, v11): edges opposite corners 0,1,2
        (np.linalg.norm(dv), np.linalg.norm(d_diag), np.linalg.norm(du)),
        # triangle (v00, v11, v01): edges opposite corners 0,1,2
        (np.linalg.norm(du), np.linalg.norm(dv), np.linalg.norm(d_diag)),
    ]
    lengths[0::2] = per_cell[0]
    lengths[1::2] = per_cell[1]
    return SurfaceMesh(vertices, faces, face_lengths=lengths)


def torus_of_revolution(R, r, nu, nv):
    """Embedded torus: major radius R, minor radius r, nu x nv grid.

    Grid direction i follows the major (toroidal) angle, direction j the
    minor (poloidal) angle.
    """
    faces = grid_torus_faces(nu, nv)
    ii, jj = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
    phi = 2 * np.pi * ii.ravel() / nu
    psi = 2 * np.pi * jj.ravel() / nv
    rad = R + r * np.cos(psi)
    vertices = np.column_stack([rad * np.cos(phi), rad * np.sin(phi), r * np.sin(psi)])
    return SurfaceMesh(vertices, faces)


def _open_grid_faces(nu, nv):
    """Faces of a grid closed in direction i, open in direction j."""
    faces = []
    for i in range(nu):
        for j in range(nv):
            v00 = i * (nv + 1) + j
            v10 = ((i + 1) % nu) * (nv + 1) + j
            v01 = i * (nv + 1) + j + 1
            v11 = ((i + 1) % nu) * (nv + 1) + j + 1
            faces.append([v00, v10, v11])
            faces.append([v00, v11, v01])
    return np.asarray(faces, dtype=np.int64)


def cylinder(radius, height, nu, nv, metric="chord"):
    """Open cylinder with nu segments around and nv rows of cells.

    ``metric="chord"`` keeps the embedded prism metric (circumference
    nu * 2 * radius * sin(pi/nu)). ``metric="arc"`` attaches the exact flat
    metric of the smooth cylinder, whose development is the rectangle
    [0, 2 pi radius] x [0, height].
    """
    faces = _open_grid_faces(nu, nv)
    ii, jj = np.meshgrid(np.arange(nu), np.arange(nv + 1), indexing="ij")
    phi = 2 * np.pi * ii.ravel() / nu
    z = height * jj.ravel() / nv
    vertices = np.column_stack([radius * np.cos(phi), radius * np.sin(phi), z])
    if metric == "chord":
        return SurfaceMesh(vertices, faces)
    du = 2 * np.pi * radius / nu
    dv = height / nv
    diag = float(np.hypot(du, dv))
    lengths = np.empty((len(faces), 3))
    # cells follow the same split as grid_torus_faces
    lengths[0::2] = (dv, diag, du)
    lengths[1::2] = (du, dv, diag)
    return SurfaceMesh(vertices, faces, face_lengths=lengths)


def cone_frustum(r_bottom, r_top, height, nu, nv):
    """Open cone frustum between radii r_bottom and r_top."""
    faces = _open_grid_faces(nu, nv)
    ii, jj = np.meshgrid(np.arange(nu), np.arange(nv + 1), indexing="ij")
    s = jj.ravel() / nv
    phi = 2 * np.pi * ii.ravel() / nu
    rad = r_bottom + (r_top - r_bottom) * s
    vertices = np.column_stack([rad * np.cos(phi), rad * np.sin(phi), height * s])
    return SurfaceMesh(vertices, faces)


def holed_disk(n, holes=()):
    """Planar n x n grid square with axis-aligned rectangular holes.

    ``holes`` is a sequence of (i0, i1, j0, j1) cell ranges to remove.
    Unreferenced vertices are dropped so the result stays connected.
    """
    faces = []
    for i in range(n):
        for j in range(n):
            if any(i0 <= i < i1 and j0 <= j < j1 for (i0, i1, j0, j1) in holes):
                continue
            v00 = i * (n + 1) + j
            v10 = (i + 1) * (n + 1) + j
            v01 = i * (n + 1) + j + 1
            v11 = (i + 1) * (n + 1) + j + 1
            faces.append([v00, v10, v11])
            faces.append([v00, v11, v01])
    faces = np.asarray(faces, dtype=np.int64)
    ii, jj = np.meshgrid(np.arange(n + 1), np.arange(n + 1), indexing="ij")
    vertices = np.column_stack([ii.ravel() / n, jj.ravel() / n, np.zeros((n + 1) ** 2)])
    used = np.unique(faces)
    remap = -np.ones(len(vertices), dtype=np.int64)
    remap[used] = np.arange(len(used))
    return SurfaceMesh(vertices[used], remap[faces])


def perturbed(mesh, magnitude, seed=0):
    """Copy of an embedded mesh with vertices jittered uniformly.

    ``magnitude`` is the displacement bound per coordinate as a fraction of
    the mean edge length.
    """
    rng = np.random.default_rng(seed)
    scale = float(np.mean(mesh.face_corner_lengths())) * magnitude
    offset = rng.uniform(-scale, scale, size=mesh.vertices.shape)
    return SurfaceMesh(mesh.vertices + offset, mesh.faces)


def perturb_fraction(mesh, fraction=0.1, strength=0.8, seed=4):
    """Displace a random fraction of the vertices, leaving the rest alone.

    Each picked vertex moves by up to ``strength`` mean edge lengths per
    coordinate. This mimics low-quality scans: most of the mesh is fine but
    scattered vertices carry large errors, which is what produces folded
    triangles in flattenings of non-Delaunay meshes.
    """
    rng = np.random.default_rng(seed)
    n = mesh.n_vertices
    pick = rng.choice(n, size=int(round(fraction * n)), replace=False)
    scale = float(np.mean(mesh.face_corner_lengths())) * strength
    verts = mesh.vertices.copy()
    verts[pick] += rng.uniform(-scale, scale, (len(pick), 3))
    return SurfaceMesh(verts, mesh.faces)


def grid_loops(nu, nv, i0=0, j0=0):
    """Lattice-aligned loops of a grid torus through base vertex (i0, j0).

    Returns (loop_i, loop_j): the loop running in grid direction i and the
    loop running in direction j, both starting at the shared base vertex.
    """
    loop_i = [((i0 + s) % nu) * nv + j0 for s in range(nu)]
    loop_j = [i0 * nv + ((j0 + s) % nv) for s in range(nv)]
    return np.asarray(loop_i, dtype=np.int64), np.asarray(loop_j, dtype=np.int64)
