"""Intrinsic Delaunay preprocessing by iterative edge flipping.

An interior edge is Delaunay when the two angles opposite it sum to at most
pi. Flipping a non-Delaunay edge replaces it by the cross diagonal of the
hinge, whose intrinsic length comes from unfolding both triangles into a
common plane. Flips change connectivity but not the metric, so cone angles
and total area are preserved and the process terminates with every interior
edge Delaunay. Flattening a Delaunay mesh keeps all cotangent weights
nonnegative, which makes the periodic flattening a convex combination map
and rules out folded triangles.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import MeshError, NumericalError
from .mesh import SurfaceMesh

__all__ = ["IntrinsicMesh", "is_delaunay_edge", "make_intrinsic_delaunay"]

DELAUNAY_TOL = 1e-12


def _apex_cos(a, b, c):
    """Cosine of the angle opposite side a in a triangle with sides a, b, c."""
    return (b * b + c * c - a * a) / (2.0 * b * c)


def is_delaunay_edge(edge_len, left, right, tol=DELAUNAY_TOL):
    """True when the hinge around an edge satisfies the Delaunay criterion.

    ``left`` and ``right`` are the remaining side-length pairs of the two
    incident triangles; the criterion is that the two angles opposite the
    shared edge sum to at most pi (within ``tol``).
    """
    for b, c in (left, right):
        for x, y, z in ((edge_len, b, c), (b, c, edge_len), (c, edge_len, b)):
            if not x < y + z:
                raise MeshError("degenerate triangle in Delaunay test")
    a1 = np.arccos(np.clip(_apex_cos(edge_len, left[0], left[1]), -1.0, 1.0))
    a2 = np.arccos(np.clip(_apex_cos(edge_len, right[0], right[1]), -1.0, 1.0))
    return bool(a1 + a2 <= np.pi + tol)


@dataclass
class IntrinsicMesh:
    """Connectivity plus per-face intrinsic lengths after edge flips.

    The vertex set matches the input mesh; ``flip_log`` lists the flipped
    edges as (vertex, vertex) pairs in flip order.
    """

    vertices: np.ndarray
    faces: np.ndarray
    face_lengths: np.ndarray
    flip_log: list = field(default_factory=list)

    @property
    def n_flips(self):
        return len(self.flip_log)

    def to_surface_mesh(self):
        """SurfaceMesh in intrinsic mode over the original vertex positions."""
        return SurfaceMesh(self.vertices, self.faces, face_lengths=self.face_lengths)

    def flip_log_json(self):
        import json

        return json.dumps({"flips": [[int(a), int(b)] for a, b in self.flip_log]})


class _FlipState:
    """Mutable halfedge arrays for intrinsic flips.

    Twins are tracked per halfedge index, not per vertex pair, so the
    structure survives configurations that vertex-pair keys cannot (the
    flip guard below still refuses to create parallel edges, which the
    downstream SurfaceMesh data model does not represent).
    """

    def __init__(self, mesh):
        self.faces = mesh.faces.copy()
        self.twin = mesh.he_twin.copy()
        self.lengths = mesh.face_corner_lengths().copy()
        n = mesh.n_vertices
        self.edge_keys = set()
        for h in range(3 * len(self.faces)):
            a, b = self._ends(h)
            self.edge_keys.add((min(a, b), max(a, b)))

    def _ends(self, h):
        f, k = divmod(h, 3)
        return int(self.faces[f, k]), int(self.faces[f, (k + 1) % 3])

    def edge_length(self, h):
        f, k = divmod(h, 3)
        return float(self.lengths[f, (k + 2) % 3])

    def hinge(self, h):
        """Side lengths (shared, left pair, right pair) and apex ids."""
        t = int(self.twin[h])
        f, k = divmod(h, 3)
        g, j = divmod(t, 3)
        a = self.edge_length(h)
        # in face f the shared edge joins corners k, k+1 with apex k+2
        bf = float(self.lengths[f, (k + 1) % 3])  # side (apex_f, i)
        cf = float(self.lengths[f, k])            # side (j, apex_f)
        bg = float(self.lengths[g, (j + 1) % 3])
        cg = float(self.lengths[g, j])
        apex_f = int(self.faces[f, (k + 2) % 3])
        apex_g = int(self.faces[g, (j + 2) % 3])
        return a, (bf, cf), (bg, cg), apex_f, apex_g

    def flip(self, h):
        """Flip the edge of halfedge h; returns the four outer halfedges.

        Raises MeshError when the flip would create a degenerate face,
        a self edge, or a parallel edge.
        """
        t = int(self.twin[h])
        if t == -1:
            raise MeshError("cannot flip a boundary edge")
        f, k = divmod(h, 3)
        g, j = divmod(t, 3)
        i_v = int(self.faces[f, k])
        j_v = int(self.faces[f, (k + 1) % 3])
        k_v = int(self.faces[f, (k + 2) % 3])
        l_v = int(self.faces[g, (j + 2) % 3])
        if k_v == l_v:
            raise MeshError("flip would create a self edge")
        if (min(k_v, l_v), max(k_v, l_v)) in self.edge_keys:
            raise MeshError("flip would create a parallel edge")

        a = self.edge_length(h)
        bf = float(self.lengths[f, (k + 1) % 3])  # |i k_v|
        cf = float(self.lengths[f, k])            # |j k_v|
        bg = float(self.lengths[g, (j + 1) % 3])  # |j l_v|  (g = (j, i, l_v))
        cg = float(self.lengths[g, j])            # |i l_v|

        # unfold the hinge: i at origin, j on the +x axis, apexes on
        # opposite sides
        xk = (a * a + bf * bf - cf * cf) / (2 * a)
        yk = np.sqrt(max(bf * bf - xk * xk, 0.0))
        xl = (a * a + cg * cg - bg * bg) / (2 * a)
        yl = -np.sqrt(max(cg * cg - xl * xl, 0.0))
        new_len = float(np.hypot(xk - xl, yk - yl))

        for (p, q, r) in ((new_len, cg, bf), (new_len, bg, cf)):
            if not (p < q + r and q < p + r and r < p + q):
                raise MeshError("flip would create a degenerate face")

        # outer halfedges of the hinge and their twins
        h_ki = 3 * f + (k + 2) % 3   # (k_v -> i)
        h_jk = 3 * f + (k + 1) % 3   # (j -> k_v)
        h_il = 3 * g + (j + 1) % 3   # (i -> l_v)
        h_lj = 3 * g + (j + 2) % 3   # (l_v -> j)
        t_ki, t_jk, t_il, t_lj = (int(self.twin[x]) for x in (h_ki, h_jk, h_il, h_lj))

        # face f becomes (i, l_v, k_v), face g becomes (l_v, j, k_v)
        self.faces[f] = (i_v, l_v, k_v)
        self.lengths[f] = (new_len, bf, cg)
        self.faces[g] = (l_v, j_v, k_v)
        self.lengths[g] = (cf, new_len, bg)

        # halfedge slots: f: (i->l)=3f, (l->k)=3f+1, (k->i)=3f+2
        #                 g: (l->j)=3g, (j->k)=3g+1, (k->l)=3g+2
        assign = [
            (3 * f + 0, t_il), (3 * f + 1, 3 * g + 2), (3 * f + 2, t_ki),
            (3 * g + 0, t_lj), (3 * g + 1, t_jk), (3 * g + 2, 3 * f + 1),
        ]
        for he, tw in assign:
            self.twin[he] = tw
            if tw != -1:
                self.twin[tw] = he

        self.edge_keys.discard((min(i_v, j_v), max(i_v, j_v)))
        self.edge_keys.add((min(k_v, l_v), max(k_v, l_v)))
        return (i_v, j_v), [3 * f + 0, 3 * f + 2, 3 * g + 0, 3 * g + 1]

    def is_delaunay(self, h, tol=DELAUNAY_TOL):
        if self.twin[h] == -1:
            return True
        a, left, right, _, _ = self.hinge(h)
        c1 = np.clip(_apex_cos(a, left[0], left[1]), -1.0, 1.0)
        c2 = np.clip(_apex_cos(a, right[0], right[1]), -1.0, 1.0)
        return bool(np.arccos(c1) + np.arccos(c2) <= np.pi + tol)


def make_intrinsic_delaunay(mesh, tol=DELAUNAY_TOL):
    """Flip edges until every interior edge is intrinsically Delaunay.

    The queue is seeded with all interior edges in id order and processed
    first-in first-out, so runs are reproducible. Flips that would create
    degenerate faces are skipped and revisited; the run aborts if the queue
    cycles more than 50 * E times without finishing.
    """
    state = _FlipState(mesh)
    m3 = 3 * len(state.faces)
    queue = deque()
    queued = np.zeros(m3, dtype=bool)
    for h in range(m3):
        t = int(state.twin[h])
        if t > h:  # one canonical halfedge per interior edge
            queue.append(h)
            queued[h] = True

    flip_log = []
    budget = 50 * mesh.n_edges
    steps = 0
    stall = 0
    while queue:
        steps += 1
        if steps > budget or stall > len(queue) + 1:
            raise NumericalError(
                "edge flipping cycled without progress; the intrinsic Delaunay "
                "triangulation of this mesh needs edges this data model cannot "
                "represent (parallel or self edges)"
            )
        h = queue.popleft()
        queued[h] = False
        if state.twin[h] == -1 or state.is_delaunay(h, tol):
            stall = 0
            continue
        try:
            edge, outer = state.flip(h)
        except MeshError:
            queue.append(h)  # revisit once the neighborhood has changed
            queued[h] = True
            stall += 1
            continue
        stall = 0
        flip_log.append(edge)
        for oh in outer:
            t = int(state.twin[oh])
            if t == -1:
                continue
            canon = min(oh, t)
            if not queued[canon]:
                queue.append(canon)
                queued[canon] = True

    return IntrinsicMesh(mesh.vertices, state.faces, state.lengths, flip_log)
