"""Triangle surface meshes: connectivity, topology queries, OBJ I/O.

Vertex indices are 0-based internally and 1-based in OBJ files. A mesh is
either *embedded* (edge lengths measured from the 3D vertex positions) or
*intrinsic* (a per-face edge-length table overrides the embedding). All
angle and cotangent computations go through the active metric, so they
depend only on triangle shapes, never on the ambient embedding.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import MeshError, TopologyError

__all__ = [
    "SurfaceMesh",
    "BoundaryLoop",
    "load_obj",
    "load_length_table",
    "write_obj",
    "write_obj_with_uv",
    "topology",
]


@dataclass
class BoundaryLoop:
    """Closed boundary walk, ordered with the surface on its left.

    With counterclockwise faces this makes the walk counterclockwise with
    respect to the surface orientation.
    """

    vertices: np.ndarray
    length: float
    ccw: bool = True

    def __len__(self):
        return len(self.vertices)

    def vertex_set(self):
        return frozenset(int(v) for v in self.vertices)


class SurfaceMesh:
    """Oriented edge-manifold triangle mesh.

    Parameters
    ----------
    vertices : (n, 3) float array
        Vertex positions in model units.
    faces : (m, 3) int array
        Ordered vertex-index triples, consistently oriented.
    face_lengths : (m, 3) float array, optional
        Intrinsic metric: ``face_lengths[f, k]`` is the length of the edge
        opposite corner ``k`` of face ``f``. When given it replaces the
        embedded lengths in every angle/weight computation.

    Halfedge ``h = 3*f + k`` runs from corner ``k`` to corner ``(k+1) % 3``
    of face ``f``; its twin is the opposite directed edge or -1 on the
    boundary.
    """

    def __init__(self, vertices, faces, face_lengths=None, validate=True):
        self.vertices = np.ascontiguousarray(vertices, dtype=np.float64)
        self.faces = np.ascontiguousarray(faces, dtype=np.int64)
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise MeshError("vertices must be an (n, 3) array")
        if self.faces.ndim != 2 or self.faces.shape[1] != 3:
            raise MeshError("faces must be an (m, 3) array")
        if face_lengths is not None:
            face_lengths = np.ascontiguousarray(face_lengths, dtype=np.float64)
            if face_lengths.shape != self.faces.shape:
                raise MeshError("face_lengths must match the face array shape")
        self.face_lengths = face_lengths
        # offsets into the original face list when holes were filled (see cut.fill_holes)
        self.fill_faces = None
        self.fill_vertices = None

        self._build_connectivity(validate)
        if validate:
            self._validate_metric()
        self._boundary_loops = None
        self._adjacency = None
        self._connected = None

    # ------------------------------------------------------------------
    # construction and validation

    def _build_connectivity(self, validate):
        n, m = len(self.vertices), len(self.faces)
        if m == 0:
            raise MeshError("mesh has no faces")
        if self.faces.min(initial=0) < 0 or self.faces.max(initial=-1) >= n:
            bad = int(np.argmax((self.faces < 0) | (self.faces >= n)))
            raise MeshError(f"face {bad // 3} references an out-of-range vertex index")
        f = self.faces
        if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0])):
            bad = int(np.nonzero((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 2] == f[:, 0]))[0][0])
            raise MeshError(f"face {bad} repeats a vertex")

        src = f[:, [0, 1, 2]].ravel()
        dst = f[:, [1, 2, 0]].ravel()
        key = src * n + dst
        order = np.argsort(key, kind="stable")
        skey = key[order]
        if validate:
            canon_all = np.minimum(src, dst) * n + np.maximum(src, dst)
            uniq, counts = np.unique(canon_all, return_counts=True)
            if np.any(counts > 2):
                i, j = divmod(int(uniq[np.argmax(counts > 2)]), n)
                raise MeshError(f"non-manifold edge ({i}, {j}): more than two incident faces")
            if len(skey) > 1 and np.any(skey[1:] == skey[:-1]):
                dup = int(np.nonzero(skey[1:] == skey[:-1])[0][0])
                i, j = divmod(int(skey[dup]), n)
                raise MeshError(f"non-orientable gluing along edge ({i}, {j})")

        rev_key = dst * n + src
        pos = np.searchsorted(skey, rev_key)
        pos_c = np.minimum(pos, len(skey) - 1)
        has = skey[pos_c] == rev_key
        twin = np.where(has, order[pos_c], -1)
        self.he_twin = twin.astype(np.int64)
        self.he_src = src
        self.he_dst = dst

        canon = np.minimum(src, dst) * n + np.maximum(src, dst)
        self._n_edges = len(np.unique(canon))

    def _validate_metric(self):
        L = self.face_corner_lengths()
        if np.any(~np.isfinite(L)) or np.any(L <= 0):
            bad = int(np.nonzero(~np.isfinite(L).all(axis=1) | (L <= 0).any(axis=1))[0][0])
            raise MeshError(f"face {bad} has a non-positive edge length under the active metric")
        a, b, c = L[:, 0], L[:, 1], L[:, 2]
        ok = (a < b + c) & (b < a + c) & (c < a + b)
        if not ok.all():
            bad = int(np.nonzero(~ok)[0][0])
            raise MeshError(f"face {bad} violates the strict triangle inequality under the active metric")
        if np.any(self.face_areas() <= 0):
            bad = int(np.nonzero(self.face_areas() <= 0)[0][0])
            raise MeshError(f"face {bad} has zero area under the active metric")

    # ------------------------------------------------------------------
    # basic quantities

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    @property
    def n_edges(self):
        return self._n_edges

    @property
    def is_intrinsic(self):
        return self.face_lengths is not None

    def face_corner_lengths(self):
        """(m, 3) lengths of the edge opposite each corner, active metric."""
        if self.face_lengths is not None:
            return self.face_lengths
        p = self.vertices[self.faces]
        out = np.empty((len(self.faces), 3))
        for k in range(3):
            d = p[:, (k + 1) % 3] - p[:, (k + 2) % 3]
            out[:, k] = np.sqrt(np.einsum("ij,ij->i", d, d))
        return out

    def corner_angles(self):
        """(m, 3) interior angles in radians via the law of cosines.

        Works identically in embedded and intrinsic mode; each row sums
        to pi up to rounding.
        """
        L = self.face_corner_lengths()
        ang = np.empty_like(L)
        for k in range(3):
            a, b, c = L[:, k], L[:, (k + 1) % 3], L[:, (k + 2) % 3]
            cos = (b * b + c * c - a * a) / (2 * b * c)
            if np.any(np.abs(cos) >= 1.0):
                bad = int(np.nonzero(np.abs(cos) >= 1.0)[0][0])
                raise MeshError(f"face {bad} is degenerate under the active metric")
            ang[:, k] = np.arccos(cos)
        return ang

    def face_areas(self):
        """(m,) areas from the active metric (Heron, numerically stable)."""
        L = np.sort(self.face_corner_lengths(), axis=1)
        c, b, a = L[:, 0], L[:, 1], L[:, 2]  # a >= b >= c
        t = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c))
        return 0.25 * np.sqrt(np.maximum(t, 0.0))

    def halfedge_length(self, h):
        f, k = divmod(int(h), 3)
        return self.face_corner_lengths()[f, (k + 2) % 3]

    def edge_lengths_by_halfedge(self):
        """(3m,) active-metric length of each halfedge's edge."""
        L = self.face_corner_lengths()
        return L[:, [2, 0, 1]].ravel()

    # ------------------------------------------------------------------
    # adjacency and traversal

    def vertex_adjacency(self):
        """CSR-style neighbor lists: (indptr, neighbor ids, edge lengths).

        Neighbor lists are sorted ascending, which keeps graph traversals
        deterministic.
        """
        if self._adjacency is None:
            src = self.he_src
            dst = self.he_dst
            w = self.edge_lengths_by_halfedge()
            # boundary edges appear in one direction only; add the reverse
            # so the graph is symmetric
            bnd = self.he_twin == -1
            if bnd.any():
                src = np.concatenate([src, dst[bnd]])
                dst = np.concatenate([dst, self.he_src[bnd]])
                w = np.concatenate([w, w[bnd]])
            order = np.lexsort((dst, src))
            counts = np.bincount(src, minlength=self.n_vertices)
            indptr = np.concatenate([[0], np.cumsum(counts)])
            self._adjacency = (indptr, dst[order], w[order])
        return self._adjacency

    def neighbors(self, v):
        indptr, idx, _ = self.vertex_adjacency()
        return idx[indptr[v]:indptr[v + 1]]

    def is_connected(self):
        if self._connected is None:
            from scipy.sparse import csgraph, csr_matrix

            indptr, idx, _ = self.vertex_adjacency()
            n = self.n_vertices
            graph = csr_matrix((np.ones(len(idx), dtype=np.int8), idx, indptr), shape=(n, n))
            ncomp = csgraph.connected_components(graph, directed=False, return_labels=False)
            self._connected = bool(ncomp == 1)
        return self._connected

    def next_in_face(self, h):
        return (h - h % 3) + (h % 3 + 1) % 3

    def boundary_loops(self):
        """All boundary loops, ordered by increasing total length.

        The longest loop comes last: downstream code treats it as the
        outer boundary. Loop walks keep the surface on the left.
        """
        if self._boundary_loops is not None:
            return self._boundary_loops
        twin = self.he_twin
        he_len = self.edge_lengths_by_halfedge()
        boundary = np.nonzero(twin == -1)[0]
        visited = set()
        loops = []
        for h0 in boundary:
            h0 = int(h0)
            if h0 in visited:
                continue
            walk = []
            total = 0.0
            h = h0
            while True:
                visited.add(h)
                walk.append(self.he_src[h])
                total += he_len[h]
                # rotate around the head vertex until the next boundary halfedge
                g = self.next_in_face(h)
                while twin[g] != -1:
                    g = self.next_in_face(twin[g])
                h = g
                if h == h0:
                    break
            loops.append(BoundaryLoop(np.asarray(walk, dtype=np.int64), float(total)))
        loops.sort(key=lambda lp: lp.length)
        self._boundary_loops = loops
        return loops

    def boundary_halfedges_from(self, h0):
        """Boundary halfedge ids of the loop containing boundary halfedge h0."""
        twin = self.he_twin
        out = []
        h = int(h0)
        while True:
            out.append(h)
            g = self.next_in_face(h)
            while twin[g] != -1:
                g = self.next_in_face(twin[g])
            h = g
            if h == h0:
                break
        return out

    def euler_characteristic(self):
        return self.n_vertices - self.n_edges + self.n_faces

    def with_lengths(self, face_lengths):
        """Copy of this mesh with an intrinsic per-face length table."""
        return SurfaceMesh(self.vertices, self.faces, face_lengths=face_lengths)


def topology(mesh):
    """(euler characteristic, genus, boundary count) of a connected mesh."""
    if not mesh.is_connected():
        raise TopologyError("mesh is disconnected; the pipeline handles one component")
    chi = mesh.euler_characteristic()
    b = len(mesh.boundary_loops())
    g2 = 2 - chi - b
    if g2 < 0 or g2 % 2 != 0:
        raise TopologyError(f"inconsistent topology: chi={chi}, boundaries={b}")
    return chi, g2 // 2, b


# ----------------------------------------------------------------------
# OBJ I/O


def _as_text(data):
    if isinstance(data, bytes):
        return data.decode("utf-8")
    return data


def load_obj(data):
    """Parse OBJ text (bytes or str) into a SurfaceMesh.

    Only ``v`` and ``f`` records are used; polygon faces are
    fan-triangulated. Indices are 1-based in the file, 0-based in the mesh.
    """
    verts = []
    faces = []
    for lineno, raw in enumerate(_as_text(data).splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "v":
            if len(parts) < 4:
                raise MeshError(f"line {lineno}: vertex record needs 3 coordinates")
            verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
        elif parts[0] == "f":
            idx = []
            for term in parts[1:]:
                s = term.split("/")[0]
                v = int(s)
                if v <= 0:
                    raise MeshError(f"line {lineno}: only positive OBJ indices are supported")
                idx.append(v - 1)
            if len(idx) < 3:
                raise MeshError(f"line {lineno}: face needs at least 3 vertices")
            for k in range(1, len(idx) - 1):
                faces.append([idx[0], idx[k], idx[k + 1]])
    if not verts:
        raise MeshError("OBJ stream contains no vertices")
    return SurfaceMesh(np.asarray(verts, dtype=np.float64), np.asarray(faces, dtype=np.int64))


def load_length_table(data, mesh):
    """Intrinsic metric from a JSON map ``"i,j" -> length`` (i < j, 0-based).

    Returns a per-face length table usable as SurfaceMesh.face_lengths.
    """
    table = json.loads(_as_text(data))
    lengths = {}
    for key, val in table.items():
        i_s, j_s = key.split(",")
        i, j = int(i_s), int(j_s)
        if i >= j:
            raise MeshError(f"length table key '{key}' must have i < j")
        if float(val) <= 0:
            raise MeshError(f"length table entry '{key}' must be positive")
        lengths[(i, j)] = float(val)

    out = np.empty((mesh.n_faces, 3))
    for fi, (a, b, c) in enumerate(mesh.faces):
        tri = (int(a), int(b), int(c))
        for k in range(3):
            u, v = tri[(k + 1) % 3], tri[(k + 2) % 3]
            key = (min(u, v), max(u, v))
            if key not in lengths:
                raise MeshError(f"length table misses edge {key}")
            out[fi, k] = lengths[key]
    return out


def _fmt(x):
    return f"{x:.17g}"


def write_obj(mesh):
    """OBJ bytes with plain ``v``/``f`` records, 17 significant digits."""
    out = []
    for v in mesh.vertices:
        out.append(f"v {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}")
    for f in mesh.faces:
        out.append(f"f {f[0] + 1} {f[1] + 1} {f[2] + 1}")
    return ("\n".join(out) + "\n").encode("utf-8")


def write_obj_with_uv(mesh, layout_coords, cut=None):
    """OBJ bytes with per-cut-vertex ``vt`` records.

    ``layout_coords`` holds one 2D point per cut-mesh vertex (or per mesh
    vertex when ``cut`` is None). Seam faces reference duplicated ``vt``
    indices, so the texture continues across seams under the lattice
    translations.
    """
    coords = np.asarray(layout_coords, dtype=np.float64)
    if cut is None:
        if len(coords) != mesh.n_vertices:
            raise MeshError("layout does not cover every vertex")
        origin = np.arange(mesh.n_vertices)
        uv_faces = mesh.faces
    else:
        if len(coords) != cut.mesh.n_vertices:
            raise MeshError("layout does not cover every cut-mesh vertex")
        origin = cut.origin
        uv_faces = cut.mesh.faces

    out = []
    for v in mesh.vertices:
        out.append(f"v {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}")
    for uv in coords:
        out.append(f"vt {_fmt(uv[0])} {_fmt(uv[1])}")
    for fc in uv_faces:
        a, b, c = (int(x) for x in fc)
        out.append(
            f"f {origin[a] + 1}/{a + 1} {origin[b] + 1}/{b + 1} {origin[c] + 1}/{c + 1}"
        )
    return ("\n".join(out) + "\n").encode("utf-8")
