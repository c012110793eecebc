"""Cut systems and cut surgery.

Cutting a genus-one surface along a handle/tunnel loop pair, or a doubly
connected surface along an outer-to-inner cross path, opens it into a disk.
Vertices along the cut are duplicated once per incident sector and the seam
correspondence (plus side, minus side, lattice symbol) is recorded so the
assembly stage can fold the cut Laplacian back onto the original vertices.

Seam sides are labeled from the cut-mesh boundary walk (surface kept on the
left), which fixes the sign conventions of the folded system: the minus
copy of the handle seam is the plus copy translated by t, the minus copy of
the tunnel seam is the plus copy translated by h, and the four copies of
the base point receive offsets 0, h, t, h + t.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import MeshError, PathError, TopologyError
from .mesh import BoundaryLoop, SurfaceMesh, topology

__all__ = [
    "CutPath",
    "SeamRecord",
    "CutMesh",
    "cut_along",
    "find_cut_system_genus1",
    "find_cross_path",
    "detour_path",
    "vary_cut_system",
    "fill_holes",
    "remove_filled",
    "paths_from_json",
]


@dataclass(frozen=True)
class CutPath:
    """Edge path given as an ordered vertex sequence.

    Closed loops (handle/tunnel) do not repeat the base point; the closing
    edge back to ``vertices[0]`` is implicit. Cross paths are open.
    """

    vertices: np.ndarray
    kind: str  # "handle" | "tunnel" | "cross"

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=np.int64))
        if self.kind not in ("handle", "tunnel", "cross"):
            raise PathError(f"unknown path kind {self.kind!r}")

    @property
    def closed(self):
        return self.kind in ("handle", "tunnel")

    def edges(self):
        v = self.vertices
        pairs = list(zip(v[:-1], v[1:]))
        if self.closed:
            pairs.append((v[-1], v[0]))
        return [(int(min(a, b)), int(max(a, b))) for a, b in pairs]

    def rotated_to(self, base):
        """Closed path rotated so ``base`` comes first."""
        if not self.closed:
            raise PathError("only closed paths can be rotated")
        pos = int(np.nonzero(self.vertices == base)[0][0])
        return CutPath(np.roll(self.vertices, -pos), self.kind)


@dataclass
class SeamRecord:
    """Aligned plus/minus copies of one cut path, as cut-mesh vertex ids.

    ``minus[i]`` and ``plus[i]`` are copies of the same original vertex;
    the minus side equals the plus side translated by the lattice symbol
    (t for the handle seam and the cross seam, h for the tunnel seam).
    """

    kind: str  # "alpha" | "beta" | "cross"
    plus: np.ndarray
    minus: np.ndarray
    symbol: str  # "t" | "h"


@dataclass
class CutMesh:
    """Result of cut surgery.

    ``origin`` maps each cut vertex back to its source vertex, ``lattice_coeffs``
    holds the integer (h, t) offsets of each copy, and ``primary`` gives the
    zero-offset copy of every original vertex.
    """

    mesh: SurfaceMesh
    origin: np.ndarray
    seams: list
    corners: dict
    lattice_coeffs: np.ndarray  # (n_cut, 2) int columns (h, t)
    kind: str  # "genus1" | "cross"
    primary: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.primary is None:
            n = int(self.origin.max()) + 1
            primary = -np.ones(n, dtype=np.int64)
            zero = ~self.lattice_coeffs.any(axis=1)
            primary[self.origin[zero]] = np.nonzero(zero)[0]
            if np.any(primary < 0):
                raise MeshError("some original vertex has no zero-offset copy")
            self.primary = primary

    @property
    def n_vertices(self):
        return self.mesh.n_vertices

    @property
    def n_original(self):
        return len(self.primary)

    @property
    def n_symbols(self):
        return 2 if self.kind == "genus1" else 1


# ----------------------------------------------------------------------
# path validation


def _edge_exists(mesh, a, b):
    return b in mesh.neighbors(a)


def _validate_path(mesh, path):
    v = path.vertices
    if len(v) < (3 if path.closed else 2):
        raise PathError("path is too short")
    if len(np.unique(v)) != len(v):
        raise PathError("path is not vertex-simple")
    pairs = list(zip(v[:-1], v[1:]))
    if path.closed:
        pairs.append((v[-1], v[0]))
    for a, b in pairs:
        if not _edge_exists(mesh, int(a), int(b)):
            raise PathError(f"path step ({a}, {b}) is not a mesh edge")
    edges = path.edges()
    if len(set(edges)) != len(edges):
        raise PathError("path repeats an edge")


# ----------------------------------------------------------------------
# generic surgery: duplicate vertices along a set of cut edges


def _split_along_edges(mesh, cut_edges):
    """Duplicate each cut vertex once per sector of its incident-face fan.

    Returns (new SurfaceMesh, origin array). Sectors are the connected
    components of the corner fan after removing cut edges; mesh boundary
    edges separate sectors naturally.
    """
    n = mesh.n_vertices
    faces = mesh.faces
    twin = mesh.he_twin
    cut_vertices = sorted({v for e in cut_edges for v in e})
    cut_set = set(cut_edges)

    corner_copy = {}  # halfedge id (corner at its src vertex) -> new vertex id
    extra_origin = []
    next_id = n

    # corners of v are the halfedges with source v; only cut vertices matter
    cut_vertex_mask = np.zeros(n, dtype=bool)
    cut_vertex_mask[cut_vertices] = True
    by_src = {v: [] for v in cut_vertices}
    for h in np.nonzero(cut_vertex_mask[mesh.he_src])[0]:
        by_src[int(mesh.he_src[h])].append(int(h))

    def edge_of(h):
        a, b = int(mesh.he_src[h]), int(mesh.he_dst[h])
        return (min(a, b), max(a, b))

    for v in cut_vertices:
        corners = by_src[v]
        parent = {h: h for h in corners}

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        def union(x, y):
            rx, ry = find(x), find(y)
            if rx != ry:
                parent[max(rx, ry)] = min(rx, ry)

        for h in corners:
            # across the outgoing edge of this corner
            if twin[h] != -1 and edge_of(h) not in cut_set:
                union(h, mesh.next_in_face(int(twin[h])))
            # across the incoming edge of this corner
            p = mesh.next_in_face(mesh.next_in_face(h))
            if twin[p] != -1 and edge_of(p) not in cut_set:
                union(h, int(twin[p]))

        groups = {}
        for h in corners:
            groups.setdefault(find(h), []).append(h)
        # deterministic sector order: by smallest halfedge id; first keeps v
        sectors = sorted(groups.values(), key=min)
        for si, sector in enumerate(sectors):
            if si == 0:
                vid = v
            else:
                vid = next_id
                next_id += 1
                extra_origin.append(v)
            for h in sector:
                corner_copy[h] = vid

    new_faces = faces.copy()
    for h, vid in corner_copy.items():
        new_faces[h // 3, h % 3] = vid
    new_vertices = np.vstack([mesh.vertices, mesh.vertices[extra_origin]]) if extra_origin else mesh.vertices.copy()
    origin = np.concatenate([np.arange(n), np.asarray(extra_origin, dtype=np.int64)]) if extra_origin else np.arange(n)
    cut_mesh = SurfaceMesh(new_vertices, new_faces, face_lengths=mesh.face_lengths)
    return cut_mesh, origin


# ----------------------------------------------------------------------
# seam labeling from the boundary walk


def _single_boundary_walk(cut_mesh):
    loops = cut_mesh.boundary_loops()
    if len(loops) != 1:
        raise PathError(f"cut surface has {len(loops)} boundary loops, expected 1")
    return loops[0].vertices


def _arcs_between(walk, corner_positions):
    """Split a cyclic walk at corner positions into consecutive arcs."""
    k = len(corner_positions)
    arcs = []
    for i in range(k):
        a = corner_positions[i]
        b = corner_positions[(i + 1) % k]
        if b > a:
            arc = walk[a:b + 1]
        else:
            arc = np.concatenate([walk[a:], walk[:b + 1]])
        arcs.append(arc)
    return arcs


def _label_genus1(cut_mesh, origin, alpha, beta):
    a0 = int(alpha.vertices[0])
    walk = _single_boundary_walk(cut_mesh)
    corner_pos = [i for i, cv in enumerate(walk) if origin[cv] == a0]
    if len(corner_pos) != 4:
        raise PathError(f"base point splits into {len(corner_pos)} copies, expected 4")
    arcs = _arcs_between(walk, corner_pos)

    alpha_set = set(int(v) for v in alpha.vertices[1:])
    beta_set = set(int(v) for v in beta.vertices[1:])

    def arc_kind(arc):
        probe = int(origin[arc[1]])
        if probe in alpha_set:
            return "alpha"
        if probe in beta_set:
            return "beta"
        raise PathError("cut boundary arc does not project onto a cut path")

    kinds = [arc_kind(a) for a in arcs]
    if kinds not in (["alpha", "beta"] * 2, ["beta", "alpha"] * 2):
        raise PathError("handle and tunnel seams do not alternate around the base point")

    # start corner: outgoing arc projects to beta, incoming arc to alpha
    candidates = [i for i in range(4) if kinds[i] == "beta" and kinds[i - 1] == "alpha"]
    start = min(candidates, key=lambda i: int(walk[corner_pos[i]]))

    def arc(i):
        return arcs[(start + i) % 4]

    beta_plus = arc(0)
    alpha_minus = arc(1)
    beta_minus = arc(2)[::-1]
    alpha_plus = arc(3)[::-1]

    seams = [
        SeamRecord("alpha", alpha_plus, alpha_minus, "t"),
        SeamRecord("beta", beta_plus, beta_minus, "h"),
    ]
    corners = {
        "O": int(beta_plus[0]),
        "O_t": int(beta_plus[-1]),
        "O_ht": int(alpha_minus[-1]),
        "O_h": int(beta_minus[0]),
    }
    for rec in seams:
        if len(rec.plus) != len(rec.minus) or np.any(origin[rec.plus] != origin[rec.minus]):
            raise PathError("seam sides are misaligned")

    coeffs = np.zeros((cut_mesh.n_vertices, 2), dtype=np.int64)
    coeffs[alpha_minus[1:-1], 1] = 1   # + t
    coeffs[beta_minus[1:-1], 0] = 1    # + h
    coeffs[corners["O_h"]] = (1, 0)
    coeffs[corners["O_t"]] = (0, 1)
    coeffs[corners["O_ht"]] = (1, 1)
    return seams, corners, coeffs


def _label_cross(cut_mesh, origin, cross):
    e_out = int(cross.vertices[0])
    e_in = int(cross.vertices[-1])
    walk = _single_boundary_walk(cut_mesh)
    ends = {e_out, e_in}
    corner_pos = [i for i, cv in enumerate(walk) if int(origin[cv]) in ends]
    if len(corner_pos) != 4:
        raise PathError(f"cross endpoints split into {len(corner_pos)} copies, expected 4")
    arcs = _arcs_between(walk, corner_pos)

    seam_arcs = []
    for a in arcs:
        o0, o1 = int(origin[a[0]]), int(origin[a[-1]])
        if {o0, o1} == ends:
            seam_arcs.append(a)
    if len(seam_arcs) != 2:
        raise PathError("cut boundary does not show two seam copies")

    down = [a for a in seam_arcs if int(origin[a[0]]) == e_out]
    up = [a for a in seam_arcs if int(origin[a[0]]) == e_in]
    if len(down) != 1 or len(up) != 1:
        raise PathError("seam copies have inconsistent direction")
    alpha_minus = down[0]
    alpha_plus = up[0][::-1]
    if len(alpha_plus) != len(alpha_minus) or np.any(origin[alpha_plus] != origin[alpha_minus]):
        raise PathError("seam sides are misaligned")

    seams = [SeamRecord("cross", alpha_plus, alpha_minus, "t")]
    corners = {
        "O1": int(alpha_plus[0]),
        "O2": int(alpha_plus[-1]),
        "O1_t": int(alpha_minus[0]),
        "O2_t": int(alpha_minus[-1]),
    }
    coeffs = np.zeros((cut_mesh.n_vertices, 2), dtype=np.int64)
    coeffs[alpha_minus, 1] = 1
    return seams, corners, coeffs


# ----------------------------------------------------------------------
# public surgery


def cut_along(mesh, paths):
    """Cut ``mesh`` along a handle/tunnel pair or a single cross path.

    Genus-one pairs must intersect in exactly one vertex, which becomes the
    four corner copies of the fundamental domain. Cross paths run between
    two boundary loops and get their endpoint copies as corners.
    """
    paths = list(paths)
    if len(paths) == 2 and all(p.closed for p in paths):
        alpha, beta = paths
        _validate_path(mesh, alpha)
        _validate_path(mesh, beta)
        shared = set(map(int, alpha.vertices)) & set(map(int, beta.vertices))
        if len(shared) != 1:
            raise PathError(f"handle and tunnel loops share {len(shared)} vertices, expected 1")
        a0 = shared.pop()
        alpha = alpha.rotated_to(a0)
        beta = beta.rotated_to(a0)
        edges = alpha.edges() + beta.edges()
        if len(set(edges)) != len(edges):
            raise PathError("handle and tunnel loops share an edge")
        cut_mesh, origin = _split_along_edges(mesh, set(edges))
        seams, corners, coeffs = _label_genus1(cut_mesh, origin, alpha, beta)
        out = CutMesh(cut_mesh, origin, seams, corners, coeffs, "genus1")
        chi = cut_mesh.euler_characteristic()
        if chi != 1:
            raise PathError(f"cut surface is not a disk (chi={chi})")
        return out

    if len(paths) == 1 and paths[0].kind == "cross":
        cross = paths[0]
        _validate_path(mesh, cross)
        cut_mesh, origin = _split_along_edges(mesh, set(cross.edges()))
        seams, corners, coeffs = _label_cross(cut_mesh, origin, cross)
        out = CutMesh(cut_mesh, origin, seams, corners, coeffs, "cross")
        chi = cut_mesh.euler_characteristic()
        if chi != 1:
            raise PathError(f"cut surface is not a disk (chi={chi})")
        return out

    raise PathError("expected a closed handle/tunnel pair or a single cross path")


# ----------------------------------------------------------------------
# loop finding: tree-cotree handle loop, annulus shortest-path tunnel loop


def _bfs_tree(mesh, root):
    indptr, idx, _ = mesh.vertex_adjacency()
    n = mesh.n_vertices
    parent = -np.ones(n, dtype=np.int64)
    depth = np.zeros(n, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    seen[root] = True
    queue = [root]
    qi = 0
    while qi < len(queue):
        v = queue[qi]
        qi += 1
        for u in idx[indptr[v]:indptr[v + 1]]:
            u = int(u)
            if not seen[u]:
                seen[u] = True
                parent[u] = v
                depth[u] = depth[v] + 1
                queue.append(u)
    if not seen.all():
        raise TopologyError("mesh is disconnected")
    return parent, depth


def _tree_path(parent, depth, u, v):
    """Vertex path u -> v through their lowest common tree ancestor."""
    pu, pv = [int(u)], [int(v)]
    a, b = int(u), int(v)
    while depth[a] > depth[b]:
        a = int(parent[a])
        pu.append(a)
    while depth[b] > depth[a]:
        b = int(parent[b])
        pv.append(b)
    while a != b:
        a = int(parent[a])
        b = int(parent[b])
        pu.append(a)
        pv.append(b)
    return pu[:-1] + pv[::-1]


def _cotree_leftover_edges(mesh, tree_mask):
    """Edges neither in the vertex spanning tree nor crossed by the dual tree.

    ``tree_mask`` marks halfedges whose edge belongs to the spanning tree.
    """
    m = mesh.n_faces
    twin = mesh.he_twin
    src, dst = mesh.he_src, mesh.he_dst
    crossable = np.zeros(3 * m, dtype=bool)
    crossed = np.zeros(3 * m, dtype=bool)
    crossable[(twin != -1) & ~tree_mask] = True

    seen = np.zeros(m, dtype=bool)
    seen[0] = True
    queue = [0]
    qi = 0
    while qi < len(queue):
        f = queue[qi]
        qi += 1
        for h in (3 * f, 3 * f + 1, 3 * f + 2):
            if not crossable[h]:
                continue
            g = int(twin[h]) // 3
            if not seen[g]:
                seen[g] = True
                crossed[h] = True
                crossed[twin[h]] = True
                queue.append(g)
    left = np.nonzero(crossable & ~crossed & (src < dst))[0]
    return sorted((int(src[h]), int(dst[h])) for h in left)


def _dijkstra(indptr, idx, w, sources, targets, banned):
    """Deterministic Dijkstra; ties broken toward the smaller vertex id."""
    n = len(indptr) - 1
    dist = np.full(n, np.inf)
    pred = -np.ones(n, dtype=np.int64)
    heap = []
    for s in sorted(sources):
        dist[s] = 0.0
        heapq.heappush(heap, (0.0, s))
    target_set = set(int(t) for t in targets)
    done = np.zeros(n, dtype=bool)
    while heap:
        d, v = heapq.heappop(heap)
        if done[v] or d > dist[v]:
            continue
        done[v] = True
        if v in target_set:
            path = [v]
            while pred[path[-1]] != -1:
                path.append(int(pred[path[-1]]))
            return path[::-1]
        for u, wu in zip(idx[indptr[v]:indptr[v + 1]], w[indptr[v]:indptr[v + 1]]):
            u = int(u)
            if banned[u] and u not in target_set:
                continue
            nd = d + float(wu)
            if nd < dist[u]:
                dist[u] = nd
                pred[u] = v
                heapq.heappush(heap, (nd, u))
    return None


def detour_path(mesh, path, segment, forbidden=()):
    """Reroute one path segment across its neighboring triangle.

    Replaces the step (v_k, v_{k+1}) by (v_k, w, v_{k+1}) where w is a
    common neighbor off the path; this stays inside the path's homotopy
    class, so the flattening result is unchanged up to cutting and gluing.
    Returns None when no admissible detour vertex exists at this segment.
    """
    v = [int(x) for x in path.vertices]
    k = segment % (len(v) if path.closed else len(v) - 1)
    a, b = v[k], v[(k + 1) % len(v)]
    blocked = set(v) | set(int(x) for x in forbidden)
    na = set(int(u) for u in mesh.neighbors(a))
    nb = set(int(u) for u in mesh.neighbors(b))
    options = sorted(w for w in (na & nb) if w not in blocked)
    if not options:
        return None
    w = options[0]
    out = v[:k + 1] + [w] + v[k + 1:]
    return CutPath(np.asarray(out, dtype=np.int64), path.kind)


def vary_cut_system(mesh, alpha, beta, moves=3, seed=0):
    """Distinct cut system in the same homology class as (alpha, beta).

    Applies ``moves`` deterministic triangle detours to each loop. The
    rerouted loops still intersect only at the shared base point.
    """
    rng = np.random.default_rng(seed)
    out = []
    other = beta
    for path in (alpha, beta):
        current = path
        applied = 0
        attempts = 0
        while applied < moves and attempts < 8 * moves + 16:
            attempts += 1
            seg = 1 + int(rng.integers(0, max(len(current.vertices) - 2, 1)))
            cand = detour_path(mesh, current, seg, forbidden=other.vertices)
            if cand is not None:
                current = cand
                applied += 1
        out.append(current)
        other = out[0]
    if set(map(int, out[0].vertices)) & set(map(int, out[1].vertices)) != {int(alpha.vertices[0])}:
        return alpha, beta  # detours collided; fall back to the base system
    return out[0], out[1]


def find_cut_system_genus1(mesh, variant=0):
    """Handle loop (tree-cotree) plus tunnel loop (annulus shortest path).

    ``variant`` > 0 reroutes both loops across ``variant`` triangles each,
    producing structurally different cut systems within the same homology
    class; the flattening result is invariant up to cutting and gluing.
    """
    chi, g, b = topology(mesh)
    if g != 1 or b != 0:
        raise TopologyError(f"expected a closed genus-1 surface, got genus={g}, boundaries={b}")

    n = mesh.n_vertices
    root = 0
    parent, depth = _bfs_tree(mesh, root)
    # mark halfedges whose undirected edge sits in the spanning tree
    lo = np.minimum(mesh.he_src, mesh.he_dst)
    hi = np.maximum(mesh.he_src, mesh.he_dst)
    child = np.nonzero(parent != -1)[0]
    tree_keys = np.minimum(child, parent[child]) * n + np.maximum(child, parent[child])
    tree_keys.sort()
    pos = np.searchsorted(tree_keys, lo * n + hi)
    pos_c = np.minimum(pos, len(tree_keys) - 1)
    tree_mask = tree_keys[pos_c] == lo * n + hi
    leftovers = _cotree_leftover_edges(mesh, tree_mask)
    if len(leftovers) != 2:
        raise TopologyError(f"tree-cotree decomposition left {len(leftovers)} edges, expected 2")

    last_error = None
    for pick in (0, 1):
        u, v = leftovers[pick]
        loop = _tree_path(parent, depth, v, u)
        alpha = CutPath(np.asarray(loop, dtype=np.int64), "handle")
        try:
            beta = _tunnel_loop(mesh, alpha)
            if variant > 0:
                alpha, beta = vary_cut_system(mesh, alpha, beta, moves=variant, seed=variant)
            return alpha, beta
        except PathError as exc:
            last_error = exc
    raise PathError(f"could not build a cut system: {last_error}")


def _tunnel_loop(mesh, alpha):
    """Shortest loop crossing ``alpha`` once: a path between the two copies
    of a base vertex in the alpha-cut annulus, kept off the seam."""
    annulus, origin = _split_along_edges(mesh, set(alpha.edges()))
    if not annulus.is_connected():
        raise PathError("handle loop is separating")
    indptr, idx, w = annulus.vertex_adjacency()

    copies = {}
    for cv in range(annulus.n_vertices):
        copies.setdefault(int(origin[cv]), []).append(cv)
    seam_all = [cv for av in alpha.vertices for cv in copies[int(av)]]

    for a0 in map(int, alpha.vertices):
        c1, c2 = copies[a0]
        banned = np.zeros(annulus.n_vertices, dtype=bool)
        banned[seam_all] = True
        banned[c1] = False
        path = _dijkstra(indptr, idx, w, [c1], [c2], banned)
        if path is None or len(path) < 3:
            continue
        beta_vertices = [int(origin[p]) for p in path[:-1]]
        beta = CutPath(np.asarray(beta_vertices, dtype=np.int64), "tunnel")
        if len(np.unique(beta.vertices)) == len(beta.vertices):
            return beta
    raise PathError("no interior-disjoint tunnel loop from any base vertex on the handle loop")


def find_cross_path(mesh, outer, inner, avoid=()):
    """Shortest edge path from ``outer`` to ``inner`` through the interior.

    Interior vertices of the path avoid every boundary loop (and ``avoid``).
    Ties break toward smaller vertex ids, making the result deterministic.
    """
    loops = mesh.boundary_loops()
    if len(loops) < 2:
        raise TopologyError("mesh is not multiply connected")
    if outer.vertex_set() == inner.vertex_set():
        raise PathError("outer and inner loops coincide")

    banned = np.zeros(mesh.n_vertices, dtype=bool)
    for lp in loops:
        banned[lp.vertices] = True
    for v in avoid:
        banned[int(v)] = True
    sources = [int(v) for v in outer.vertices if int(v) not in set(map(int, avoid))]
    targets = [int(v) for v in inner.vertices]

    indptr, idx, w = mesh.vertex_adjacency()
    # sources may sit on the boundary; allow leaving them
    path = _dijkstra_multi(indptr, idx, w, sources, targets, banned)
    if path is None:
        raise PathError("boundaries are not connected through the interior")
    return CutPath(np.asarray(path, dtype=np.int64), "cross")


def _dijkstra_multi(indptr, idx, w, sources, targets, banned):
    n = len(indptr) - 1
    dist = np.full(n, np.inf)
    pred = -np.ones(n, dtype=np.int64)
    heap = []
    for s in sorted(sources):
        dist[s] = 0.0
        heapq.heappush(heap, (0.0, s))
    target_set = set(targets)
    done = np.zeros(n, dtype=bool)
    while heap:
        d, v = heapq.heappop(heap)
        if done[v] or d > dist[v]:
            continue
        done[v] = True
        if v in target_set:
            path = [v]
            while pred[path[-1]] != -1:
                path.append(int(pred[path[-1]]))
            return path[::-1]
        if banned[v] and dist[v] > 0.0:
            continue  # boundary vertices terminate or start paths, never continue them
        for u, wu in zip(idx[indptr[v]:indptr[v + 1]], w[indptr[v]:indptr[v + 1]]):
            u = int(u)
            if banned[u] and u not in target_set:
                continue
            nd = d + float(wu)
            if nd < dist[u] or (nd == dist[u] and pred[u] > v):
                dist[u] = nd
                pred[u] = v
                heapq.heappush(heap, (nd, u))
    return None


# ----------------------------------------------------------------------
# hole filling for the poly-annulus pipeline


def fill_holes(mesh, keep):
    """Close every inner boundary loop except ``keep`` with a centroid fan.

    The outer boundary (longest loop) is always kept. Fill faces and fill
    vertices are appended and tagged on the result (``fill_faces``,
    ``fill_vertices``) so ``remove_filled`` can restore the input exactly.
    """
    loops = mesh.boundary_loops()
    outer = loops[-1]
    keep_set = keep.vertex_set()
    if keep_set == outer.vertex_set():
        raise MeshError("keep must be an inner loop; the outer boundary is always kept")
    if not any(lp.vertex_set() == keep_set for lp in loops[:-1]):
        raise MeshError("keep is not a boundary loop of this mesh")

    to_fill = [lp for lp in loops[:-1] if lp.vertex_set() != keep_set]
    if not to_fill:
        return mesh

    he_len = mesh.edge_lengths_by_halfedge()
    twin = mesh.he_twin
    boundary_of = {}
    for h in np.nonzero(twin == -1)[0]:
        boundary_of[int(mesh.he_src[h])] = int(h)

    new_vertices = [mesh.vertices]
    new_faces = [mesh.faces]
    fill_lengths = []
    next_id = mesh.n_vertices
    for lp in to_fill:
        centroid = mesh.vertices[lp.vertices].mean(axis=0)
        cid = next_id
        next_id += 1
        new_vertices.append(centroid[None, :])
        hes = mesh.boundary_halfedges_from(boundary_of[int(lp.vertices[0])])
        for h in hes:
            u, v = int(mesh.he_src[h]), int(mesh.he_dst[h])
            new_faces.append(np.asarray([[v, u, cid]], dtype=np.int64))
            if mesh.is_intrinsic:
                lu = float(np.linalg.norm(mesh.vertices[u] - centroid))
                lv = float(np.linalg.norm(mesh.vertices[v] - centroid))
                fill_lengths.append([lu, lv, float(he_len[h])])

    vertices = np.vstack(new_vertices)
    faces = np.vstack(new_faces)
    lengths = None
    if mesh.is_intrinsic:
        lengths = np.vstack([mesh.face_lengths, np.asarray(fill_lengths)])
    out = SurfaceMesh(vertices, faces, face_lengths=lengths)
    out.fill_faces = np.arange(mesh.n_faces, len(faces))
    out.fill_vertices = np.arange(mesh.n_vertices, len(vertices))
    return out


def remove_filled(mesh):
    """Undo ``fill_holes``: drop tagged faces and vertices."""
    if mesh.fill_faces is None or len(mesh.fill_faces) == 0:
        return mesh
    m0 = int(mesh.fill_faces[0])
    n0 = int(mesh.fill_vertices[0])
    lengths = mesh.face_lengths[:m0] if mesh.is_intrinsic else None
    return SurfaceMesh(mesh.vertices[:n0], mesh.faces[:m0], face_lengths=lengths)


def paths_from_json(data):
    """Cut paths from a JSON override: {"alpha": [...], "beta": [...]} for
    genus-one runs or {"cross": [...]} for annulus runs, 0-based indices."""
    spec = json.loads(data.decode("utf-8") if isinstance(data, bytes) else data)
    if "cross" in spec:
        return (CutPath(np.asarray(spec["cross"], dtype=np.int64), "cross"),)
    if "alpha" in spec and "beta" in spec:
        return (
            CutPath(np.asarray(spec["alpha"], dtype=np.int64), "handle"),
            CutPath(np.asarray(spec["beta"], dtype=np.int64), "tunnel"),
        )
    raise PathError("loop override must define 'alpha'+'beta' or 'cross'")
