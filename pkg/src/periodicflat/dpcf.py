"""Doubly periodic conformal flattening of genus-one surfaces.

After cutting along a handle/tunnel pair, the map minimizes the conformal
energy with the base point pinned at the origin and the tunnel lattice
vector pinned to t = (1, 0). Both coordinate solves share one factorization
of the bordered matrix [L0 s1; s1^T k11], where L0 drops the base-point row
and column of the folded Laplacian. The handle vector h is free; nothing
forces it orthogonal to t, the energy determines the optimal lattice.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np
import scipy.sparse as sp

from .assembly import SymmetricFactor, cut_laplacian, fold_periodic
from .cut import cut_along, find_cut_system_genus1
from .errors import NumericalError, TopologyError
from .mesh import topology

__all__ = ["FlatLayout", "flatten_genus1", "lattice_relation"]


@dataclass
class FlatLayout:
    """Planar layout of a cut mesh plus its lattice vectors.

    ``coords[v]`` is the parameter-plane image of cut vertex ``v``. Seam
    identities hold exactly by construction: every copy equals its primary
    copy translated by its integer combination of h and t.
    """

    coords: np.ndarray
    t: np.ndarray
    h: np.ndarray = None
    pins: dict = field(default_factory=dict)


def _bordered_system(system, pinned_vertex):
    """[L0 s1; s1^T k11] with the pinned vertex's row/column removed.

    Vertex order puts the pinned vertex last, so removal is literally
    dropping the final row and column of the vertex block.
    """
    lap = system.laplacian.to_csr()
    n = lap.shape[0]
    keep = np.concatenate([np.arange(pinned_vertex), np.arange(pinned_vertex + 1, n)])
    l0 = lap[keep][:, keep]
    s1 = system.s[keep, 0]
    k11 = system.k[0, 0]
    top = sp.hstack([l0, sp.csr_matrix(s1[:, None])])
    bottom = sp.hstack([sp.csr_matrix(s1[None, :]), sp.csr_matrix([[k11]])])
    matrix = sp.vstack([top, bottom]).tocsc()
    matrix.sum_duplicates()
    matrix.sort_indices()
    return matrix, keep


def flatten_genus1(mesh, paths=None, variant=0, tol=1e-10):
    """Conformal flattening of a closed genus-one mesh.

    Returns (FlatLayout, CutMesh). ``paths`` optionally supplies the
    handle/tunnel loops; otherwise a tree-cotree system is found. The
    result satisfies h^2 > 0: the fundamental domain cannot degenerate.
    """
    chi, g, b = topology(mesh)
    if g != 1 or b != 0:
        raise TopologyError(f"expected a closed genus-1 surface, got genus={g}, boundaries={b}")
    if paths is None:
        paths = find_cut_system_genus1(mesh, variant=variant)
    cut = cut_along(mesh, list(paths))

    lap_cut = cut_laplacian(cut)
    system = fold_periodic(lap_cut, cut)
    o_vertex = int(cut.origin[cut.corners["O"]])

    matrix, keep = _bordered_system(system, o_vertex)
    factor = SymmetricFactor(matrix, tol=tol)

    s2 = system.s[keep, 1]
    rhs1 = np.concatenate([-s2, [-system.k[0, 1]]])
    rhs2 = np.concatenate([np.zeros(len(keep)), [1.0]])
    x1 = factor.solve(rhs1)
    x2 = factor.solve(rhs2)

    n = system.laplacian.dim
    f = np.zeros((n, 2))
    f[keep, 0] = x1[:-1]
    f[keep, 1] = x2[:-1]
    h = np.asarray([x1[-1], x2[-1]])
    t = np.asarray([1.0, 0.0])
    if not h[1] > 0:
        raise NumericalError(f"degenerate fundamental domain: h^2 = {h[1]:.3e} <= 0")

    offsets = cut.lattice_coeffs[:, 0, None] * h[None, :] + cut.lattice_coeffs[:, 1, None] * t[None, :]
    coords = f[cut.origin] + offsets
    layout = FlatLayout(coords, t=t, h=h, pins={"O": o_vertex, "t": (1.0, 0.0)})
    return layout, cut


def per_face_layout(layout, cut, faces):
    """Layout coordinates per face corner over arbitrary connectivity.

    Per-vertex coordinates are only defined modulo the lattice; each face
    anchors its first corner at the primary copy and translates the other
    corners by the integer lattice offset bringing them nearest the anchor.
    Faces straddling the seam wrap around and may fold; this is the price
    of exporting a layout onto connectivity that was not the one flattened.
    """
    faces = np.asarray(faces, dtype=np.int64)
    base = layout.coords[cut.primary]
    pts = base[faces]  # (m, 3, 2)
    gens = [layout.t] if layout.h is None else [layout.h, layout.t]
    shifts = [np.zeros(2)]
    for g in gens:
        shifts = [s + k * g for s in shifts for k in (-1, 0, 1)]
    shifts = np.asarray(shifts)  # (ns, 2)
    anchor = pts[:, 0:1, :]
    for corner in (1, 2):
        cand = pts[:, corner, None, :] + shifts[None, :, :]
        d = ((cand - anchor) ** 2).sum(axis=2)
        best = np.argmin(d, axis=1)
        pts[:, corner, :] = cand[np.arange(len(faces)), best]
    return pts


def lattice_relation(ht_ref, ht_new, search=3):
    """Best integer-unimodular-times-similarity fit between lattice bases.

    Finds an integer matrix A with |det A| = 1 and a similarity G (rotation
    or reflection times scale) minimizing  || [h';t'] - A [h;t] G ||_F,
    returning (A, G, relative residual). Lattice vectors from two cut
    systems of the same surface are related this way.
    """
    target = np.vstack(ht_new).astype(np.float64)
    base = np.vstack(ht_ref).astype(np.float64)
    scale = np.linalg.norm(target)
    best = None
    rng = range(-search, search + 1)
    for a11, a12, a21, a22 in product(rng, repeat=4):
        det = a11 * a22 - a12 * a21
        if det not in (-1, 1):
            continue
        amat = np.asarray([[a11, a12], [a21, a22]], dtype=np.float64)
        bmat = amat @ base
        for reflect in (False, True):
            # least squares for G = [[p, q], [-q, p]] or [[p, q], [q, -p]]
            denom = (bmat * bmat).sum()
            if denom == 0:
                continue
            if not reflect:
                p = (bmat[:, 0] * target[:, 0] + bmat[:, 1] * target[:, 1]).sum() / denom
                q = (bmat[:, 0] * target[:, 1] - bmat[:, 1] * target[:, 0]).sum() / denom
                gmat = np.asarray([[p, q], [-q, p]])
            else:
                p = (bmat[:, 0] * target[:, 0] - bmat[:, 1] * target[:, 1]).sum() / denom
                q = (bmat[:, 0] * target[:, 1] + bmat[:, 1] * target[:, 0]).sum() / denom
                gmat = np.asarray([[p, q], [q, -p]])
            resid = np.linalg.norm(target - bmat @ gmat) / scale
            if best is None or resid < best[2]:
                best = (amat.astype(np.int64), gmat, float(resid))
    if best is None:
        raise NumericalError("no unimodular relation found")
    return best
