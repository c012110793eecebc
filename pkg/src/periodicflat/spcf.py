"""Single periodic conformal flattening: annuli and poly-annuli.

A doubly connected surface cut along an outer-to-inner path flattens to a
single periodic strip with the outer boundary on y = 0 and the inner on
y = 1; the exponential map then rolls the strip into an annulus with outer
radius 1. Surfaces with more boundaries are processed hole by hole: fill
the others, flatten to an annulus, unfill, and finally snap every boundary
to its least-squares circle and relax the interior harmonically under the
original metric.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .assembly import SymmetricFactor, cut_laplacian, fold_periodic
from .cut import cut_along, fill_holes, find_cross_path, remove_filled
from .dpcf import FlatLayout
from .errors import MeshError, NumericalError, TopologyError
from .mesh import SurfaceMesh, topology

__all__ = [
    "AnnulusResult",
    "PolyAnnulusResult",
    "flatten_strip",
    "exp_to_annulus",
    "annulus_map_points",
    "flatten_polyannulus",
    "fit_circle",
]


@dataclass
class AnnulusResult:
    """Annulus parameterization: strip layout plus rolled-up coordinates.

    ``coords[v]`` is the annulus image of original vertex ``v`` (seam pairs
    merge onto the plus side); the outer boundary sits on the unit circle
    and the inner on the circle of radius ``inner_radius`` = exp(-2 pi / l)
    for strip period l.
    """

    strip: FlatLayout
    coords: np.ndarray
    inner_radius: float


@dataclass
class PolyAnnulusResult:
    """Poly-annulus parameterization of a multiply connected surface."""

    coords: np.ndarray
    circles: list  # (center (2,), radius, BoundaryLoop) outer last
    iterations: int = 0
    history: list = field(default_factory=list)


def flatten_strip(mesh, cross=None, tol=1e-10):
    """Flatten a doubly connected mesh to a single periodic strip.

    The x coordinate and the period t^1 come from one bordered solve with
    the origin pinned; the y coordinate is harmonic with the outer boundary
    held at 0 and the inner at 1. Returns (FlatLayout, CutMesh).
    """
    chi, g, b = topology(mesh)
    if g != 0 or b != 2:
        raise TopologyError(f"expected a doubly connected surface, got genus={g}, boundaries={b}")
    loops = mesh.boundary_loops()
    inner, outer = loops[0], loops[1]
    if cross is None:
        cross = find_cross_path(mesh, outer, inner)
    cut = cut_along(mesh, [cross])

    lap_cut = cut_laplacian(cut)
    system = fold_periodic(lap_cut, cut)
    part = system.partition
    o1 = int(part["O1"][0])
    o2 = int(part["O2"][0])

    lap = system.laplacian.to_csr()
    n = lap.shape[0]

    # x system over everything but the pinned origin, bordered by the period
    keep = np.concatenate([np.arange(o1), np.arange(o1 + 1, n)])
    l1 = lap[keep][:, keep]
    s1 = system.s[keep, 0]
    top = sp.hstack([l1, sp.csr_matrix(s1[:, None])])
    bottom = sp.hstack([sp.csr_matrix(s1[None, :]), sp.csr_matrix([[system.k[0, 0]]])])
    matrix = sp.vstack([top, bottom]).tocsc()
    matrix.sum_duplicates()
    matrix.sort_indices()
    rhs = np.concatenate([np.zeros(len(keep)), [1.0]])
    x_sol = SymmetricFactor(matrix, tol=tol).solve(rhs)

    f = np.zeros((n, 2))
    f[keep, 0] = x_sol[:-1]
    t1 = float(x_sol[-1])
    if not t1 > 0:
        raise NumericalError(f"degenerate strip period t^1 = {t1:.3e} <= 0")

    # y system: interior and seam-plus vertices free, boundaries pinned
    free = np.concatenate([part["interior"], part["BC_plus"]])
    free.sort()
    ones = np.concatenate([part["BI"], part["O2"]])
    y = np.zeros(n)
    y[ones] = 1.0
    rhs_y = -(lap[free][:, ones] @ np.ones(len(ones)))
    if len(free):
        y[free] = SymmetricFactor(lap[free][:, free], tol=tol).solve(rhs_y)
    f[:, 1] = y

    t = np.asarray([t1, 0.0])
    offsets = cut.lattice_coeffs[:, 1, None] * t[None, :]
    coords = f[cut.origin] + offsets
    layout = FlatLayout(coords, t=t, h=None, pins={"O1": o1, "O2": o2})
    return layout, cut


def annulus_map_points(points, period):
    """Analytic map from the periodic strip [0, l] x [0, 1] to an annulus:
    (x, y) -> exp(-2 pi y / l) (cos(2 pi x / l), sin(2 pi x / l))."""
    if period <= 0:
        raise NumericalError("strip period must be positive")
    p = np.asarray(points, dtype=np.float64)
    ang = 2 * np.pi * p[..., 0] / period
    rad = np.exp(-2 * np.pi * p[..., 1] / period)
    return np.stack([rad * np.cos(ang), rad * np.sin(ang)], axis=-1)


def exp_to_annulus(strip, cut=None):
    """Roll a strip layout into the annulus; seam pairs land on one point.

    With a cut supplied, coordinates are indexed by original vertex: minus
    copies are merged into their plus partner, so the periodicity is exact
    by construction. Returns an AnnulusResult.
    """
    period = float(strip.t[0])
    if cut is None:
        coords = annulus_map_points(strip.coords, period)
    else:
        coords = annulus_map_points(strip.coords[cut.primary], period)
    return AnnulusResult(strip, coords, float(np.exp(-2 * np.pi / period)))


def fit_circle(points):
    """Least-squares circle (algebraic fit): returns (center, radius)."""
    p = np.asarray(points, dtype=np.float64)
    if len(p) < 3:
        raise MeshError("circle fit needs at least 3 points")
    a = np.column_stack([2 * p[:, 0], 2 * p[:, 1], np.ones(len(p))])
    b = (p ** 2).sum(axis=1)
    sol, *_ = np.linalg.lstsq(a, b, rcond=None)
    center = sol[:2]
    radius = float(np.sqrt(max(sol[2] + center @ center, 0.0)))
    if radius <= 0:
        raise NumericalError("degenerate circle fit")
    return center, radius


def flatten_polyannulus(mesh, idt=False, tol=1e-10):
    """Map a multiply connected genus-zero surface to a poly-annulus.

    Inner boundaries are processed in order of decreasing length: all other
    holes are filled, the doubly connected result is flattened to an
    annulus, and the fills are removed. Afterwards every inner boundary is
    projected onto its least-squares circle, the outer boundary onto the
    unit circle, and interior vertices are recomputed harmonically under
    the original 3D metric with all boundaries fixed.
    """
    chi, g, b = topology(mesh)
    if g != 0 or b < 2:
        raise TopologyError(f"expected genus 0 with >= 2 boundaries, got genus={g}, boundaries={b}")

    loops = mesh.boundary_loops()
    outer = loops[-1]
    inner_order = sorted(loops[:-1], key=lambda lp: -lp.length)

    coords3d = mesh.vertices.copy()
    n = mesh.n_vertices
    history = []
    for target in inner_order:
        current = SurfaceMesh(coords3d, mesh.faces, face_lengths=None)
        cur_loops = current.boundary_loops()
        keep = _match_loop(cur_loops, target)
        filled = fill_holes(current, keep)
        work = filled
        if idt:
            from .idt import make_intrinsic_delaunay

            work = make_intrinsic_delaunay(filled).to_surface_mesh()
        w_loops = work.boundary_loops()
        w_outer = _match_loop(w_loops, outer)
        w_inner = _match_loop(w_loops, keep)
        cross = find_cross_path(work, w_outer, w_inner)
        strip, cut = flatten_strip(work, cross=cross, tol=tol)
        ann = exp_to_annulus(strip, cut)
        history.append((target.vertex_set(), float(strip.t[0])))
        coords3d = np.column_stack([ann.coords[:n], np.zeros(n)])

    # snap boundaries to circles
    coords = coords3d[:, :2].copy()
    circles = []
    for lp in loops[:-1]:
        center, radius = fit_circle(coords[lp.vertices])
        d = coords[lp.vertices] - center
        norm = np.linalg.norm(d, axis=1)
        if np.any(norm == 0):
            raise NumericalError("hole collapsed onto its circle center")
        coords[lp.vertices] = center + radius * d / norm[:, None]
        circles.append((center, radius, lp))
    d = coords[outer.vertices]
    norm = np.linalg.norm(d, axis=1)
    if np.any(norm == 0):
        raise NumericalError("outer boundary touches the origin")
    coords[outer.vertices] = d / norm[:, None]
    circles.append((np.zeros(2), 1.0, outer))

    # harmonic interior update under the original metric, boundaries fixed
    lap = cut_laplacian(mesh).to_csr()
    boundary = np.zeros(n, dtype=bool)
    for lp in loops:
        boundary[lp.vertices] = True
    free = np.nonzero(~boundary)[0]
    if len(free):
        factor = SymmetricFactor(lap[free][:, free], tol=tol)
        rhs = -(lap[free][:, boundary] @ coords[boundary])
        coords[free, 0] = factor.solve(rhs[:, 0])
        coords[free, 1] = factor.solve(rhs[:, 1])

    return PolyAnnulusResult(coords, circles, iterations=len(inner_order), history=history)


def _match_loop(loops, reference):
    ref = reference.vertex_set()
    for lp in loops:
        if lp.vertex_set() == ref:
            return lp
    raise MeshError("boundary loop not found in the current mesh")
