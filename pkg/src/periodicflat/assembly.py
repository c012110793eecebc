"""Cut cotangent Laplacian, periodic folding, and the symmetric solve.

The cut surface carries the cotangent Laplacian of a mesh with boundary:
interior edges weigh -(cot a + cot b)/2, seam and boundary edges -(cot a)/2
from their single face. Folding identifies each seam-minus copy with its
origin vertex plus a lattice symbol, compressing the cut system into the
blocks L_D (vertices), S (vertex-lattice coupling) and K (lattice-lattice),
equal to P^T L P for the 0/1 identification matrix P, without forming P.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import splu

from .errors import MeshError, NumericalError, SingularSystemError

__all__ = [
    "SparseSym",
    "PeriodicSystem",
    "cut_laplacian",
    "fold_periodic",
    "SymmetricFactor",
    "solve_sym",
    "gauss_area",
    "conformal_energy",
    "periodic_gradient",
]


@dataclass
class SparseSym:
    """Symmetric sparse matrix stored as deduplicated lower-triangular COO."""

    dim: int
    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray

    @classmethod
    def from_entries(cls, dim, rows, cols, vals):
        """Build from raw symmetric COO data; keeps the lower triangle."""
        rows = np.asarray(rows, dtype=np.int64)
        cols = np.asarray(cols, dtype=np.int64)
        vals = np.asarray(vals, dtype=np.float64)
        if len(rows) and (rows.min() < 0 or rows.max() >= dim or cols.min() < 0 or cols.max() >= dim):
            raise MeshError("sparse entry index out of range")
        keep = rows >= cols
        r, c, v = rows[keep], cols[keep], vals[keep]
        key = r * dim + c
        order = np.argsort(key, kind="stable")
        key, r, c, v = key[order], r[order], c[order], v[order]
        uniq, start = np.unique(key, return_index=True)
        sums = np.add.reduceat(v, start) if len(v) else v
        return cls(dim, r[start], c[start], sums)

    def to_csr(self):
        """Full symmetric CSR matrix."""
        off = self.rows != self.cols
        r = np.concatenate([self.rows, self.cols[off]])
        c = np.concatenate([self.cols, self.rows[off]])
        v = np.concatenate([self.vals, self.vals[off]])
        return sp.csr_matrix((v, (r, c)), shape=(self.dim, self.dim))

    def matvec(self, x):
        return self.to_csr() @ x

    def diagonal(self):
        d = np.zeros(self.dim)
        on = self.rows == self.cols
        d[self.rows[on]] = self.vals[on]
        return d

    def row_sums(self):
        return np.asarray(self.to_csr().sum(axis=1)).ravel()


@dataclass
class PeriodicSystem:
    """Folded blocks of the periodically identified cut Laplacian.

    ``laplacian`` is n x n over original vertices, ``s`` the n x k coupling
    block (k = 2 lattice symbols for genus-one, 1 for a cross cut) and ``k``
    the k x k lattice block. ``partition`` records the index sets of the
    fundamental-domain pieces as original vertex ids.
    """

    laplacian: SparseSym
    s: np.ndarray
    k: np.ndarray
    partition: dict
    n_symbols: int


def cut_laplacian(cut):
    """Cotangent Laplacian of the cut mesh under its active metric.

    Seam and boundary edges take the half-cotangent of their single face;
    interior edges take the usual half sum over both incident faces.
    """
    mesh = cut.mesh if hasattr(cut, "mesh") else cut
    ang = mesh.corner_angles()
    cot = np.cos(ang) / np.sin(ang)
    f = mesh.faces
    n = mesh.n_vertices

    # edge opposite corner k joins corners k+1 and k+2
    i = f[:, [1, 2, 0]].ravel()
    j = f[:, [2, 0, 1]].ravel()
    w = 0.5 * cot.ravel()

    rows = np.concatenate([i, j, i, j])
    cols = np.concatenate([j, i, i, j])
    vals = np.concatenate([-w, -w, w, w])
    return SparseSym.from_entries(n, rows, cols, vals)


def fold_periodic(cut_lap, cut):
    """Fold the cut Laplacian through the seam identification.

    Each cut vertex contributes to its origin row and, weighted by its
    integer lattice coefficients, to the lattice rows; this accumulates the
    blocks of P^T L P directly by index mapping.
    """
    if cut_lap.dim != cut.n_vertices:
        raise MeshError("cut Laplacian dimension does not match the cut mesh")
    n = cut.n_original
    nsym = cut.n_symbols
    origin = cut.origin
    # lattice_coeffs columns are (h, t); a cross cut uses only the t symbol
    coeff = cut.lattice_coeffs[:, -nsym:].astype(np.float64)

    off = cut_lap.rows != cut_lap.cols
    r = np.concatenate([cut_lap.rows, cut_lap.cols[off]])
    c = np.concatenate([cut_lap.cols, cut_lap.rows[off]])
    v = np.concatenate([cut_lap.vals, cut_lap.vals[off]])

    lap = SparseSym.from_entries(n, origin[r], origin[c], v)

    s = np.zeros((n, nsym))
    np.add.at(s, origin[r], v[:, None] * coeff[c])

    k = (coeff[r] * v[:, None]).T @ coeff[c]
    k = np.triu(k) + np.triu(k, 1).T  # exact symmetry

    partition = _partition(cut)
    return PeriodicSystem(lap, s, k, partition, nsym)


def _partition(cut):
    origin = cut.origin
    n = cut.n_original
    claimed = np.zeros(n, dtype=bool)
    part = {}
    if cut.kind == "genus1":
        alpha, beta = cut.seams[0], cut.seams[1]
        o = int(origin[cut.corners["O"]])
        part["O"] = np.asarray([o])
        claimed[o] = True
        part["Bh_plus"] = origin[alpha.plus[1:-1]]
        part["Bt_plus"] = origin[beta.plus[1:-1]]
        claimed[part["Bh_plus"]] = True
        claimed[part["Bt_plus"]] = True
    else:
        cross = cut.seams[0]
        o1 = int(origin[cut.corners["O1"]])
        o2 = int(origin[cut.corners["O2"]])
        part["O1"] = np.asarray([o1])
        part["O2"] = np.asarray([o2])
        claimed[[o1, o2]] = True
        part["BC_plus"] = origin[cross.plus[1:-1]]
        claimed[part["BC_plus"]] = True
        outer, inner = _cross_boundary_sets(cut)
        part["BO"] = np.asarray(sorted(outer - {o1}), dtype=np.int64)
        part["BI"] = np.asarray(sorted(inner - {o2}), dtype=np.int64)
        claimed[part["BO"]] = True
        claimed[part["BI"]] = True
    part["interior"] = np.nonzero(~claimed)[0]
    return part


def _cross_boundary_sets(cut):
    """Original outer/inner boundary vertex sets recovered from the cut."""
    origin = cut.origin
    walk = cut.mesh.boundary_loops()[0].vertices
    cross = cut.seams[0]
    seam_cut_ids = set(map(int, cross.plus)) | set(map(int, cross.minus))
    o1 = int(origin[cut.corners["O1"]])
    o2 = int(origin[cut.corners["O2"]])
    outer, inner = {o1}, {o2}
    on_outer = None
    for cv in list(walk) + list(walk):
        cv = int(cv)
        if cv in seam_cut_ids:
            ov = int(origin[cv])
            if ov == o1:
                on_outer = True
            elif ov == o2:
                on_outer = False
            continue
        if on_outer is True:
            outer.add(int(origin[cv]))
        elif on_outer is False:
            inner.add(int(origin[cv]))
    return outer, inner


# ----------------------------------------------------------------------
# symmetric solve


class SymmetricFactor:
    """Shared sparse LU factorization with iterative refinement.

    The fill-reducing ordering is fixed, so repeated runs on the same
    matrix give bit-identical solutions.
    """

    def __init__(self, matrix, tol=1e-10):
        if isinstance(matrix, SparseSym):
            matrix = matrix.to_csr()
        self.a = matrix.tocsc()
        self.a.sum_duplicates()
        self.a.sort_indices()
        self.tol = tol
        self.norm = sp.linalg.norm(self.a)
        diag = np.abs(self.a.diagonal())
        ref = diag.max() if diag.size and diag.max() > 0 else (np.abs(self.a.data).max() if self.a.nnz else 0.0)
        try:
            self.lu = splu(self.a, permc_spec="MMD_AT_PLUS_A", diag_pivot_thresh=1.0)
        except RuntimeError as exc:
            raise SingularSystemError(f"factorization failed: {exc}") from exc
        piv = np.abs(self.lu.U.diagonal())
        if ref > 0 and piv.size:
            bad = int(np.argmin(piv))
            if piv[bad] < 1e-14 * ref:
                raise SingularSystemError(
                    f"pivot {piv[bad]:.3e} below threshold at index {bad}", pivot_index=bad
                )

    def solve(self, b):
        b = np.asarray(b, dtype=np.float64)
        x = self.lu.solve(b)
        for _ in range(5):
            r = b - self.a @ x
            bound = self.tol * (self.norm * np.linalg.norm(x) + np.linalg.norm(b))
            if np.linalg.norm(r) <= bound:
                return x
            x = x + self.lu.solve(r)
        r = b - self.a @ x
        bound = self.tol * (self.norm * np.linalg.norm(x) + np.linalg.norm(b))
        if np.linalg.norm(r) > bound:
            raise NumericalError(
                f"solve residual {np.linalg.norm(r):.3e} exceeds bound {bound:.3e}"
            )
        return x


def solve_sym(a, b, tol=1e-10):
    """Solve a symmetric sparse system to a relative residual of ``tol``."""
    return SymmetricFactor(a, tol=tol).solve(b)


# ----------------------------------------------------------------------
# areas and energy


def gauss_area(points):
    """Signed polygon area by the shoelace formula; positive when ccw."""
    p = np.asarray(points, dtype=np.float64)
    if len(p) < 3:
        raise MeshError("polygon needs at least 3 points")
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def lattice_area(layout):
    """Fundamental-domain area: t^1 h^2 - t^2 h^1, or t^1 for a strip."""
    t = layout.t
    if layout.h is None:
        return float(t[0])
    h = layout.h
    return float(t[0] * h[1] - t[1] * h[0])


def _check_seams(layout, cut, tol=1e-9):
    coords = layout.coords
    h = layout.h if layout.h is not None else np.zeros(2)
    t = layout.t
    offsets = cut.lattice_coeffs[:, 0, None] * h[None, :] + cut.lattice_coeffs[:, 1, None] * t[None, :]
    base = coords[cut.primary[cut.origin]]
    err = np.abs(coords - (base + offsets)).max()
    if err > tol:
        raise NumericalError(f"seam identity violated by {err:.3e}; layout is not periodic")


def conformal_energy(layout, cut_lap, cut):
    """(E_C, E_D, A): conformal energy, Dirichlet energy, lattice area.

    E_D is half the trace of f^T L f over the cut layout; the area comes
    from the lattice vectors; E_C = E_D - A is nonnegative and vanishes
    exactly at conformal maps. Raises when the layout violates the seam
    translation identity beyond 1e-9.
    """
    _check_seams(layout, cut)
    f = layout.coords
    lf = cut_lap.to_csr() @ f
    e_d = 0.5 * float(np.einsum("ij,ij->", f, lf))
    a = lattice_area(layout)
    return e_d - a, e_d, a


def periodic_gradient(layout, cut_lap, cut):
    """Full stationarity residual of the quadratic energy, re-derived from
    the cut Laplacian (independent of the reduced solve).

    Returns an (n + nsym, 2) array: vertex rows then lattice-symbol rows
    (h before t for genus-one cuts). At an exact minimizer the vertex rows
    vanish and, for conformal solutions, the lattice rows vanish too.
    """
    sys = fold_periodic(cut_lap, cut)
    n, nsym = sys.laplacian.dim, sys.n_symbols
    f = layout.coords[cut.primary]
    if nsym == 2:
        g_sym = np.vstack([layout.h, layout.t])
    else:
        g_sym = layout.t[None, :]
    l_csr = sys.laplacian.to_csr()
    grad_f = l_csr @ f + sys.s @ g_sym
    grad_sym = sys.s.T @ f + sys.k @ g_sym
    if nsym == 2:
        h, t = layout.h, layout.t
        grad_sym = grad_sym + np.asarray([[t[1], -t[0]], [-h[1], h[0]]])
    else:
        grad_sym = grad_sym - np.asarray([[1.0, 0.0]])
    return np.vstack([grad_f, grad_sym])
