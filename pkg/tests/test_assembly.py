import numpy as np
import pytest

from periodicflat import synth
from periodicflat.assembly import (
    SparseSym,
    SymmetricFactor,
    conformal_energy,
    cut_laplacian,
    fold_periodic,
    gauss_area,
    periodic_gradient,
    solve_sym,
)
from periodicflat.cut import CutPath, cut_along, find_cross_path
from periodicflat.dpcf import flatten_genus1
from periodicflat.errors import NumericalError, SingularSystemError
from periodicflat.mesh import SurfaceMesh
from periodicflat.spcf import flatten_strip

from conftest import lattice_paths
import scipy.sparse as sp


def dense_fold_oracle(cut_lap, cut):
    """P^T L P with the identification matrix P built explicitly."""
    n_cut = cut.n_vertices
    n = cut.n_original
    nsym = cut.n_symbols
    p = np.zeros((n_cut, n + nsym))
    for cv in range(n_cut):
        p[cv, int(cut.origin[cv])] = 1.0
        coeffs = cut.lattice_coeffs[cv, -nsym:]
        for si in range(nsym):
            p[cv, n + si] = float(coeffs[si])
    ldense = cut_lap.to_csr().toarray()
    return p.T @ ldense @ p


def cot_weight_oracle(p_i, p_j, apexes):
    """Half-cotangent sum from raw coordinates."""
    total = 0.0
    for apex in apexes:
        u = np.asarray(p_i) - np.asarray(apex)
        v = np.asarray(p_j) - np.asarray(apex)
        cross = np.linalg.norm(np.cross(u, v))
        total += 0.5 * float(np.dot(u, v)) / cross
    return total


class TestCutLaplacian:
    def test_interior_equilateral_weight(self):
        verts = np.array(
            [[0, 0, 0], [1, 0, 0], [0.5, np.sqrt(3) / 2, 0], [0.5, -np.sqrt(3) / 2, 0]]
        )
        faces = np.array([[0, 1, 2], [1, 0, 3]])
        lap = cut_laplacian(SurfaceMesh(verts, faces)).to_csr().toarray()
        assert abs(-lap[0, 1] - 1 / np.sqrt(3)) < 1e-12

    def test_boundary_equilateral_weight(self):
        verts = np.array([[0, 0, 0], [1, 0, 0], [0.5, np.sqrt(3) / 2, 0]])
        faces = np.array([[0, 1, 2]])
        lap = cut_laplacian(SurfaceMesh(verts, faces)).to_csr().toarray()
        assert abs(-lap[0, 1] - 0.5 / np.sqrt(3)) < 1e-12

    def test_thin_quad_negative_weight(self, thin_quad):
        lap = cut_laplacian(thin_quad).to_csr().toarray()
        expected = cot_weight_oracle(
            [0, 0, 0], [1, 0, 0], [[0.5, 0.2, 0], [0.5, -0.2, 0]]
        )
        assert abs(-lap[0, 1] - expected) < 1e-12
        assert expected == pytest.approx(-1.05, abs=1e-9)

    def test_row_sums_vanish(self, grid_torus8):
        cut = cut_along(grid_torus8, list(lattice_paths(8, 8)))
        lap = cut_laplacian(cut)
        assert np.abs(lap.row_sums()).max() < 1e-10


class TestFoldPeriodic:
    @pytest.mark.parametrize("nu,nv", [(4, 4), (5, 4)])
    def test_matches_dense_oracle_genus1(self, nu, nv):
        mesh = synth.flat_torus(nu, nv)
        cut = cut_along(mesh, list(lattice_paths(nu, nv)))
        assert cut.n_vertices <= 100
        lap_cut = cut_laplacian(cut)
        system = fold_periodic(lap_cut, cut)
        oracle = dense_fold_oracle(lap_cut, cut)
        n = system.laplacian.dim
        assert np.abs(system.laplacian.to_csr().toarray() - oracle[:n, :n]).max() <= 1e-12
        assert np.abs(system.s - oracle[:n, n:]).max() <= 1e-12
        assert np.abs(system.k - oracle[n:, n:]).max() <= 1e-12

    def test_matches_dense_oracle_cross(self):
        mesh = synth.cylinder(1.0, 1.0, 8, 4)
        loops = mesh.boundary_loops()
        cross = find_cross_path(mesh, loops[1], loops[0])
        cut = cut_along(mesh, [cross])
        assert cut.n_vertices <= 100
        lap_cut = cut_laplacian(cut)
        system = fold_periodic(lap_cut, cut)
        oracle = dense_fold_oracle(lap_cut, cut)
        n = system.laplacian.dim
        assert np.abs(system.laplacian.to_csr().toarray() - oracle[:n, :n]).max() <= 1e-12
        assert np.abs(system.s - oracle[:n, n:]).max() <= 1e-12
        assert np.abs(system.k - oracle[n:, n:]).max() <= 1e-12

    def test_coupling_columns_sum_to_zero(self, revolution_torus):
        from periodicflat.cut import find_cut_system_genus1

        cut = cut_along(revolution_torus, list(find_cut_system_genus1(revolution_torus)))
        system = fold_periodic(cut_laplacian(cut), cut)
        assert np.abs(system.s.sum(axis=0)).max() < 1e-10

    def test_k_exactly_symmetric(self, grid_torus8):
        cut = cut_along(grid_torus8, list(lattice_paths(8, 8)))
        system = fold_periodic(cut_laplacian(cut), cut)
        assert np.array_equal(system.k, system.k.T)

    def test_folded_rows_sum_to_zero(self, grid_torus8):
        cut = cut_along(grid_torus8, list(lattice_paths(8, 8)))
        system = fold_periodic(cut_laplacian(cut), cut)
        assert np.abs(system.laplacian.row_sums()).max() < 1e-10

    def test_partition_covers_everything(self, grid_torus8):
        cut = cut_along(grid_torus8, list(lattice_paths(8, 8)))
        system = fold_periodic(cut_laplacian(cut), cut)
        pieces = np.concatenate(list(system.partition.values()))
        assert len(pieces) == grid_torus8.n_vertices
        assert len(np.unique(pieces)) == grid_torus8.n_vertices


class TestSolve:
    def test_identity(self):
        a = SparseSym.from_entries(3, [0, 1, 2], [0, 1, 2], [1.0, 1.0, 1.0])
        b = np.array([3.0, -1.0, 2.0])
        assert np.allclose(solve_sym(a, b), b, atol=1e-14)

    def test_two_by_two(self):
        a = SparseSym.from_entries(2, [0, 1, 1], [0, 0, 1], [2.0, 1.0, 2.0])
        x = solve_sym(a, np.array([3.0, 3.0]))
        assert np.allclose(x, [1.0, 1.0], atol=1e-12)

    def test_singular_rejected(self):
        a = SparseSym.from_entries(2, [0], [0], [0.0])
        with pytest.raises(SingularSystemError):
            solve_sym(a, np.array([1.0, 1.0]))

    def test_residual_bound_on_pipeline_system(self, revolution_torus):
        layout, cut = flatten_genus1(revolution_torus, paths=lattice_paths(64, 32))
        lap = cut_laplacian(cut)
        grad = periodic_gradient(layout, lap, cut)
        # free vertex rows of the stationarity system vanish
        o_vertex = int(cut.origin[cut.corners["O"]])
        mask = np.ones(len(grad), dtype=bool)
        mask[-2:] = False  # lattice rows carry the residual energy
        assert np.abs(grad[mask]).max() < 1e-8

    def test_deterministic_solutions(self):
        rng = np.random.default_rng(0)
        n = 50
        d = rng.uniform(1, 2, n)
        a = sp.diags(d).tocsr() + sp.random(n, n, density=0.1, random_state=1)
        a = (a + a.T).tocsr()
        b = rng.normal(size=n)
        x1 = SymmetricFactor(a).solve(b)
        x2 = SymmetricFactor(a.copy()).solve(b.copy())
        assert np.array_equal(x1, x2)


class TestGaussArea:
    def test_unit_square_ccw(self):
        square = [(0, 0), (1, 0), (1, 1), (0, 1)]
        assert gauss_area(square) == pytest.approx(1.0, abs=1e-15)

    def test_unit_square_cw(self):
        square = [(0, 0), (0, 1), (1, 1), (1, 0)]
        assert gauss_area(square) == pytest.approx(-1.0, abs=1e-15)

    def test_layout_area_matches_lattice(self, square_torus32):
        layout, cut = flatten_genus1(square_torus32, paths=lattice_paths(32, 32))
        from periodicflat.metrics import signed_areas

        total = signed_areas(layout.coords, cut.mesh.faces).sum()
        h, t = layout.h, layout.t
        assert abs(total - (t[0] * h[1] - t[1] * h[0])) < 1e-8


class TestConformalEnergy:
    def test_similarity_image_zero_energy(self, square_torus32):
        layout, cut = flatten_genus1(square_torus32, paths=lattice_paths(32, 32))
        lap = cut_laplacian(cut)
        ang = 0.3
        rot = np.array(
            [[np.cos(ang), np.sin(ang)], [-np.sin(ang), np.cos(ang)]]
        ) * 1.7
        from periodicflat.dpcf import FlatLayout

        moved = FlatLayout(layout.coords @ rot, t=layout.t @ rot, h=layout.h @ rot)
        e_c, e_d, area = conformal_energy(moved, lap, cut)
        assert abs(e_c) <= 1e-10

    def test_solution_beats_uniform_weight_layout(self, revolution_torus):
        paths = lattice_paths(64, 32)
        layout, cut = flatten_genus1(revolution_torus, paths=paths)
        lap = cut_laplacian(cut)
        e_solved = conformal_energy(layout, lap, cut)[0]

        # Tutte-style comparison layout: same folding, uniform weights
        ones = SparseSym.from_entries(
            lap.dim,
            lap.rows,
            lap.cols,
            np.where(lap.rows != lap.cols, -1.0, 0.0),
        )
        deg = -np.asarray(ones.to_csr().sum(axis=1)).ravel()
        uniform = SparseSym.from_entries(
            lap.dim,
            np.concatenate([ones.rows, np.arange(lap.dim)]),
            np.concatenate([ones.cols, np.arange(lap.dim)]),
            np.concatenate([np.where(ones.rows != ones.cols, ones.vals, 0.0), deg]),
        )
        from periodicflat.dpcf import FlatLayout, _bordered_system

        sys_u = fold_periodic(uniform, cut)
        o_vertex = int(cut.origin[cut.corners["O"]])
        matrix, keep = _bordered_system(sys_u, o_vertex)
        factor = SymmetricFactor(matrix)
        x1 = factor.solve(np.concatenate([-sys_u.s[keep, 1], [-sys_u.k[0, 1]]]))
        x2 = factor.solve(np.concatenate([np.zeros(len(keep)), [1.0]]))
        n = sys_u.laplacian.dim
        f = np.zeros((n, 2))
        f[keep, 0] = x1[:-1]
        f[keep, 1] = x2[:-1]
        h = np.array([x1[-1], x2[-1]])
        t = np.array([1.0, 0.0])
        offs = cut.lattice_coeffs[:, 0, None] * h + cut.lattice_coeffs[:, 1, None] * t
        tutte = FlatLayout(f[cut.origin] + offs, t=t, h=h)
        e_tutte = conformal_energy(tutte, lap, cut)[0]
        assert e_solved <= e_tutte + 1e-12

    def test_cylinder_strip_zero_energy(self, cylinder_mesh):
        strip, cut = flatten_strip(cylinder_mesh)
        lap = cut_laplacian(cut)
        e_c, e_d, area = conformal_energy(strip, lap, cut)
        assert abs(e_c) <= 1e-10
        assert area == pytest.approx(float(strip.t[0]), abs=1e-12)

    def test_seam_violation_detected(self, square_torus32):
        layout, cut = flatten_genus1(square_torus32, paths=lattice_paths(32, 32))
        lap = cut_laplacian(cut)
        broken = layout.coords.copy()
        minus = cut.seams[0].minus
        broken[minus[len(minus) // 2]] += 1e-6
        from periodicflat.dpcf import FlatLayout

        with pytest.raises(NumericalError, match="seam"):
            conformal_energy(
                FlatLayout(broken, t=layout.t, h=layout.h), lap, cut
            )
