import numpy as np
import pytest

from periodicflat import synth
from periodicflat.assembly import cut_laplacian, periodic_gradient
from periodicflat.cut import CutPath, find_cross_path
from periodicflat.errors import NumericalError, TopologyError
from periodicflat.metrics import angle_error, beltrami, fold_count
from periodicflat.spcf import (
    annulus_map_points,
    exp_to_annulus,
    fit_circle,
    flatten_polyannulus,
    flatten_strip,
)


def unroll_frustum_period(r_bottom, r_top, height):
    """Developable unrolling oracle: the frustum opens to an annular sector;
    the log map sends it to a rectangle whose aspect ratio fixes the strip
    period for unit height."""
    slant = float(np.hypot(height, r_bottom - r_top))
    sector_angle = 2 * np.pi * (r_bottom - r_top) / slant
    return sector_angle / np.log(r_bottom / r_top)


class TestStrip:
    def test_cylinder_period_exact(self, cylinder_mesh):
        strip, cut = flatten_strip(cylinder_mesh)
        assert abs(float(strip.t[0]) - 2 * np.pi) < 1e-6

    def test_cylinder_boundary_rows(self, cylinder_mesh):
        strip, cut = flatten_strip(cylinder_mesh)
        loops = cylinder_mesh.boundary_loops()
        inner, outer = loops[0], loops[1]
        y = strip.coords[:, 1]
        outer_rows = y[cut.primary[outer.vertices]]
        inner_rows = y[cut.primary[inner.vertices]]
        assert np.abs(outer_rows).max() == 0.0
        assert np.abs(inner_rows - 1.0).max() == 0.0

    def test_cylinder_strip_conformal(self, cylinder_mesh):
        strip, cut = flatten_strip(cylinder_mesh)
        mu, flagged = beltrami(cut.mesh, strip.coords)
        assert not flagged.any()
        assert float(np.mean(mu)) <= 1e-8

    def test_frustum_matches_unrolling_oracle(self):
        mesh = synth.cone_frustum(1.0, 0.5, 1.0, 64, 32)
        strip, _ = flatten_strip(mesh)
        expected = unroll_frustum_period(1.0, 0.5, 1.0)
        assert abs(float(strip.t[0]) - expected) / expected < 0.01

    def test_genus1_rejected(self, grid_torus8):
        with pytest.raises(TopologyError):
            flatten_strip(grid_torus8)

    def test_interior_balance(self, cylinder_chord):
        strip, cut = flatten_strip(cylinder_chord)
        grad = periodic_gradient(strip, cut_laplacian(cut), cut)
        part_free = np.ones(cut.n_original, dtype=bool)
        # pinned rows: origin O1 plus the y-pins carry reaction forces,
        # but the x-column of every non-O1 row must balance
        o1 = int(cut.origin[cut.corners["O1"]])
        part_free[o1] = False
        assert np.abs(grad[:-1][part_free, 0]).max() < 1e-8

    def test_cut_path_independence(self, cylinder_mesh):
        loops = cylinder_mesh.boundary_loops()
        inner, outer = loops[0], loops[1]
        cross_a = find_cross_path(cylinder_mesh, outer, inner)
        cross_b = find_cross_path(
            cylinder_mesh, outer, inner, avoid=cross_a.vertices[1:-1]
        )
        assert set(map(int, cross_a.vertices)) != set(map(int, cross_b.vertices))
        strip_a, cut_a = flatten_strip(cylinder_mesh, cross=cross_a)
        strip_b, cut_b = flatten_strip(cylinder_mesh, cross=cross_b)
        ang_a, _ = angle_error(cut_a.mesh, strip_a.coords)
        ang_b, _ = angle_error(cut_b.mesh, strip_b.coords)
        assert np.abs(np.sort(ang_a, axis=1) - np.sort(ang_b, axis=1)).max() < 1e-8


class TestAnnulusMap:
    def test_origin_maps_to_unit(self):
        out = annulus_map_points(np.array([[0.0, 0.0]]), 5.0)
        assert np.allclose(out, [[1.0, 0.0]], atol=1e-15)

    def test_half_period_maps_to_minus_one(self):
        period = 3.7
        out = annulus_map_points(np.array([[period / 2, 0.0]]), period)
        assert np.allclose(out, [[-1.0, 0.0]], atol=1e-12)

    def test_top_row_radius(self):
        period = 4.2
        out = annulus_map_points(np.array([[1.3, 1.0]]), period)
        assert abs(np.linalg.norm(out[0]) - np.exp(-2 * np.pi / period)) < 1e-15

    def test_nonpositive_period_rejected(self):
        with pytest.raises(NumericalError):
            annulus_map_points(np.zeros((1, 2)), 0.0)

    def test_seam_merge(self, cylinder_chord):
        strip, cut = flatten_strip(cylinder_chord)
        ann = exp_to_annulus(strip, cut)
        assert ann.coords.shape == (cylinder_chord.n_vertices, 2)
        # periodicity: minus copies land exactly on their plus partner
        rec = cut.seams[0]
        plus_pts = annulus_map_points(strip.coords[rec.plus], float(strip.t[0]))
        minus_pts = annulus_map_points(strip.coords[rec.minus], float(strip.t[0]))
        assert np.abs(plus_pts - minus_pts).max() < 1e-9

    def test_inner_radius_value(self, cylinder_mesh):
        strip, cut = flatten_strip(cylinder_mesh)
        ann = exp_to_annulus(strip, cut)
        assert abs(ann.inner_radius - np.exp(-1.0)) < 1e-6


class TestPolyAnnulus:
    def test_two_boundary_matches_strip_annulus(self, annulus_grid):
        res = flatten_polyannulus(annulus_grid)
        strip, cut = flatten_strip(annulus_grid)
        ann = exp_to_annulus(strip, cut)
        loops = annulus_grid.boundary_loops()
        inner = loops[0]
        fitted_r = res.circles[0][1]
        direct_r = np.linalg.norm(ann.coords[inner.vertices], axis=1)
        assert abs(fitted_r - direct_r.mean()) <= direct_r.std() + 1e-9

    def test_boundaries_exactly_circular(self, holed_disk2):
        res = flatten_polyannulus(holed_disk2)
        for center, radius, loop in res.circles:
            d = np.linalg.norm(res.coords[loop.vertices] - center, axis=1)
            assert np.abs(d - radius).max() / radius <= 1e-9

    def test_outer_is_unit_circle(self, holed_disk2):
        res = flatten_polyannulus(holed_disk2)
        center, radius, outer = res.circles[-1]
        assert np.allclose(center, 0.0) and radius == 1.0
        d = np.linalg.norm(res.coords[outer.vertices], axis=1)
        assert np.abs(d - 1.0).max() < 1e-12

    def test_final_solve_keeps_boundaries(self, holed_disk2):
        res = flatten_polyannulus(holed_disk2)
        # recompute the harmonic interior from the reported boundary rows;
        # the stored interior must match it exactly
        from periodicflat.assembly import SymmetricFactor, cut_laplacian as lap_of

        lap = lap_of(holed_disk2).to_csr()
        boundary = np.zeros(holed_disk2.n_vertices, dtype=bool)
        for lp in holed_disk2.boundary_loops():
            boundary[lp.vertices] = True
        free = np.nonzero(~boundary)[0]
        factor = SymmetricFactor(lap[free][:, free])
        rhs = -(lap[free][:, boundary] @ res.coords[boundary])
        assert np.allclose(res.coords[free, 0], factor.solve(rhs[:, 0]), atol=1e-12)

    def test_fold_free_on_grid_fixture(self, holed_disk2):
        res = flatten_polyannulus(holed_disk2)
        assert fold_count(res.coords, holed_disk2.faces) == 0

    def test_simply_connected_rejected(self):
        disk = synth.holed_disk(6)
        with pytest.raises(TopologyError):
            flatten_polyannulus(disk)


def test_fit_circle_exact():
    ang = np.linspace(0, 2 * np.pi, 17)[:-1]
    pts = np.column_stack([3 + 2 * np.cos(ang), -1 + 2 * np.sin(ang)])
    center, radius = fit_circle(pts)
    assert np.allclose(center, [3, -1], atol=1e-12)
    assert abs(radius - 2) < 1e-12
