import json

import numpy as np
import pytest

from periodicflat import synth
from periodicflat.cut import CutPath, cut_along
from periodicflat.errors import MeshError, TopologyError
from periodicflat.mesh import (
    SurfaceMesh,
    load_length_table,
    load_obj,
    topology,
    write_obj,
    write_obj_with_uv,
)

TRIANGLE_OBJ = """
v 0 0 0
v 1 0 0
v 0 1 0
f 1 2 3
"""


def grid_torus_obj(nu, nv):
    mesh = synth.torus_of_revolution(2.0, 1.0, nu, nv)
    return write_obj(mesh), mesh


def test_load_minimal_triangle():
    mesh = load_obj(TRIANGLE_OBJ)
    assert mesh.n_vertices == 3
    assert mesh.n_faces == 1


def test_load_grid_torus_euler():
    data, _ = grid_torus_obj(8, 8)
    mesh = load_obj(data)
    assert (mesh.n_vertices, mesh.n_faces, mesh.n_edges) == (64, 128, 192)
    assert mesh.euler_characteristic() == 0


def test_load_out_of_range_index():
    with pytest.raises(MeshError):
        load_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n")


def test_load_quad_fan_triangulated():
    mesh = load_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n")
    assert mesh.n_faces == 2


def test_load_rejects_nonmanifold():
    bad = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nv 0 0 -1\nf 1 2 3\nf 1 2 4\nf 1 2 5\n"
    with pytest.raises(MeshError, match="non-manifold"):
        load_obj(bad)


def test_load_rejects_nonorientable_gluing():
    bad = "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1 2 3\nf 1 2 4\n"
    with pytest.raises(MeshError, match="non-orientable"):
        load_obj(bad)


def test_load_rejects_zero_area_face():
    with pytest.raises(MeshError):
        load_obj("v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n")


def test_topology_tetrahedron(tetrahedron):
    assert topology(tetrahedron) == (2, 0, 0)


def test_topology_grid_torus(grid_torus8):
    assert topology(grid_torus8) == (0, 1, 0)


def test_topology_open_cylinder(cylinder_chord):
    assert topology(cylinder_chord) == (0, 0, 2)


def test_topology_disconnected_rejected():
    verts = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [5, 5, 5], [6, 5, 5], [5, 6, 5.0]])
    faces = np.array([[0, 1, 2], [3, 4, 5]])
    with pytest.raises(TopologyError):
        topology(SurfaceMesh(verts, faces))


def test_boundary_loops_closed_mesh_empty(grid_torus8):
    assert grid_torus8.boundary_loops() == []


def test_boundary_loops_annulus(annulus_grid):
    assert len(annulus_grid.boundary_loops()) == 2


def test_boundary_loops_disk():
    disk = synth.holed_disk(6)
    loops = disk.boundary_loops()
    assert len(loops) == 1
    boundary = {int(v) for v in loops[0].vertices}
    expected = {
        i for i, (x, y, _) in enumerate(disk.vertices)
        if min(x, y) == 0 or max(x, y) == 1
    }
    assert boundary == expected


def test_boundary_loops_longest_last(holed_disk2):
    loops = holed_disk2.boundary_loops()
    lengths = [lp.length for lp in loops]
    assert lengths == sorted(lengths)


def test_corner_angles_equilateral():
    mesh = SurfaceMesh(
        np.array([[0, 0, 0], [1, 0, 0], [0.5, np.sqrt(3) / 2, 0]]), np.array([[0, 1, 2]])
    )
    assert np.allclose(mesh.corner_angles(), np.pi / 3, atol=1e-12)


def test_corner_angles_right_isoceles():
    mesh = SurfaceMesh(
        np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0.0]]), np.array([[0, 1, 2]])
    )
    angles = np.sort(mesh.corner_angles()[0])
    assert np.allclose(angles, [np.pi / 4, np.pi / 4, np.pi / 2], atol=1e-12)


def test_corner_angles_triangle_inequality_violation():
    mesh = SurfaceMesh(
        np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0.0]]),
        np.array([[0, 1, 2]]),
        validate=False,
        face_lengths=np.array([[1.0, 1.0, 2.5]]),
    )
    with pytest.raises(MeshError):
        mesh.corner_angles()


def test_corner_angle_rows_sum_to_pi(revolution_torus):
    sums = revolution_torus.corner_angles().sum(axis=1)
    assert np.abs(sums - np.pi).max() < 1e-10


def test_intrinsic_mode_overrides_embedding():
    # planar right triangle forced equilateral through the length table
    mesh = SurfaceMesh(
        np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0.0]]), np.array([[0, 1, 2]])
    )
    table = json.dumps({"0,1": 1.0, "1,2": 1.0, "0,2": 1.0})
    intrinsic = mesh.with_lengths(load_length_table(table, mesh))
    assert np.allclose(intrinsic.corner_angles(), np.pi / 3, atol=1e-12)


def test_length_table_missing_edge():
    mesh = SurfaceMesh(
        np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0.0]]), np.array([[0, 1, 2]])
    )
    with pytest.raises(MeshError, match="misses"):
        load_length_table(json.dumps({"0,1": 1.0, "1,2": 1.0}), mesh)


def test_obj_roundtrip_bit_exact():
    rng = np.random.default_rng(7)
    mesh = synth.torus_of_revolution(2.0, 1.0, 6, 5)
    jittered = SurfaceMesh(
        mesh.vertices + rng.uniform(-1e-3, 1e-3, mesh.vertices.shape), mesh.faces
    )
    again = load_obj(write_obj(jittered))
    assert np.array_equal(again.vertices, jittered.vertices)
    assert np.array_equal(again.faces, jittered.faces)


def test_write_uv_disk_identity():
    disk = synth.holed_disk(4)
    uv = disk.vertices[:, :2]
    data = write_obj_with_uv(disk, uv, None).decode()
    assert data.count("\nvt ") + data.startswith("vt ") == disk.n_vertices


def test_write_uv_cut_torus_duplicates(grid_torus8):
    from periodicflat.dpcf import flatten_genus1

    layout, cut = flatten_genus1(grid_torus8)
    data = write_obj_with_uv(grid_torus8, layout.coords, cut).decode()
    n_vt = sum(1 for line in data.splitlines() if line.startswith("vt "))
    assert n_vt == cut.mesh.n_vertices
    assert n_vt > grid_torus8.n_vertices
    n_v = sum(1 for line in data.splitlines() if line.startswith("v "))
    assert n_v == grid_torus8.n_vertices


def test_write_uv_size_mismatch(grid_torus8):
    with pytest.raises(MeshError):
        write_obj_with_uv(grid_torus8, np.zeros((3, 2)), None)
