"""Command-line front end: flatten tori, annuli and poly-annuli.

Subcommands pick the pipeline; the topology of the input is checked against
the requested mode rather than assumed. Every run writes a JSON report with
per-stage wall times; exit codes are 0 on success, 2 on a topology
mismatch, 3 on numerical failure and 1 for anything else.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .assembly import conformal_energy, cut_laplacian
from .cut import paths_from_json
from .dpcf import flatten_genus1, lattice_relation, per_face_layout
from .errors import MeshError, NumericalError, TopologyError
from .idt import make_intrinsic_delaunay
from .mesh import load_length_table, load_obj, topology, write_obj_with_uv
from .spcf import exp_to_annulus, flatten_polyannulus, flatten_strip

__all__ = ["RunConfig", "run", "main"]

SCHEMA_VERSION = 1


@dataclass
class RunConfig:
    input_path: str
    mode: str  # "torus" | "annulus" | "polyannulus"
    idt: bool = False
    tol: float = 1e-10
    loops_path: str = None
    metric_path: str = None
    out_path: str = None
    report_path: str = None
    compare: bool = False
    uv_faces: str = "original"  # "original" | "idt"
    flip_log_path: str = None
    extra: dict = field(default_factory=dict)


class _Stopwatch:
    def __init__(self):
        self.times = {}

    def stage(self, name):
        return _Stage(self, name)


class _Stage:
    def __init__(self, watch, name):
        self.watch = watch
        self.name = name

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.watch.times[self.name] = self.watch.times.get(self.name, 0.0) + (
            time.perf_counter() - self.t0
        )
        return False


def _expected_topology(mode, g, b):
    if mode == "torus":
        return g == 1 and b == 0
    if mode == "annulus":
        return g == 0 and b == 2
    if mode == "polyannulus":
        return g == 0 and b >= 2
    raise ValueError(f"unknown mode {mode!r}")


def _angle_table(mesh, coords):
    delta, degenerate = metrics.angle_error(mesh, coords)
    mu, flagged = metrics.beltrami(mesh, coords)
    return delta, mu, degenerate, flagged


def _run_torus(mesh, config, watch, report):
    paths = None
    if config.loops_path:
        with open(config.loops_path, "rb") as fh:
            paths = paths_from_json(fh.read())

    work = mesh
    if config.idt:
        with watch.stage("idt"):
            intrinsic = make_intrinsic_delaunay(mesh)
            work = intrinsic.to_surface_mesh()
            report["idt_flips"] = intrinsic.n_flips
            if config.flip_log_path:
                with open(config.flip_log_path, "w") as fh:
                    fh.write(intrinsic.flip_log_json())

    with watch.stage("cut"):
        from .cut import find_cut_system_genus1

        if paths is None:
            paths = find_cut_system_genus1(work)
    with watch.stage("solve"):
        layout, cut = flatten_genus1(work, paths=paths, tol=config.tol)
    with watch.stage("metrics"):
        lap = cut_laplacian(cut)
        e_c, e_d, area = conformal_energy(layout, lap, cut)
        delta, mu, degenerate, flagged = _angle_table(cut.mesh, layout.coords)
        folds = metrics.fold_count(layout.coords, cut.mesh.faces)
        rep = metrics.aggregate(
            delta, mu, folds, e_c, timings=watch.times,
            n_faces=mesh.n_faces, n_vertices=mesh.n_vertices,
        )
        pts = per_face_layout(layout, cut, mesh.faces)
        flat = pts.reshape(-1, 2)
        tri = np.arange(len(flat)).reshape(-1, 3)
        folds_original = metrics.fold_count(flat, tri)

    report.update(rep.to_json_dict())
    report["h"] = [float(x) for x in layout.h]
    report["t"] = [float(x) for x in layout.t]
    report["energy_dirichlet"] = e_d
    report["lattice_area"] = area
    report["fold_count_original"] = folds_original

    if config.compare:
        if config.loops_path is None:
            raise MeshError("--compare needs a loops override to compare against")
        with watch.stage("compare"):
            auto_layout, auto_cut = flatten_genus1(work, tol=config.tol)
            d_ref, _, _, _ = _angle_table(cut.mesh, layout.coords)
            d_new, _, _, _ = _angle_table(auto_cut.mesh, auto_layout.coords)
            angle_diff = float(
                np.nanmax(np.abs(np.sort(d_ref, axis=1) - np.sort(d_new, axis=1)))
            )
            amat, gmat, resid = lattice_relation(
                (layout.h, layout.t), (auto_layout.h, auto_layout.t)
            )
            report["compare"] = {
                "max_angle_multiset_diff_deg": angle_diff,
                "unimodular": amat.tolist(),
                "similarity": gmat.tolist(),
                "relation_residual": resid,
                "pass": bool(angle_diff <= 1e-6 and resid <= 1e-6),
            }

    if config.out_path:
        with watch.stage("write"):
            if config.idt and config.uv_faces == "original":
                # layout lives on flipped connectivity; rebuild per-corner
                # UVs over the input faces (may contain folds)
                data = _obj_per_corner_uv(mesh, per_face_layout(layout, cut, mesh.faces))
            else:
                data = write_obj_with_uv(mesh, layout.coords, cut)
            with open(config.out_path, "wb") as fh:
                fh.write(data)
    return report


def _obj_per_corner_uv(mesh, corner_uv):
    """OBJ with one vt per face corner (deduplicated exact repeats)."""
    from .mesh import _fmt

    out = []
    for v in mesh.vertices:
        out.append(f"v {_fmt(v[0])} {_fmt(v[1])} {_fmt(v[2])}")
    seen = {}
    vt_of = np.empty(corner_uv.shape[:2], dtype=np.int64)
    for fi in range(corner_uv.shape[0]):
        for k in range(3):
            key = (float(corner_uv[fi, k, 0]), float(corner_uv[fi, k, 1]))
            if key not in seen:
                seen[key] = len(seen)
                out.append(f"vt {_fmt(key[0])} {_fmt(key[1])}")
            vt_of[fi, k] = seen[key]
    for fi, fc in enumerate(mesh.faces):
        parts = " ".join(f"{int(fc[k]) + 1}/{vt_of[fi, k] + 1}" for k in range(3))
        out.append("f " + parts)
    return ("\n".join(out) + "\n").encode("utf-8")


def _run_annulus(mesh, config, watch, report):
    work = mesh
    if config.idt:
        with watch.stage("idt"):
            intrinsic = make_intrinsic_delaunay(mesh)
            work = intrinsic.to_surface_mesh()
            report["idt_flips"] = intrinsic.n_flips
            if config.flip_log_path:
                with open(config.flip_log_path, "w") as fh:
                    fh.write(intrinsic.flip_log_json())

    cross = None
    if config.loops_path:
        with open(config.loops_path, "rb") as fh:
            (cross,) = paths_from_json(fh.read())
    with watch.stage("solve"):
        strip, cut = flatten_strip(work, cross=cross, tol=config.tol)
        annulus = exp_to_annulus(strip, cut)
    with watch.stage("metrics"):
        lap = cut_laplacian(cut)
        e_c, e_d, area = conformal_energy(strip, lap, cut)
        delta, mu, degenerate, flagged = _angle_table(work, annulus.coords)
        folds = metrics.fold_count(annulus.coords, work.faces)
        rep = metrics.aggregate(
            delta, mu, folds, e_c, timings=watch.times,
            n_faces=mesh.n_faces, n_vertices=mesh.n_vertices,
        )
        d_strip, mu_strip, _, _ = _angle_table(cut.mesh, strip.coords)

    report.update(rep.to_json_dict())
    report["t"] = [float(x) for x in strip.t]
    report["t1"] = float(strip.t[0])
    report["inner_radius"] = annulus.inner_radius
    report["strip_delta_mean"] = float(np.nanmean(d_strip))
    report["strip_mu100_mean"] = float(100 * np.nanmean(mu_strip[np.isfinite(mu_strip)]))
    report["fold_count_strip"] = metrics.fold_count(strip.coords, cut.mesh.faces)

    if config.out_path:
        with watch.stage("write"):
            data = write_obj_with_uv(mesh, annulus.coords, None)
            with open(config.out_path, "wb") as fh:
                fh.write(data)
    return report


def _run_polyannulus(mesh, config, watch, report):
    with watch.stage("solve"):
        result = flatten_polyannulus(mesh, idt=config.idt, tol=config.tol)
    with watch.stage("metrics"):
        delta, mu, degenerate, flagged = _angle_table(mesh, result.coords)
        folds = metrics.fold_count(result.coords, mesh.faces)
        rep = metrics.aggregate(
            delta, mu, folds, float("nan"), timings=watch.times,
            n_faces=mesh.n_faces, n_vertices=mesh.n_vertices,
        )
    report.update(rep.to_json_dict())
    report["energy"] = None  # composite map; per-stage energies not comparable
    report["circles"] = [
        {"center": [float(c[0]), float(c[1])], "radius": float(r)}
        for c, r, _ in result.circles
    ]
    report["iterations"] = result.iterations
    if config.out_path:
        with watch.stage("write"):
            data = write_obj_with_uv(mesh, result.coords, None)
            with open(config.out_path, "wb") as fh:
                fh.write(data)
    return report


def run(config):
    """Execute one flattening pipeline; returns the process exit code."""
    watch = _Stopwatch()
    report = {
        "schema": SCHEMA_VERSION,
        "mode": config.mode,
        "input": os.path.basename(config.input_path),
        "idt": bool(config.idt),
        "tol": config.tol,
    }
    try:
        with watch.stage("load"):
            with open(config.input_path, "rb") as fh:
                mesh = load_obj(fh.read())
            if config.metric_path:
                with open(config.metric_path, "rb") as fh:
                    mesh = mesh.with_lengths(load_length_table(fh.read(), mesh))
        with watch.stage("topology"):
            chi, g, b = topology(mesh)
            report["euler_characteristic"] = chi
            report["genus"] = g
            report["boundary_count"] = b
            if not _expected_topology(config.mode, g, b):
                raise TopologyError(
                    f"mode {config.mode} does not match genus={g}, boundaries={b}"
                )
        runner = {
            "torus": _run_torus,
            "annulus": _run_annulus,
            "polyannulus": _run_polyannulus,
        }[config.mode]
        runner(mesh, config, watch, report)
    except TopologyError as exc:
        print(f"topology error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except (MeshError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    finally:
        report["timings"] = {k: float(v) for k, v in watch.times.items()}
        if config.report_path:
            with open(config.report_path, "w") as fh:
                json.dump(report, fh, sort_keys=True, indent=1)
                fh.write("\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="flatten",
        description="Periodic conformal flattening of triangle meshes",
    )
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode, blurb in (
        ("torus", "genus-one surface to a doubly periodic fundamental domain"),
        ("annulus", "doubly connected surface to an annulus"),
        ("polyannulus", "multiply connected surface to a disk with circular holes"),
    ):
        p = sub.add_parser(mode, help=blurb)
        p.add_argument("input", help="input OBJ file")
        p.add_argument("--out", help="UV OBJ output path")
        p.add_argument("--report", help="JSON report output path")
        p.add_argument("--idt", action="store_true", help="intrinsic Delaunay preprocess")
        p.add_argument("--tol", type=float, default=1e-10, help="solver tolerance")
        p.add_argument("--loops", help="JSON cut-path override")
        p.add_argument("--metric", help="JSON intrinsic edge-length table")
        p.add_argument("--flip-log", help="write the IDT flip log to this JSON file")
        p.add_argument(
            "--uv-faces",
            choices=("original", "idt"),
            default="original",
            help="connectivity for UV export after --idt",
        )
        if mode == "torus":
            p.add_argument(
                "--compare",
                action="store_true",
                help="also run with automatic loops and check both agree",
            )
    return parser


def main(argv=None):
    threads = os.environ.get("FLATTEN_THREADS")
    if threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ.setdefault(var, threads)
    args = build_parser().parse_args(argv)
    config = RunConfig(
        input_path=args.input,
        mode=args.mode,
        idt=args.idt,
        tol=args.tol,
        loops_path=args.loops,
        metric_path=args.metric,
        out_path=args.out,
        report_path=args.report,
        compare=getattr(args, "compare", False),
        uv_faces=args.uv_faces,
        flip_log_path=args.flip_log,
    )
    code = run(config)
    if argv is None:
        sys.exit(code)
    return code


if __name__ == "__main__":
    main()
