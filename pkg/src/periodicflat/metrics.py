"""Conformal distortion measurement and report aggregation.

Angle error compares each corner's source angle (active metric) with its
image angle in the plane, in degrees. The Beltrami coefficient of a face is
the ratio of anti-holomorphic to holomorphic Wirtinger derivatives of its
affine map, computed in an edge-aligned isometric chart; its modulus is 0
exactly for similarities and reaches 1 at orientation collapse. Fold counts
and the energy value complete the report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MeshError

__all__ = [
    "angle_error",
    "beltrami",
    "fold_count",
    "signed_areas",
    "aggregate",
    "DistortionReport",
]


def _image_points(mesh, layout_coords):
    coords = np.asarray(layout_coords, dtype=np.float64)
    if len(coords) != mesh.n_vertices:
        raise MeshError("layout does not cover every vertex of this mesh")
    return coords[mesh.faces]


def angle_error(mesh, layout_coords):
    """Per-corner |source angle - image angle| in degrees.

    Returns (delta, degenerate) where ``delta`` is (m, 3) with NaN at
    corners of degenerate image triangles and ``degenerate`` flags those
    faces; they are excluded from statistics but counted.
    """
    src = np.degrees(mesh.corner_angles())
    q = _image_points(mesh, layout_coords)

    lengths = np.empty((len(q), 3))
    for k in range(3):
        d = q[:, (k + 1) % 3] - q[:, (k + 2) % 3]
        lengths[:, k] = np.hypot(d[:, 0], d[:, 1])
    degenerate = np.zeros(len(q), dtype=bool)
    img = np.empty_like(lengths)
    with np.errstate(divide="ignore", invalid="ignore"):
        for k in range(3):
            a, b, c = lengths[:, k], lengths[:, (k + 1) % 3], lengths[:, (k + 2) % 3]
            cos = (b * b + c * c - a * a) / (2 * b * c)
            bad = ~np.isfinite(cos) | (np.abs(cos) >= 1.0)
            degenerate |= bad
            img[:, k] = np.degrees(np.arccos(np.clip(cos, -1.0, 1.0)))
    delta = np.abs(src - img)
    delta[degenerate] = np.nan
    return delta, degenerate


def _source_charts(mesh):
    """Edge-aligned isometric chart of each face: returns (c, x2, y2) where
    corner 0 sits at the origin, corner 1 at (c, 0) and corner 2 at (x2, y2)."""
    L = mesh.face_corner_lengths()
    a, b, c = L[:, 0], L[:, 1], L[:, 2]  # a=|v1 v2|, b=|v2 v0|, c=|v0 v1|
    x2 = (c * c + b * b - a * a) / (2 * c)
    y2 = np.sqrt(np.maximum(b * b - x2 * x2, 0.0))
    return c, x2, y2


def beltrami(mesh, layout_coords):
    """Per-face |mu| plus a flag for degenerate conformal parts.

    Orientation-reversing faces report |mu| > 1; a vanishing holomorphic
    derivative yields an infinite sentinel and the face is flagged.
    """
    q = _image_points(mesh, layout_coords)
    c, x2, y2 = _source_charts(mesh)

    d1 = q[:, 1] - q[:, 0]
    d2 = q[:, 2] - q[:, 0]
    # Jacobian J = [d1 d2] P^{-1} with P = [[c, x2], [0, y2]]
    inv = 1.0 / (c * y2)
    j00 = d1[:, 0] * (y2 * inv)
    j10 = d1[:, 1] * (y2 * inv)
    j01 = (d2[:, 0] * c - d1[:, 0] * x2) * inv
    j11 = (d2[:, 1] * c - d1[:, 1] * x2) * inv

    fz = 0.5 * np.sqrt((j00 + j11) ** 2 + (j10 - j01) ** 2)
    fzb = 0.5 * np.sqrt((j00 - j11) ** 2 + (j10 + j01) ** 2)
    # f_z = 0 up to rounding: the conformal part is degenerate
    flagged = fz <= 1e-12 * fzb
    with np.errstate(divide="ignore", invalid="ignore"):
        mu = np.where(flagged, np.inf, fzb / np.where(flagged, 1.0, fz))
    return mu, flagged


def signed_areas(coords, faces):
    """Signed areas of 2D triangles."""
    p = np.asarray(coords, dtype=np.float64)[faces]
    d1 = p[:, 1] - p[:, 0]
    d2 = p[:, 2] - p[:, 0]
    return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])


def fold_count(coords, faces):
    """Number of faces oriented against the layout's dominant orientation.

    Zero-area faces count as folds.
    """
    area = signed_areas(coords, faces)
    total = area.sum()
    sign = 1.0 if total >= 0 else -1.0
    return int(np.count_nonzero(area * sign <= 0))


@dataclass
class DistortionReport:
    """Aggregate distortion statistics of one flattening run.

    Angle errors are degrees; ``mu100_*`` scale |mu| by 100. Standard
    deviations use the population convention (divisor n).
    """

    delta_mean: float
    delta_std: float
    mu100_mean: float
    mu100_std: float
    fold_count: int
    energy: float
    n_faces: int
    n_vertices: int
    timings: dict = field(default_factory=dict)
    degenerate_corners: int = 0
    flagged_faces: int = 0
    extra: dict = field(default_factory=dict)

    def to_json_dict(self):
        out = {
            "delta_mean": self.delta_mean,
            "delta_std": self.delta_std,
            "mu100_mean": self.mu100_mean,
            "mu100_std": self.mu100_std,
            "fold_count": self.fold_count,
            "energy": self.energy,
            "n_faces": self.n_faces,
            "n_vertices": self.n_vertices,
            "timings": self.timings,
            "degenerate_corners": self.degenerate_corners,
            "flagged_faces": self.flagged_faces,
            "angle_units": "degrees",
            "std_convention": "population",
        }
        out.update(self.extra)
        return out


def aggregate(delta, mu, folds, energy, timings=None, n_faces=None, n_vertices=None):
    """Population mean/std aggregation into a DistortionReport."""
    delta = np.asarray(delta, dtype=np.float64).ravel()
    mu = np.asarray(mu, dtype=np.float64)
    if delta.size == 0 or mu.size == 0:
        raise MeshError("cannot aggregate empty distortion data")
    finite_mu = mu[np.isfinite(mu)]
    flagged = int(np.count_nonzero(~np.isfinite(mu)))
    degenerate = int(np.count_nonzero(np.isnan(delta)))
    dvals = delta[~np.isnan(delta)]
    return DistortionReport(
        delta_mean=float(np.mean(dvals)) if dvals.size else math.nan,
        delta_std=float(np.std(dvals)) if dvals.size else math.nan,
        mu100_mean=float(100.0 * np.mean(finite_mu)) if finite_mu.size else math.nan,
        mu100_std=float(100.0 * np.std(finite_mu)) if finite_mu.size else math.nan,
        fold_count=int(folds),
        energy=float(energy),
        n_faces=int(n_faces if n_faces is not None else len(mu)),
        n_vertices=int(n_vertices if n_vertices is not None else 0),
        timings=dict(timings or {}),
        degenerate_corners=degenerate,
        flagged_faces=flagged,
    )
