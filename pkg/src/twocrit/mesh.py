"""Triangulation of the meridian section of a half-ball.

The three-dimensional half-ball ``{|x| <= R, x_3 >= 0}`` is axisymmetric about
the ``x_3`` axis.  Its meridian section is the quarter disc
``{rho >= 0, z >= 0, rho^2 + z^2 <= R^2}``.  The segment ``z = 0`` is the flat
face, the arc is the curved face, and the axis ``rho = 0`` is not a boundary
of the physical domain.

Vertices are laid out on concentric rings around the origin (the bubble
centre) and consecutive rings are zipped together.  Radial spacing can be
graded towards the origin with ``dr(r) = min(h, h_min + grading * r)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import MeshGenerationFailure

__all__ = ["AxisymMesh", "DiscreteField", "build_mesh", "MESH_FORMAT_VERSION"]

MESH_FORMAT_VERSION = 1


@dataclass(eq=False)
class AxisymMesh:
    vertices: np.ndarray
    triangles: np.ndarray
    flat_edges: np.ndarray
    curved_edges: np.ndarray
    R_dom: float
    quad_order: int = 4
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def boundary_edges(self):
        return {"flat": self.flat_edges, "curved": self.curved_edges}

    def signed_areas(self):
        v = self.vertices[self.triangles]
        d1 = v[:, 1] - v[:, 0]
        d2 = v[:, 2] - v[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edge_lengths(self):
        t = self.triangles
        v = self.vertices
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.linalg.norm(v[e[:, 0]] - v[e[:, 1]], axis=1)

    def max_edge(self):
        return float(self.edge_lengths().max())

    def volume(self):
        """Volume of the solid of revolution, exact for the polygonal section."""
        v = self.vertices[self.triangles]
        rho_c = v[:, :, 0].mean(axis=1)
        return float(np.sum(2.0 * math.pi * rho_c * self.signed_areas()))

    def check(self):
        """Raise :class:`MeshGenerationFailure` if an invariant is violated."""
        if np.any(self.signed_areas() <= 0):
            raise MeshGenerationFailure("non-positive triangle area")
        if np.any(self.vertices[self.flat_edges.ravel(), 1] != 0.0):
            raise MeshGenerationFailure("flat boundary vertex off z=0")
        # Conformity: every interior edge is shared by exactly two triangles.
        t = self.triangles
        e = np.sort(np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]]), axis=1)
        _, counts = np.unique(e, axis=0, return_counts=True)
        if np.any(counts > 2):
            raise MeshGenerationFailure("edge shared by more than two triangles")
        n_bnd = int(np.sum(counts == 1))
        # Boundary of the section = flat + curved + axis edges.
        axis = self.vertices[:, 0] == 0.0
        n_axis = int(np.sum(axis)) - 1
        if n_bnd != len(self.flat_edges) + len(self.curved_edges) + n_axis:
            raise MeshGenerationFailure("boundary edge count mismatch: mesh not conforming")

    def to_dict(self, values=None):
        d = {
            "version": MESH_FORMAT_VERSION,
            "R_dom": self.R_dom,
            "vertices": self.vertices.tolist(),
            "triangles": self.triangles.tolist(),
            "boundary_edges": {"flat": self.flat_edges.tolist(), "curved": self.curved_edges.tolist()},
        }
        if values is not None:
            d["values"] = np.asarray(values, dtype=float).tolist()
        return d

    def to_json(self, values=None):
        return json.dumps(self.to_dict(values), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        if d.get("version") != MESH_FORMAT_VERSION:
            raise ValueError(f"unsupported mesh format version {d.get('version')!r}")
        be = d["boundary_edges"]
        return cls(np.asarray(d["vertices"], dtype=float), np.asarray(d["triangles"], dtype=np.int64),
                   np.asarray(be["flat"], dtype=np.int64).reshape(-1, 2),
                   np.asarray(be["curved"], dtype=np.int64).reshape(-1, 2), float(d["R_dom"]))

    @classmethod
    def from_json(cls, s):
        return cls.from_dict(json.loads(s))


@dataclass(eq=False)
class DiscreteField:
    """Nodal values of a piecewise-linear field on ``mesh``."""

    mesh: AxisymMesh
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (self.mesh.n_vertices,):
            raise ValueError("one value per vertex required")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("field values must be finite")

    @classmethod
    def interpolate(cls, mesh, func):
        """Nodal interpolant of ``func(rho, z)``."""
        v = mesh.vertices
        return cls(mesh, np.broadcast_to(func(v[:, 0], v[:, 1]), (len(v),)).astype(float))

    def to_json(self):
        return self.mesh.to_json(self.values)

    @classmethod
    def from_json(cls, s):
        d = json.loads(s)
        return cls(AxisymMesh.from_dict(d), np.asarray(d["values"], dtype=float))


def _ring_radii(R, h, h_min, grading):
    radii = [0.0]
    h_rad = h / math.sqrt(2.0)
    while radii[-1] < R:
        r = radii[-1]
        dr = h_rad if h_min is None else min(h_rad, h_min + grading * r)
        radii.append(r + dr)
    # Stretch so the last ring lands exactly on R.
    radii = np.array(radii)
    if radii[-1] - R > 0.5 * (radii[-1] - radii[-2]) and len(radii) > 2:
        radii = radii[:-1]
    return radii * (R / radii[-1])


def build_mesh(R_dom: float, h_target: float, h_min: float | None = None, grading: float = 0.0) -> AxisymMesh:
    """Ring mesh of the quarter disc of radius ``R_dom`` with maximum edge at most ``h_target``.

    ``h_min`` and ``grading`` switch on refinement towards the origin: the
    local size is ``min(h_target, h_min + grading * r)``.
    """
    if not (R_dom > 0 and h_target > 0):
        raise MeshGenerationFailure("R_dom and h_target must be positive")
    if h_min is not None and not h_min > 0:
        raise MeshGenerationFailure("h_min must be positive")
    for shrink in (1.0, 0.9, 0.8, 0.7, 0.6):
        mesh = _build(R_dom, h_target * shrink, h_min, grading)
        if mesh.max_edge() <= h_target * (1 + 1e-12):
            mesh.check()
            return mesh
    raise MeshGenerationFailure(f"could not meet edge bound {h_target}")


def _build(R, h, h_min, grading):
    radii = _ring_radii(R, h, h_min, grading)
    h_rad = h / math.sqrt(2.0)
    verts = [(0.0, 0.0)]
    rings = [(np.array([0]), np.array([0.0]))]
    half_pi = 0.5 * math.pi
    for i, r in enumerate(radii[1:], start=1):
        dr = radii[i] - radii[i - 1]
        size = h_rad if h_min is None else min(h_rad, max(dr, h_min + grading * r))
        n = max(1, math.ceil(half_pi * r / size))
        n = max(n, len(rings[-1][0]) - 1)   # never coarsen outward
        theta = np.linspace(0.0, half_pi, n + 1)
        idx = np.arange(len(verts), len(verts) + n + 1)
        for j, th in enumerate(theta):
            rho = r * math.cos(th)
            z = r * math.sin(th)
            if j == 0:
                z = 0.0
            if j == n:
                rho = 0.0
            verts.append((rho, z))
        rings.append((idx, theta))

    tris = []
    for (ia, ta), (ib, tb) in zip(rings[:-1], rings[1:]):
        i = j = 0
        na, nb = len(ia) - 1, len(ib) - 1
        while i < na or j < nb:
            if i < na and (j >= nb or ta[i + 1] <= tb[j + 1]):
                tris.append((ia[i], ib[j], ia[i + 1]))
                i += 1
            else:
                tris.append((ia[i], ib[j], ib[j + 1]))
                j += 1
    V = np.array(verts, dtype=float)
    T = np.array(tris, dtype=np.int64)
    # Orient counter-clockwise and drop degenerate triangles at the centre.
    v = V[T]
    area = 0.5 * ((v[:, 1, 0] - v[:, 0, 0]) * (v[:, 2, 1] - v[:, 0, 1])
                  - (v[:, 1, 1] - v[:, 0, 1]) * (v[:, 2, 0] - v[:, 0, 0]))
    flip = area < 0
    T[flip] = T[flip][:, [0, 2, 1]]
    T = T[np.abs(area) > 0]

    flat = np.array([(rings[k][0][0], rings[k + 1][0][0]) for k in range(len(rings) - 1)], dtype=np.int64)
    last = rings[-1][0]
    curved = np.stack([last[:-1], last[1:]], axis=1)
    return AxisymMesh(V, T, flat, curved, float(R))
