"""Ray fields emitted from polyhedral boundaries and the projective map phi.

A vector field on the boundary of a polyhedron with positive total flux
points strictly outward on a positive-area part of some face; the rays
leaving that part fill a three-dimensional set. ``phi(x, y, z) =
(x/z, y/z, 1/z)`` turns base points on the plane ``z = 0`` into ray
directions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, List, Sequence

import numpy as np

from .boxdim import Ray3
from .errors import ConstructionError, DomainError, FormError, ParseError

_PLANE_TOL = 1e-9


@dataclass(frozen=True)
class PolyFace:
    """Convex planar polygon with an outward unit normal."""

    vertices: np.ndarray
    outward_normal: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float).reshape(-1, 3)
        n = np.array(self.outward_normal, dtype=float).reshape(3)
        if len(v) < 3:
            raise ConstructionError("a face needs at least 3 vertices")
        norm = np.linalg.norm(n)
        if not np.isclose(norm, 1.0, atol=1e-9):
            if norm == 0:
                raise ConstructionError("face normal must be nonzero")
            n = n / norm
        area_vec = 0.5 * np.sum(np.cross(v, np.roll(v, -1, axis=0)), axis=0)
        area = float(np.linalg.norm(area_vec))
        if area < 1e-12:
            raise ConstructionError("degenerate face (area below 1e-12)")
        if np.max(np.abs((v - v[0]) @ n)) > _PLANE_TOL * max(1.0, np.max(np.abs(v))):
            raise ConstructionError("face vertices are not coplanar with the normal")
        v.setflags(write=False)
        n.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "outward_normal", n)
        object.__setattr__(self, "_area", area)

    @property
    def area(self) -> float:
        return self._area

    @property
    def centroid(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    def contains(self, pts, tol: float = _PLANE_TOL) -> np.ndarray:
        """Which points lie on the face's plane (inside the polygon not checked)."""
        pts = np.asarray(pts, dtype=float).reshape(-1, 3)
        return np.abs((pts - self.vertices[0]) @ self.outward_normal) <= tol

    def grid_points(self, n: int) -> np.ndarray:
        """Cell midpoints of an ``n x n`` grid on a parallelogram face.

        All cells have equal area, which the midpoint flux rule relies on.
        """
        v = self.vertices
        if len(v) != 4 or not np.allclose(v[0] + v[2], v[1] + v[3], atol=1e-12):
            raise ConstructionError("grid sampling needs a parallelogram face")
        u = (np.arange(n) + 0.5) / n
        a, b = np.meshgrid(u, u, indexing="ij")
        e1, e2 = v[1] - v[0], v[3] - v[0]
        return (v[0] + a.reshape(-1, 1) * e1 + b.reshape(-1, 1) * e2)


def unit_cube_faces() -> List[PolyFace]:
    """Faces of ``[0, 1]^3`` ordered -x, +x, -y, +y, -z, +z."""
    faces = []
    for axis in range(3):
        for side in (0.0, 1.0):
            i, j = [k for k in range(3) if k != axis]
            quad = []
            for a, b in ((0, 0), (1, 0), (1, 1), (0, 1)):
                p = [0.0, 0.0, 0.0]
                p[axis], p[i], p[j] = side, a, b
                quad.append(p)
            normal = [0.0, 0.0, 0.0]
            normal[axis] = 1.0 if side else -1.0
            faces.append(PolyFace(np.array(quad), np.array(normal)))
    return faces


@dataclass(frozen=True)
class FaceSamples:
    points: np.ndarray
    vectors: np.ndarray


class BoundaryField:
    """Vector field sampled on the faces of a polyhedron.

    ``samples[i]`` holds the points and field vectors on ``faces[i]``;
    each face's samples are taken to represent equal shares of its area.
    """

    def __init__(self, faces: Sequence[PolyFace], samples: Sequence[FaceSamples]):
        if len(faces) != len(samples):
            raise ConstructionError("one sample block per face is required")
        checked = []
        for i, (face, smp) in enumerate(zip(faces, samples)):
            pts = np.asarray(smp.points, dtype=float).reshape(-1, 3)
            vec = np.asarray(smp.vectors, dtype=float).reshape(-1, 3)
            if len(pts) != len(vec):
                raise ConstructionError(f"face {i}: points and vectors differ in count")
            if not np.all(face.contains(pts)):
                raise ConstructionError(f"face {i}: sample point off the face plane")
            if not np.all(np.isfinite(vec)):
                raise ConstructionError(f"face {i}: non-finite field value")
            checked.append(FaceSamples(pts, vec))
        self.faces = list(faces)
        self.samples = checked

    @classmethod
    def from_function(cls, faces: Sequence[PolyFace], v: Callable, n: int) -> "BoundaryField":
        """Sample ``v(points, face_index) -> vectors`` on ``n x n`` face grids."""
        samples = []
        for i, face in enumerate(faces):
            pts = face.grid_points(n)
            vec = np.asarray(v(pts, i), dtype=float)
            samples.append(FaceSamples(pts, np.broadcast_to(vec, pts.shape).copy()))
        return cls(faces, samples)


def total_flux(bf: BoundaryField) -> float:
    """Midpoint-rule surface integral of ``<v, n>`` over the boundary."""
    total = 0.0
    for face, smp in zip(bf.faces, bf.samples):
        if len(smp.points) == 0:
            raise DomainError("every face needs at least one sample")
        total += face.area / len(smp.points) * float(np.sum(smp.vectors @ face.outward_normal))
    return total


@dataclass(frozen=True)
class TransversalSubset:
    face_index: int
    points: np.ndarray
    vectors: np.ndarray


def transversal_face_subset(bf: BoundaryField, eps: float = 1e-6) -> List[TransversalSubset]:
    """Samples where the field points outward by more than ``eps``, grouped by face."""
    if not eps > 0:
        raise DomainError("eps must be positive")
    out = []
    for i, (face, smp) in enumerate(zip(bf.faces, bf.samples)):
        mask = smp.vectors @ face.outward_normal > eps
        if mask.any():
            out.append(TransversalSubset(i, smp.points[mask], smp.vectors[mask]))
    return out


def ray_family(subset: Sequence[TransversalSubset], t_max: float = 1.0) -> List[Ray3]:
    """One ray ``x + v(x) t``, ``t`` in ``[0, t_max]``, per retained sample.

    Zero vectors cannot be turned into rays and are dropped.
    """
    if not t_max > 0:
        raise DomainError("t_max must be positive")
    rays = []
    for part in subset:
        for p, v in zip(part.points, part.vectors):
            if not np.any(v):
                continue
            rays.append(Ray3(tuple(p), tuple(v), (0.0, t_max)))
    return rays


def ray_segments(subset: Sequence[TransversalSubset], t_max: float = 1.0):
    """Array form of :func:`ray_family`: ``(starts, ends)`` of shape ``(n, 3)``."""
    if not t_max > 0:
        raise DomainError("t_max must be positive")
    if not subset:
        return np.empty((0, 3)), np.empty((0, 3))
    p = np.concatenate([s.points for s in subset])
    v = np.concatenate([s.vectors for s in subset])
    keep = np.any(v != 0, axis=1)
    return p[keep], p[keep] + t_max * v[keep]


def projective_phi(x, y, z):
    """``(x/z, y/z, 1/z)``; an involution on ``z != 0``."""
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) <= 1e-300):
        raise DomainError("projective_phi is undefined at z = 0")
    out = (np.asarray(x, float) / z, np.asarray(y, float) / z, 1.0 / z)
    if z.ndim == 0:
        return tuple(float(v) for v in out)
    return out


def ray_phi_image(origin, direction) -> "OpenRay":
    """Image under ``phi`` of the ray ``{(x + f t, y + g t, t) : t > 0}``.

    The ray must start on ``z = 0`` with unit ``z``-speed, i.e.
    ``origin = (x, y, 0)`` and ``direction = (f, g, 1)``. The image is the
    open ray from ``(f, g, 0)`` along the unit vector ``(x, y, 1)/rho``,
    ``rho = sqrt(x^2 + y^2 + 1)``; the original point at ``t`` lands at
    image parameter ``rho / t``.
    """
    o = np.asarray(origin, dtype=float).reshape(3)
    d = np.asarray(direction, dtype=float).reshape(3)
    if o[2] != 0.0 or d[2] != 1.0:
        raise FormError("ray must have the form (x + f t, y + g t, t)")
    x, y = o[0], o[1]
    f, g = d[0], d[1]
    rho = math.sqrt(x * x + y * y + 1.0)
    return OpenRay((float(f), float(g), 0.0), (x / rho, y / rho, 1.0 / rho))


@dataclass(frozen=True)
class OpenRay:
    """``base + s * direction`` for ``s > 0`` with a unit ``direction``."""

    base: tuple
    direction: tuple

    def point(self, s):
        return np.add(self.base, np.multiply.outer(np.asarray(s, float), self.direction))


def direction_spread(points_xy, res: int = 32) -> float:
    """Fraction of direction cells hit by ``(x, y, 1)/rho`` over base points.

    Unit vectors in the upper hemisphere are binned by their first two
    components on a ``res x res`` grid over ``[-1, 1]^2``; the fraction is
    taken over the cells whose centre lies in the unit disk.
    """
    p = np.asarray(points_xy, dtype=float).reshape(-1, 2)
    rho = np.sqrt(p[:, 0] ** 2 + p[:, 1] ** 2 + 1.0)
    u = p / rho[:, None]
    idx = np.clip(np.floor((u + 1.0) * res / 2.0).astype(int), 0, res - 1)
    hit = np.zeros((res, res), dtype=bool)
    hit[idx[:, 0], idx[:, 1]] = True
    c = (np.arange(res) + 0.5) * 2.0 / res - 1.0
    disk = (c[:, None] ** 2 + c[None, :] ** 2) < 1.0
    return float(np.count_nonzero(hit & disk) / np.count_nonzero(disk))


def read_faces(path) -> BoundaryField:
    """Parse a face-list file.

    ``F nx ny nz`` opens a face with its outward normal, ``V x y z`` adds a
    vertex and ``S x y z vx vy vz`` a field sample. ``#`` starts a comment.
    """
    faces, samples = [], []
    normal = verts = pts = vecs = None
    start = None

    def close():
        if normal is None:
            return
        try:
            faces.append(PolyFace(np.array(verts), np.array(normal)))
        except ConstructionError as exc:
            raise ParseError(str(exc), start) from None
        samples.append(FaceSamples(np.array(pts).reshape(-1, 3), np.array(vecs).reshape(-1, 3)))

    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            text = raw.split("#", 1)[0].strip()
            if not text:
                continue
            parts = text.split()
            kind, args = parts[0], parts[1:]
            want = {"F": 3, "V": 3, "S": 6}.get(kind)
            if want is None or len(args) != want:
                raise ParseError(f"unrecognised record {text!r}", lineno)
            try:
                vals = [float(a) for a in args]
            except ValueError:
                raise ParseError(f"non-numeric record {text!r}", lineno) from None
            if kind == "F":
                close()
                normal, verts, pts, vecs, start = vals, [], [], [], lineno
            elif normal is None:
                raise ParseError("vertex or sample before any 'F' record", lineno)
            elif kind == "V":
                verts.append(vals)
            else:
                pts.append(vals[:3])
                vecs.append(vals[3:])
        close()
    if not faces:
        raise ParseError("face file contains no faces")
    try:
        return BoundaryField(faces, samples)
    except ConstructionError as exc:
        raise ParseError(str(exc)) from None


def write_faces(bf: BoundaryField, path) -> None:
    with open(path, "w") as fh:
        for face, smp in zip(bf.faces, bf.samples):
            fh.write("F %r %r %r\n" % tuple(map(float, face.outward_normal)))
            for v in face.vertices:
                fh.write("V %r %r %r\n" % tuple(map(float, v)))
            for p, v in zip(smp.points, smp.vectors):
                fh.write("S %r %r %r %r %r %r\n" % tuple(map(float, np.concatenate([p, v]))))
