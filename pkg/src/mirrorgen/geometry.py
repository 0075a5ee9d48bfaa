"""Planes, poses, boxes, frusta, ray-triangle tests and convex polygon
clipping shared by placement and rendering.

Conventions: +z is up, the ground plane is z = 0, and the mirror stands in
a vertical plane of constant y. Ground-plane polygons are (N, 2) float
arrays in counter-clockwise order with no repeated closing vertex. All
functions are pure; arrays are treated as immutable.
"""

from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import EmptyMesh

# Predicate tolerance and the minimum ray parameter accepted by
# ray-triangle tests (self-intersection offset at unit-cube scene scale).
EPS_GEOM = 1e-9
EPS_RAY = 1e-4

# Inclusive clipping tolerance: points within this distance of a clip line
# count as inside, so touching polygons intersect (closed-set semantics).
EPS_CLIP = 1e-9

WORLD_UP = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class Plane:
    """Oriented plane {p : dot(normal, p) = offset} with unit normal."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = np.asarray(self.normal, dtype=float)
        if abs(np.linalg.norm(n) - 1.0) > EPS_GEOM:
            raise ValueError("plane normal must be unit length")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    def signed_distance(self, p) -> float:
        return float(np.dot(self.normal, p) - self.offset)


@dataclass(frozen=True)
class RigidPose:
    """Proper rigid transform: world point = rotation @ local + translation."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.rotation, dtype=float).reshape(3, 3)
        t = np.asarray(self.translation, dtype=float).reshape(3)
        if np.abs(r.T @ r - np.eye(3)).max() > 1e-9 or abs(np.linalg.det(r) - 1.0) > 1e-9:
            raise ValueError("rotation must be orthonormal with det +1")
        object.__setattr__(self, "rotation", r)
        object.__setattr__(self, "translation", t)

    def transform_point(self, p) -> np.ndarray:
        return self.rotation @ np.asarray(p, dtype=float) + self.translation


@dataclass(frozen=True)
class Aabb:
    """Axis-aligned box given by componentwise min/max corners."""

    min: np.ndarray
    max: np.ndarray

    def __post_init__(self):
        lo = np.asarray(self.min, dtype=float).reshape(3)
        hi = np.asarray(self.max, dtype=float).reshape(3)
        if np.any(lo > hi):
            raise ValueError("aabb min must not exceed max")
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    @classmethod
    def from_points(cls, points) -> "Aabb":
        pts = np.asarray(points, dtype=float).reshape(-1, 3)
        if pts.shape[0] == 0:
            raise EmptyMesh("cannot bound zero points")
        return cls(pts.min(axis=0), pts.max(axis=0))

    @property
    def extents(self) -> np.ndarray:
        return self.max - self.min

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.min + self.max)

    def translated(self, delta) -> "Aabb":
        d = np.asarray(delta, dtype=float)
        return Aabb(self.min + d, self.max + d)


@dataclass(frozen=True)
class Frustum:
    """Convex region as an intersection of inward-facing half-spaces."""

    planes: tuple

    def contains(self, p, eps: float = EPS_GEOM) -> bool:
        return all(pl.signed_distance(p) >= -eps for pl in self.planes)


def reflect_point(plane: Plane, p) -> np.ndarray:
    """Mirror image of p across the plane."""
    p = np.asarray(p, dtype=float)
    return p - 2.0 * (np.dot(plane.normal, p) - plane.offset) * plane.normal


def reflection_transform(plane: Plane) -> np.ndarray:
    """4x4 affine matrix applying reflect_point to homogeneous points.

    Linear part I - 2nn^T (determinant -1), translation 2*offset*normal.
    The matrix is its own inverse.
    """
    n = plane.normal
    m = np.eye(4)
    m[:3, :3] = np.eye(3) - 2.0 * np.outer(n, n)
    m[:3, 3] = 2.0 * plane.offset * n
    return m


def rot_z(angle: float) -> np.ndarray:
    """Rotation about the world vertical axis."""
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def apply_similarity(points, scale: float, angle: float, translation) -> np.ndarray:
    """Apply p -> R_z(angle) @ (scale * p) + translation to (N, 3) points."""
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    return (scale * pts) @ rot_z(angle).T + np.asarray(translation, dtype=float)


def transformed_aabb(mesh, placement) -> Aabb:
    """Tight world-space AABB of a placed mesh.

    Bounds the transformed vertices themselves, not the transformed box of
    the rest-pose AABB. Accepts any mesh with ``.vertices`` and any
    placement with ``.scale``, ``.rotation_angle`` and ``.translation``.
    """
    verts = np.asarray(mesh.vertices, dtype=float).reshape(-1, 3)
    if verts.shape[0] == 0:
        raise EmptyMesh(f"mesh {getattr(mesh, 'id', '?')} has no vertices")
    world = apply_similarity(verts, placement.scale, placement.rotation_angle, placement.translation)
    return Aabb.from_points(world)


class TriangleHit(NamedTuple):
    t: float
    u: float
    v: float
    normal: np.ndarray


def ray_triangle(origin, direction, tri) -> Optional[TriangleHit]:
    """Moeller-Trumbore intersection against a closed triangle.

    Boundary hits (barycentrics on an edge or vertex) are accepted, so
    rays crossing a shared edge always register on both triangles and
    repeated evaluation gives identical results. Hits at t <= EPS_RAY are
    rejected to avoid self-intersection.
    """
    o = np.asarray(origin, dtype=float)
    d = np.asarray(direction, dtype=float)
    a, b, c = (np.asarray(v, dtype=float) for v in tri)
    e1 = b - a
    e2 = c - a
    pvec = np.cross(d, e2)
    det = float(np.dot(e1, pvec))
    if abs(det) < 1e-12:
        return None
    inv = 1.0 / det
    tvec = o - a
    u = float(np.dot(tvec, pvec)) * inv
    if u < -EPS_CLIP or u > 1.0 + EPS_CLIP:
        return None
    qvec = np.cross(tvec, e1)
    v = float(np.dot(d, qvec)) * inv
    if v < -EPS_CLIP or u + v > 1.0 + EPS_CLIP:
        return None
    t = float(np.dot(e2, qvec)) * inv
    if t <= EPS_RAY:
        return None
    n = np.cross(e1, e2)
    n = n / np.linalg.norm(n)
    return TriangleHit(t, u, v, n)


# ---------------------------------------------------------------------------
# convex polygons in a horizontal plane


def polygon_area(poly) -> float:
    """Shoelace area; 0 for degenerate polygons (< 3 vertices)."""
    p = np.asarray(poly, dtype=float).reshape(-1, 2)
    if p.shape[0] < 3:
        return 0.0
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def point_in_convex(poly, p, eps: float = EPS_CLIP) -> bool:
    """Closed-set membership test for a convex CCW polygon."""
    poly = np.asarray(poly, dtype=float).reshape(-1, 2)
    if poly.shape[0] < 3:
        return False
    q = np.asarray(p, dtype=float)
    a = poly
    b = np.roll(poly, -1, axis=0)
    e = b - a
    w = q - a
    cross = e[:, 0] * w[:, 1] - e[:, 1] * w[:, 0]
    return bool(np.all(cross >= -eps * np.maximum(np.linalg.norm(e, axis=1), 1.0)))


def _dedup(points) -> np.ndarray:
    """Drop consecutive (and wrap-around) vertices closer than EPS_CLIP."""
    out = []
    for p in points:
        if not out or np.linalg.norm(p - out[-1]) > EPS_CLIP:
            out.append(p)
    while len(out) > 1 and np.linalg.norm(out[0] - out[-1]) <= EPS_CLIP:
        out.pop()
    if not out:
        return np.zeros((0, 2))
    return np.array(out)


def clip_halfplane(poly, normal2d, offset: float) -> np.ndarray:
    """Clip a convex CCW polygon to {p : dot(normal2d, p) >= offset}.

    Sutherland-Hodgman against a single line, with the boundary counted as
    inside.
    """
    p = np.asarray(poly, dtype=float).reshape(-1, 2)
    if p.shape[0] == 0:
        return p
    n = np.asarray(normal2d, dtype=float)
    d = p @ n - offset
    out = []
    m = p.shape[0]
    for i in range(m):
        a, b = p[i], p[(i + 1) % m]
        da, db = d[i], d[(i + 1) % m]
        ina, inb = da >= -EPS_CLIP, db >= -EPS_CLIP
        if inb:
            if not ina:
                t = min(max(da / (da - db), 0.0), 1.0)
                out.append(a + t * (b - a))
            out.append(b)
        elif ina:
            t = min(max(da / (da - db), 0.0), 1.0)
            out.append(a + t * (b - a))
    return _dedup(out)


def convex_intersect(a, b) -> np.ndarray:
    """Intersection of two convex CCW polygons (convex, CCW; may be
    degenerate when the inputs merely touch)."""
    pa = np.asarray(a, dtype=float).reshape(-1, 2)
    pb = np.asarray(b, dtype=float).reshape(-1, 2)
    if pa.shape[0] == 0 or pb.shape[0] == 0:
        return np.zeros((0, 2))
    if pb.shape[0] < 3:
        pts = [q for q in pb if point_in_convex(pa, q)]
        return _dedup(pts)
    if pa.shape[0] < 3:
        pts = [q for q in pa if point_in_convex(pb, q)]
        return _dedup(pts)
    out = pa
    m = pb.shape[0]
    for i in range(m):
        p, q = pb[i], pb[(i + 1) % m]
        e = q - p
        ln = np.linalg.norm(e)
        if ln <= EPS_CLIP:
            continue
        n = np.array([-e[1], e[0]]) / ln  # inward for CCW
        out = clip_halfplane(out, n, float(np.dot(n, p)))
        if out.shape[0] == 0:
            break
    return out


def shrink_polygon(poly, margin: float) -> np.ndarray:
    """Offset every edge of a convex CCW polygon inward by ``margin``."""
    p = np.asarray(poly, dtype=float).reshape(-1, 2)
    if p.shape[0] < 3:
        return np.zeros((0, 2))
    out = p
    m = p.shape[0]
    for i in range(m):
        a, b = p[i], p[(i + 1) % m]
        e = b - a
        ln = np.linalg.norm(e)
        if ln <= EPS_CLIP:
            continue
        n = np.array([-e[1], e[0]]) / ln
        out = clip_halfplane(out, n, float(np.dot(n, a)) + margin)
        if out.shape[0] == 0:
            break
    return out


def frustum_ground_section(frustum: Frustum, z: float, bound: float = 64.0) -> np.ndarray:
    """Convex CCW polygon of the frustum's cross-section at height z.

    Unbounded sections are clipped to the working square |x|,|y| <= bound;
    an empty polygon means the plane of height z misses the frustum.
    """
    poly = np.array([[-bound, -bound], [bound, -bound], [bound, bound], [-bound, bound]])
    for pl in frustum.planes:
        nx, ny, nz = pl.normal
        rhs = pl.offset - nz * z
        norm = float(np.hypot(nx, ny))
        if norm < 1e-12:
            if rhs > EPS_CLIP:  # plane parallel to the slice and excludes it
                return np.zeros((0, 2))
            continue
        poly = clip_halfplane(poly, np.array([nx, ny]) / norm, rhs / norm)
        if poly.shape[0] == 0:
            break
    return poly
