"""Object placement: unit-cube normalization, position sampling inside the
co-visibility region, random vertical rotation, grounding, and
collision-resolved placement of object pairs.

The sampling region is built per camera as the ground section of the
camera's view frustum intersected with the ground section of the mirror
wedge (the reflected-camera visibility volume bounded by the aperture
edges and the mirror plane, restricted to the reflective side). Sections
are taken at ground level and one unit above it so a unit-tall object is
covered top to bottom, intersected across all cameras, and shrunk inward
by the footprint circumradius of a rotated unit cube.
"""

import math
from dataclasses import dataclass
from typing import List

import numpy as np

from .assets import Catalog, ObjectAsset, PairingTable, sample_asset
from .errors import DegenerateMesh, EmptyRegion, PairingUnavailable, PlacementFailed
from .geometry import (
    Aabb,
    Frustum,
    Plane,
    apply_similarity,
    convex_intersect,
    frustum_ground_section,
    point_in_convex,
    polygon_area,
    reflect_point,
    shrink_polygon,
    transformed_aabb,
)

# Inward shrink so a unit cube rotated about the vertical axis keeps its
# whole footprint inside the visibility region (circumradius of a 1x1
# square).
MARGIN_R = math.sqrt(2.0) / 2.0


@dataclass(frozen=True)
class Placement:
    """Similarity transform posing an asset: world = R_z(angle) @ (s*p) + t."""

    asset_id: str
    scale: float
    rotation_angle: float
    translation: np.ndarray
    world_aabb: Aabb


@dataclass(frozen=True)
class SamplingRegion:
    """Final position-sampling polygon and the per-camera polygons it came from."""

    polygon: np.ndarray
    per_camera_polygons: List[np.ndarray]


def normalize_scale(asset: ObjectAsset) -> float:
    """Scale factor fitting the asset's AABB inside a unit cube (1 / max extent)."""
    ext = asset.aabb.extents
    d_max = float(ext.max())
    if d_max <= 1e-9:
        raise DegenerateMesh(f"asset {asset.id!r} has no extent")
    return 1.0 / d_max


def camera_frustum(pose, vertical_fov: float, aspect: float = 1.0) -> Frustum:
    """Four inward side planes of a symmetric perspective camera.

    The pose rotation columns are (right, up, back); the camera looks
    along -back.
    """
    r = pose.rotation[:, 0]
    u = pose.rotation[:, 1]
    f = -pose.rotation[:, 2]
    o = pose.translation
    tv = math.tan(vertical_fov / 2.0)
    th = tv * aspect
    planes = []
    for n in (r + th * f, -r + th * f, u + tv * f, -u + tv * f):
        n = n / np.linalg.norm(n)
        planes.append(Plane(n, float(np.dot(n, o))))
    return Frustum(tuple(planes))


def mirror_wedge_frustum(mirror, camera_origin) -> Frustum:
    """Volume whose points have a mirror image visible to the camera
    through the aperture: the wedge from the reflected camera position
    through the aperture rectangle, on the reflective side of the plane.
    """
    plane = mirror.plane
    apex = reflect_point(plane, camera_origin)
    corners = mirror.aperture_corners()
    q = mirror.aperture_center() + plane.normal  # interior reference point
    planes = [plane]
    for i in range(4):
        c1, c2 = corners[i], corners[(i + 1) % 4]
        n = np.cross(c2 - c1, c1 - apex)
        ln = np.linalg.norm(n)
        if ln < 1e-12:
            continue
        n = n / ln
        d = float(np.dot(n, c1))
        if np.dot(n, q) < d:
            n, d = -n, -d
        planes.append(Plane(n, d))
    return Frustum(tuple(planes))


def compute_sampling_region(mirror, camera_rig, ground_z: float,
                            margin: float = MARGIN_R,
                            proxy_height: float = 1.0) -> SamplingRegion:
    """Region where a placed unit object and its reflection are visible
    from every rig camera."""
    per_camera = []
    for cam in camera_rig:
        cam_fr = camera_frustum(cam.pose, cam.vertical_fov)
        wedge = mirror_wedge_frustum(mirror, cam.pose.translation)
        sect = None
        for z in (ground_z, ground_z + proxy_height):
            s = convex_intersect(frustum_ground_section(cam_fr, z),
                                 frustum_ground_section(wedge, z))
            sect = s if sect is None else convex_intersect(sect, s)
        per_camera.append(sect)
    final = per_camera[0]
    for poly in per_camera[1:]:
        final = convex_intersect(final, poly)
    final = shrink_polygon(final, margin)
    if polygon_area(final) <= 1e-9:
        raise EmptyRegion("no ground position is co-visible from every camera")
    return SamplingRegion(polygon=final, per_camera_polygons=per_camera)


def sample_position(region: SamplingRegion, rng: np.random.Generator):
    """Uniform point in the region polygon.

    Fan-triangulates, picks a triangle by area, then draws uniform
    barycentrics; exactly three uniforms are consumed per call.
    """
    poly = region.polygon
    n = poly.shape[0]
    if n < 3 or polygon_area(poly) <= 0.0:
        raise EmptyRegion("sampling region is empty")
    a, b, c = poly[0], poly[1:-1], poly[2:]
    areas = 0.5 * np.abs((b[:, 0] - a[0]) * (c[:, 1] - a[1])
                         - (b[:, 1] - a[1]) * (c[:, 0] - a[0]))
    cum = np.cumsum(areas)
    k = int(np.searchsorted(cum, rng.random() * cum[-1], side="right"))
    k = min(k, len(areas) - 1)
    su = math.sqrt(rng.random())
    v = rng.random()
    p = (1.0 - su) * a + su * (1.0 - v) * b[k] + su * v * c[k]
    return float(p[0]), float(p[1])


def sample_rotation(rng: np.random.Generator) -> float:
    """Uniform angle in [0, 2*pi) about the world vertical axis."""
    return float(rng.random() * 2.0 * math.pi)


def ground_object(placement: Placement, asset: ObjectAsset, ground_z: float,
                  strict_paper: bool = False) -> Placement:
    """Shift the placement vertically so its AABB rests on the ground.

    With ``strict_paper=True`` only floating objects are lowered;
    by default ground-penetrating objects are raised symmetrically.
    """
    box = transformed_aabb(asset, placement)
    z = float(box.min[2]) - ground_z
    if strict_paper and z <= 0.0:
        return Placement(placement.asset_id, placement.scale, placement.rotation_angle,
                         placement.translation, box)
    delta = np.array([0.0, 0.0, -z])
    return Placement(placement.asset_id, placement.scale, placement.rotation_angle,
                     placement.translation + delta, box.translated(delta))


def place_object(asset: ObjectAsset, region: SamplingRegion, rng: np.random.Generator,
                 ground_z: float, strict_paper: bool = False) -> Placement:
    """Normalize, sample position, sample rotation, then ground.

    The sampled point becomes the xy-center of the object's world AABB.
    Stream consumption order: position (3 draws), rotation (1 draw).
    """
    s = normalize_scale(asset)
    xy = sample_position(region, rng)
    theta = sample_rotation(rng)
    box = Aabb.from_points(apply_similarity(asset.vertices, s, theta, (0.0, 0.0, 0.0)))
    t = np.array([xy[0] - box.center[0], xy[1] - box.center[1], 0.0])
    placed = Placement(asset.id, s, theta, t, box.translated(t))
    return ground_object(placed, asset, ground_z, strict_paper)


def aabb_collide(a: Aabb, b: Aabb) -> bool:
    """True only for positive-volume overlap; touching faces do not collide."""
    return bool(np.all(a.min < b.max) and np.all(b.min < a.max))


def place_pair(primary_asset: ObjectAsset, catalog: Catalog, pairing: PairingTable,
               region: SamplingRegion, rng: np.random.Generator, ground_z: float,
               max_attempts: int = 64, strict_paper: bool = False):
    """Place the primary object, then a semantically paired second object,
    resampling the second object's position until the AABBs are disjoint.

    Only the position is redrawn on collision; scale and rotation are
    kept. Raises PlacementFailed when ``max_attempts`` positions all
    collide.
    """
    p1 = place_object(primary_asset, region, rng, ground_z, strict_paper)
    cats = pairing.paired_categories(primary_asset.category)
    if not cats:
        raise PairingUnavailable(f"no pairing for category {primary_asset.category!r}")
    cat2 = cats[int(rng.integers(0, len(cats)))]
    a2 = sample_asset(cat2, catalog, rng)
    p2 = place_object(a2, region, rng, ground_z, strict_paper)
    attempts = 1
    while aabb_collide(p1.world_aabb, p2.world_aabb):
        if attempts >= max_attempts:
            raise PlacementFailed(
                f"no collision-free position after {max_attempts} attempts")
        xy = sample_position(region, rng)
        delta = np.array([xy[0] - p2.world_aabb.center[0],
                          xy[1] - p2.world_aabb.center[1], 0.0])
        p2 = Placement(p2.asset_id, p2.scale, p2.rotation_angle,
                       p2.translation + delta, p2.world_aabb.translated(delta))
        attempts += 1
    return p1, p2


def position_in_region(region: SamplingRegion, xy) -> bool:
    return point_in_convex(region.polygon, np.asarray(xy, dtype=float))
