"""Scene assembly: mirror geometry, camera rig, lighting, environments,
and the declarative SceneSpec that a renderer can reproduce bit-exactly.

The rig is 19 cameras on a horizontal arc on the reflective side of the
mirror, aimed at the aperture center, with cycling heights. Radius, span
and field of view are chosen so every pose keeps the full aperture of
either mirror kind in frame (verified by the projection tests).
"""

import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional

import numpy as np

from . import rng as rng_mod
from .assets import Catalog, PairingTable
from .errors import EmptyCategory, FatalConfig
from .geometry import Plane, RigidPose, WORLD_UP
from .placement import Placement, SamplingRegion, compute_sampling_region, place_object, place_pair

GROUND_Z = 0.0

# camera rig
RIG_COUNT = 19
RIG_RADIUS = 6.0
RIG_AZIMUTH_MAX = math.radians(20.0)
RIG_HEIGHTS = (1.2, 1.45, 1.7)
RIG_FOV = math.radians(50.0)
RIG_TARGET = (0.0, 0.0, 1.15)

# light: 45 degree elevation from the primary object's AABB center
LIGHT_DISTANCE = 1.5
LIGHT_HALF_EXTENTS = (0.45, 0.35)
LIGHT_RADIANCE = (15.0, 14.2, 13.0)


class MirrorKind(str, Enum):
    FULL_WALL = "full_wall"
    TALL_RECT = "tall_rect"


@dataclass(frozen=True)
class MirrorSpec:
    """Planar mirror: aperture rectangle (and optional frame) in a wall plane."""

    kind: MirrorKind
    plane: Plane
    center: np.ndarray          # aperture center, on the plane
    half_width: float
    half_height: float
    frame_width: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        if self.half_width <= 0 or self.half_height <= 0:
            raise ValueError("aperture half-extents must be positive")
        if self.center[2] - self.half_height < GROUND_Z - 1e-9:
            raise ValueError("aperture bottom edge must not be below ground")

    def in_plane_axes(self):
        """(u, v): horizontal and vertical unit axes of the aperture."""
        n = self.plane.normal
        u = np.cross(WORLD_UP, n)
        u = u / np.linalg.norm(u)
        v = np.cross(n, u)
        return u, v

    def aperture_center(self) -> np.ndarray:
        return self.center

    def aperture_corners(self) -> np.ndarray:
        u, v = self.in_plane_axes()
        c, hw, hh = self.center, self.half_width, self.half_height
        return np.array([c - u * hw - v * hh, c + u * hw - v * hh,
                         c + u * hw + v * hh, c - u * hw + v * hh])


@dataclass(frozen=True)
class AreaLight:
    center: np.ndarray
    half_extents: np.ndarray    # (2,) in the light's own plane
    normal: np.ndarray          # unit, emission direction
    radiance: np.ndarray        # RGB >= 0

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))
        object.__setattr__(self, "half_extents", np.asarray(self.half_extents, dtype=float))
        n = np.asarray(self.normal, dtype=float)
        object.__setattr__(self, "normal", n / np.linalg.norm(n))
        object.__setattr__(self, "radiance", np.asarray(self.radiance, dtype=float))


@dataclass(frozen=True)
class CameraPose:
    pose: RigidPose
    vertical_fov: float
    index: int


@dataclass
class SceneSpec:
    """Complete declarative scene; serializes to JSON and re-renders
    bit-identically from that JSON."""

    scene_id: str
    seed: int
    mirror: Optional[MirrorSpec]
    floor_texture_id: str
    environment_id: str
    light: AreaLight
    placements: List[Placement]
    views: List[int]
    resolution: int


def look_at(eye, target) -> RigidPose:
    """Pose at ``eye`` facing ``target`` with +z as world up.

    Rotation columns are (right, up, back); the camera looks along -back.
    """
    eye = np.asarray(eye, dtype=float)
    f = np.asarray(target, dtype=float) - eye
    f = f / np.linalg.norm(f)
    r = np.cross(f, WORLD_UP)
    r = r / np.linalg.norm(r)
    u = np.cross(r, f)
    rot = np.column_stack([r, u, -f])
    return RigidPose(rot, eye)


def camera_rig(target=RIG_TARGET) -> List[CameraPose]:
    """The fixed 19-pose arc facing the mirror."""
    target = np.asarray(target, dtype=float)
    rig = []
    for i in range(RIG_COUNT):
        frac = i / (RIG_COUNT - 1)
        azimuth = -RIG_AZIMUTH_MAX + 2.0 * RIG_AZIMUTH_MAX * frac
        height = RIG_HEIGHTS[i % len(RIG_HEIGHTS)]
        eye = np.array([RIG_RADIUS * math.sin(azimuth),
                        RIG_RADIUS * math.cos(azimuth), height])
        rig.append(CameraPose(pose=look_at(eye, target), vertical_fov=RIG_FOV, index=i))
    return rig


def select_views(rng: np.random.Generator, count: int = 3) -> List[int]:
    """Distinct camera indices, uniform without replacement (partial
    Fisher-Yates; consumes ``count`` integer draws)."""
    idx = list(range(RIG_COUNT))
    for i in range(count):
        j = i + int(rng.integers(0, RIG_COUNT - i))
        idx[i], idx[j] = idx[j], idx[i]
    return idx[:count]


def mirror_for_kind(kind: MirrorKind) -> MirrorSpec:
    plane = Plane(np.array([0.0, 1.0, 0.0]), 0.0)
    if kind == MirrorKind.FULL_WALL:
        return MirrorSpec(kind=kind, plane=plane, center=np.array([0.0, 0.0, 1.3]),
                          half_width=2.2, half_height=1.3, frame_width=0.0)
    return MirrorSpec(kind=kind, plane=plane, center=np.array([0.0, 0.0, 1.5]),
                      half_width=1.2, half_height=1.5, frame_width=0.06)


_REGION_CACHE: Dict[MirrorKind, SamplingRegion] = {}


def sampling_region_for_kind(kind: MirrorKind) -> SamplingRegion:
    """Cached co-visibility region for the fixed rig and a mirror kind."""
    if kind not in _REGION_CACHE:
        _REGION_CACHE[kind] = compute_sampling_region(
            mirror_for_kind(kind), camera_rig(), GROUND_Z)
    return _REGION_CACHE[kind]


# built-in environments: tiny equirectangular sky gradients
_ENV_PALETTES = {
    "sky-day": ((0.35, 0.55, 0.85), (0.80, 0.86, 0.92), (0.28, 0.26, 0.24)),
    "sky-dusk": ((0.20, 0.18, 0.35), (0.85, 0.55, 0.35), (0.20, 0.16, 0.14)),
    "sky-gray": ((0.55, 0.57, 0.60), (0.75, 0.76, 0.78), (0.30, 0.30, 0.30)),
}

ENVIRONMENT_IDS = tuple(sorted(_ENV_PALETTES))


def environment_image(env_id: str, rows: int = 64, cols: int = 8) -> np.ndarray:
    """Equirectangular RGB image for a built-in sky, rows from zenith to nadir."""
    try:
        zenith, horizon, ground = (np.asarray(c) for c in _ENV_PALETTES[env_id])
    except KeyError:
        raise FatalConfig(f"unknown environment id {env_id!r}") from None
    img = np.empty((rows, cols, 3), dtype=np.float32)
    for row in range(rows):
        z = math.cos(math.pi * (row + 0.5) / rows)   # direction z for this row
        if z >= 0.0:
            c = horizon + (zenith - horizon) * (z ** 0.8)
        else:
            c = horizon + (ground - horizon) * ((-z) ** 0.5)
        img[row, :, :] = c
    return img


def light_for_placement(primary: Placement, mirror: MirrorSpec) -> AreaLight:
    """Area light above and behind the primary object, 45 degrees up,
    aimed between the object and the mirror aperture."""
    obj_center = primary.world_aabb.center
    away = mirror.plane.normal  # horizontal, pointing into the scene
    center = obj_center + away * LIGHT_DISTANCE + WORLD_UP * LIGHT_DISTANCE
    aim = 0.5 * (obj_center + mirror.aperture_center())
    return AreaLight(center=center, half_extents=np.array(LIGHT_HALF_EXTENTS),
                     normal=aim - center, radiance=np.array(LIGHT_RADIANCE))


def build_scene(config, catalog: Catalog, pairing: PairingTable,
                scene_index: int, global_seed: int) -> SceneSpec:
    """Assemble one scene from purpose-tagged substreams of its seed.

    ``config`` provides multi_object_prob, resolution and
    strict_paper_grounding. Raises EmptyRegion/PlacementFailed for
    scenes the caller should skip.
    """
    seed = rng_mod.derive_seed(global_seed, scene_index)

    kind = (MirrorKind.FULL_WALL if rng_mod.stream(seed, "mirror").random() < 0.5
            else MirrorKind.TALL_RECT)
    mirror = mirror_for_kind(kind)
    region = sampling_region_for_kind(kind)

    floor_ids = sorted(catalog.floor_textures)
    if not floor_ids:
        raise FatalConfig("catalog has no floor textures")
    floor_id = floor_ids[int(rng_mod.stream(seed, "floor").integers(0, len(floor_ids)))]

    env_id = ENVIRONMENT_IDS[int(rng_mod.stream(seed, "env").integers(0, len(ENVIRONMENT_IDS)))]

    asset_ids = sorted(catalog.assets)
    if not asset_ids:
        raise EmptyCategory("catalog has no mesh assets")
    primary = catalog.assets[asset_ids[int(rng_mod.stream(seed, "asset").integers(0, len(asset_ids)))]]

    multi = rng_mod.stream(seed, "multi").random() < config.multi_object_prob
    place_rng = rng_mod.stream(seed, "placement")
    strict = getattr(config, "strict_paper_grounding", False)
    if multi:
        p1, p2 = place_pair(primary, catalog, pairing, region, place_rng,
                            GROUND_Z, strict_paper=strict)
        placements = [p1, p2]
    else:
        placements = [place_object(primary, region, place_rng, GROUND_Z, strict_paper=strict)]

    views = select_views(rng_mod.stream(seed, "views"))
    light = light_for_placement(placements[0], mirror)

    return SceneSpec(scene_id=f"scene_{scene_index:06d}", seed=seed, mirror=mirror,
                     floor_texture_id=floor_id, environment_id=env_id, light=light,
                     placements=placements, views=views, resolution=config.resolution)


# ---------------------------------------------------------------------------
# serialization

def _vec(x):
    return [float(v) for v in np.asarray(x).ravel()]


def scene_to_dict(spec: SceneSpec) -> dict:
    mirror = None
    if spec.mirror is not None:
        m = spec.mirror
        mirror = {"kind": m.kind.value, "normal": _vec(m.plane.normal),
                  "offset": float(m.plane.offset), "center": _vec(m.center),
                  "half_width": float(m.half_width), "half_height": float(m.half_height),
                  "frame_width": float(m.frame_width)}
    return {
        "schema": "mirrorgen/scene/v1",
        "scene_id": spec.scene_id,
        "seed": int(spec.seed),
        "mirror": mirror,
        "floor_texture_id": spec.floor_texture_id,
        "environment_id": spec.environment_id,
        "light": {"center": _vec(spec.light.center),
                  "half_extents": _vec(spec.light.half_extents),
                  "normal": _vec(spec.light.normal),
                  "radiance": _vec(spec.light.radiance)},
        "placements": [{"asset_id": p.asset_id, "scale": float(p.scale),
                        "rotation_angle": float(p.rotation_angle),
                        "translation": _vec(p.translation),
                        "aabb_min": _vec(p.world_aabb.min),
                        "aabb_max": _vec(p.world_aabb.max)} for p in spec.placements],
        "views": [int(v) for v in spec.views],
        "resolution": int(spec.resolution),
    }


def scene_from_dict(d: dict) -> SceneSpec:
    from .geometry import Aabb

    mirror = None
    if d.get("mirror") is not None:
        m = d["mirror"]
        mirror = MirrorSpec(kind=MirrorKind(m["kind"]),
                            plane=Plane(np.asarray(m["normal"]), m["offset"]),
                            center=np.asarray(m["center"]),
                            half_width=m["half_width"], half_height=m["half_height"],
                            frame_width=m.get("frame_width", 0.0))
    light = AreaLight(center=np.asarray(d["light"]["center"]),
                      half_extents=np.asarray(d["light"]["half_extents"]),
                      normal=np.asarray(d["light"]["normal"]),
                      radiance=np.asarray(d["light"]["radiance"]))
    placements = [Placement(asset_id=p["asset_id"], scale=p["scale"],
                            rotation_angle=p["rotation_angle"],
                            translation=np.asarray(p["translation"]),
                            world_aabb=Aabb(np.asarray(p["aabb_min"]), np.asarray(p["aabb_max"])))
                  for p in d["placements"]]
    return SceneSpec(scene_id=d["scene_id"], seed=d["seed"], mirror=mirror,
                     floor_texture_id=d["floor_texture_id"],
                     environment_id=d["environment_id"], light=light,
                     placements=placements, views=list(d["views"]),
                     resolution=d["resolution"])


def scene_to_json(spec: SceneSpec) -> str:
    """Canonical JSON form; equal specs serialize to identical bytes."""
    return json.dumps(scene_to_dict(spec), sort_keys=True, separators=(",", ":"))


def scene_from_json(text: str) -> SceneSpec:
    return scene_from_dict(json.loads(text))


def scene_digest(spec: SceneSpec) -> str:
    return hashlib.sha256(scene_to_json(spec).encode()).hexdigest()
