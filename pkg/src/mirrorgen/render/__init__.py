"""Deterministic Whitted-style renderer.

``compile_scene`` resolves a SceneSpec against a catalog into flat arrays
(triangles, BVH, materials, textures, environment, light); ``render``
produces the full ground-truth pass bundle for one view and
``render_reflection_oracle`` renders the scene from the virtually
reflected camera with the mirror removed, which must reproduce the
mirror-region pixels of the main render.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..assets import Catalog
from ..errors import NoMirror, UnknownAsset
from ..geometry import WORLD_UP, apply_similarity, reflect_point, rot_z
from ..scene import CameraPose, SceneSpec, environment_image
from . import kernels
from .bvh import build_bvh
from .kernels import (INST_FLOOR, INST_FRAME, INST_MIRROR, INST_OBJECT0, INST_SKY,
                      MAT_LAMBERT, MAT_MIRROR, MAT_TEXTURED)
from .passes import RenderPasses, decode_passes, encode_passes, read_pfm, write_pfm

K_AMBIENT = 0.22          # environment-mean ambient factor
FLOOR_HALF = 20.0         # floor quad half-size, world units
FRAME_ALBEDO = (0.06, 0.06, 0.07)


@dataclass
class RenderSettings:
    resolution: tuple = (512, 512)
    samples_per_pixel: int = 4     # stratified AA grid, perfect square
    shadow_samples: int = 16       # area-light occlusion samples
    max_bounce: int = 3
    gamma: float = 2.2

    def __post_init__(self):
        w, h = self.resolution
        if w < 1 or h < 1 or self.samples_per_pixel < 1 or self.shadow_samples < 1 \
                or self.max_bounce < 0 or self.gamma <= 0:
            raise ValueError("render settings must be positive")
        side = int(round(math.sqrt(self.samples_per_pixel)))
        if side * side != self.samples_per_pixel:
            raise ValueError("samples_per_pixel must be a perfect square")

    @property
    def spp_side(self) -> int:
        return int(round(math.sqrt(self.samples_per_pixel)))

    def shadow_grid(self):
        """Near-square (a, b) factorization with a*b == shadow_samples."""
        n = self.shadow_samples
        a = int(math.sqrt(n))
        while n % a != 0:
            a -= 1
        return a, n // a


@dataclass
class CompiledScene:
    """SceneSpec resolved to kernel-ready arrays."""

    tri_v: np.ndarray
    tri_n: np.ndarray
    tri_uv: np.ndarray
    tri_inst: np.ndarray
    tri_mat: np.ndarray
    node_min: np.ndarray
    node_max: np.ndarray
    node_left: np.ndarray
    node_right: np.ndarray
    node_count: np.ndarray
    mat_albedo: np.ndarray
    mat_kind: np.ndarray
    mat_tex: np.ndarray
    tex_data: np.ndarray
    tex_off: np.ndarray
    tex_w: np.ndarray
    tex_h: np.ndarray
    env: np.ndarray
    amb: np.ndarray
    l_c: np.ndarray
    l_u: np.ndarray
    l_v: np.ndarray
    l_n: np.ndarray
    l_rad: np.ndarray
    l_area: float
    m_n: np.ndarray
    m_c: np.ndarray
    m_u: np.ndarray
    m_v: np.ndarray
    m_hw: float
    m_hh: float
    has_mirror: bool
    object_ids: dict = field(default_factory=dict)   # placement index -> instance id

    def geometry_args(self):
        return (self.tri_v, self.tri_n, self.tri_uv, self.tri_inst, self.tri_mat,
                self.node_min, self.node_max, self.node_left, self.node_right, self.node_count,
                self.mat_albedo, self.mat_kind, self.mat_tex,
                self.m_n, self.m_c, self.m_u, self.m_v, self.m_hw, self.m_hh)

    def radiance_args(self, cell_area, shadow_a, shadow_b):
        return (self.tri_v, self.tri_n, self.tri_uv, self.tri_inst, self.tri_mat,
                self.node_min, self.node_max, self.node_left, self.node_right, self.node_count,
                self.mat_albedo, self.mat_kind, self.mat_tex,
                self.tex_data, self.tex_off, self.tex_w, self.tex_h,
                self.env, self.amb,
                self.l_c, self.l_u, self.l_v, self.l_n, self.l_rad,
                cell_area, shadow_a, shadow_b,
                self.m_n, self.m_c, self.m_u, self.m_v, self.m_hw, self.m_hh)


def _corner_normals(asset) -> np.ndarray:
    """(T, 3, 3) per-corner normals; face normals fill in when absent."""
    tris = asset.triangles
    if asset.normals is not None:
        return asset.normals[tris]
    v = asset.vertices[tris]
    fn = np.cross(v[:, 1] - v[:, 0], v[:, 2] - v[:, 0])
    ln = np.linalg.norm(fn, axis=1, keepdims=True)
    ln[ln < 1e-15] = 1.0
    fn = fn / ln
    return np.repeat(fn[:, None, :], 3, axis=1)


def _mirror_quad(mirror):
    """Mirror wall quad (aperture plus frame, clamped at ground level)."""
    u, v = mirror.in_plane_axes()
    c = mirror.center
    fw = mirror.frame_width
    hu = mirror.half_width + fw
    v_hi = mirror.half_height + fw
    v_lo = -min(mirror.half_height + fw, float(c[2]))  # keep quad above ground
    corners = np.array([c - u * hu + v * v_lo, c + u * hu + v * v_lo,
                        c + u * hu + v * v_hi, c - u * hu + v * v_hi])
    tris = np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64)
    return corners[tris], u, v


def compile_scene(spec: SceneSpec, catalog: Catalog) -> CompiledScene:
    tri_v_parts, tri_n_parts, tri_uv_parts = [], [], []
    tri_inst_parts, tri_mat_parts = [], []
    materials = []          # (albedo, kind, tex_index)
    textures = []           # float64 (H, W, 3) in [0, 1]

    def add_texture(pixels_u8):
        textures.append(np.asarray(pixels_u8, dtype=np.float64) / 255.0)
        return len(textures) - 1

    # floor quad, uv = world xy * tiling
    floor = catalog.floor_textures[spec.floor_texture_id]
    tex_floor = add_texture(floor.pixels)
    s = FLOOR_HALF
    fv = np.array([[-s, -s, 0.0], [s, -s, 0.0], [s, s, 0.0], [-s, s, 0.0]])
    fuv = fv[:, :2] * floor.tiling
    ftris = np.array([[0, 1, 2], [0, 2, 3]])
    tri_v_parts.append(fv[ftris])
    tri_n_parts.append(np.broadcast_to(np.array([0.0, 0.0, 1.0]), (2, 3, 3)).copy())
    tri_uv_parts.append(fuv[ftris])
    tri_inst_parts.append(np.full(2, INST_FLOOR, np.uint16))
    materials.append((np.ones(3), MAT_TEXTURED, tex_floor))
    tri_mat_parts.append(np.full(2, len(materials) - 1, np.int32))

    # mirror quad
    if spec.mirror is not None:
        quad, mu, mv = _mirror_quad(spec.mirror)
        tri_v_parts.append(quad)
        nrm = spec.mirror.plane.normal
        tri_n_parts.append(np.broadcast_to(nrm, (2, 3, 3)).copy())
        tri_uv_parts.append(np.zeros((2, 3, 2)))
        tri_inst_parts.append(np.full(2, INST_MIRROR, np.uint16))
        materials.append((np.asarray(FRAME_ALBEDO, dtype=float), MAT_MIRROR, -1))
        tri_mat_parts.append(np.full(2, len(materials) - 1, np.int32))
        m_n = nrm.copy()
        m_c = spec.mirror.center.copy()
        m_u, m_v = mu, mv
        m_hw, m_hh = float(spec.mirror.half_width), float(spec.mirror.half_height)
        has_mirror = True
    else:
        m_n = np.array([0.0, 1.0, 0.0])
        m_c = np.zeros(3)
        m_u = np.array([1.0, 0.0, 0.0])
        m_v = np.array([0.0, 0.0, 1.0])
        m_hw = m_hh = -1.0
        has_mirror = False

    # placed objects
    object_ids = {}
    for k, placement in enumerate(spec.placements):
        try:
            asset = catalog.assets[placement.asset_id]
        except KeyError:
            raise UnknownAsset(f"scene references unknown asset {placement.asset_id!r}") from None
        world_v = apply_similarity(asset.vertices, placement.scale,
                                   placement.rotation_angle, placement.translation)
        rot = rot_z(placement.rotation_angle)
        corner_n = _corner_normals(asset) @ rot.T
        tris = asset.triangles
        tri_v_parts.append(world_v[tris])
        tri_n_parts.append(corner_n if asset.normals is not None
                           else corner_n)  # already per-corner
        if asset.uvs is not None:
            tri_uv_parts.append(asset.uvs[tris])
        else:
            tri_uv_parts.append(np.zeros((len(tris), 3, 2)))
        inst = INST_OBJECT0 + k
        object_ids[k] = inst
        tri_inst_parts.append(np.full(len(tris), inst, np.uint16))
        if asset.texture is not None and asset.texture in catalog.textures:
            ti = add_texture(catalog.textures[asset.texture])
            materials.append((np.ones(3), MAT_TEXTURED, ti))
        else:
            materials.append((np.asarray(asset.base_color, dtype=float), MAT_LAMBERT, -1))
        tri_mat_parts.append(np.full(len(tris), len(materials) - 1, np.int32))

    tri_v = np.concatenate(tri_v_parts).astype(np.float64)
    tri_n = np.concatenate(tri_n_parts).astype(np.float64)
    tri_uv = np.concatenate(tri_uv_parts).astype(np.float64)
    tri_inst = np.concatenate(tri_inst_parts)
    tri_mat = np.concatenate(tri_mat_parts)

    bvh = build_bvh(tri_v)
    perm = bvh.perm
    tri_v, tri_n, tri_uv = tri_v[perm], tri_n[perm], tri_uv[perm]
    tri_inst, tri_mat = tri_inst[perm], tri_mat[perm]

    # texture atlas
    if textures:
        tex_off = np.zeros(len(textures), np.int64)
        tex_w = np.zeros(len(textures), np.int64)
        tex_h = np.zeros(len(textures), np.int64)
        flats = []
        off = 0
        for i, t in enumerate(textures):
            th, tw = t.shape[:2]
            tex_off[i], tex_w[i], tex_h[i] = off, tw, th
            flats.append(t.reshape(-1, 3))
            off += tw * th
        tex_data = np.concatenate(flats)
    else:
        tex_data = np.zeros((1, 3))
        tex_off = np.zeros(1, np.int64)
        tex_w = np.ones(1, np.int64)
        tex_h = np.ones(1, np.int64)

    env = environment_image(spec.environment_id).astype(np.float64)
    amb = env.mean(axis=(0, 1)) * K_AMBIENT

    # light frame: in-plane axes scaled by the half extents
    light = spec.light
    n = light.normal
    helper = WORLD_UP if abs(float(np.dot(n, WORLD_UP))) < 0.98 else np.array([1.0, 0.0, 0.0])
    u_dir = np.cross(helper, n)
    u_dir = u_dir / np.linalg.norm(u_dir)
    v_dir = np.cross(n, u_dir)
    he = light.half_extents
    l_area = 4.0 * float(he[0] * he[1])

    mat_albedo = np.stack([m[0] for m in materials]).astype(np.float64)
    mat_kind = np.array([m[1] for m in materials], np.int32)
    mat_tex = np.array([m[2] for m in materials], np.int32)

    return CompiledScene(
        tri_v=tri_v, tri_n=tri_n, tri_uv=tri_uv, tri_inst=tri_inst, tri_mat=tri_mat,
        node_min=bvh.node_min, node_max=bvh.node_max, node_left=bvh.node_left,
        node_right=bvh.node_right, node_count=bvh.node_count,
        mat_albedo=mat_albedo, mat_kind=mat_kind, mat_tex=mat_tex,
        tex_data=tex_data, tex_off=tex_off, tex_w=tex_w, tex_h=tex_h,
        env=env, amb=amb,
        l_c=light.center.astype(float), l_u=u_dir * he[0], l_v=v_dir * he[1],
        l_n=n.astype(float), l_rad=light.radiance.astype(float), l_area=l_area,
        m_n=m_n, m_c=m_c, m_u=m_u, m_v=m_v, m_hw=m_hw, m_hh=m_hh,
        has_mirror=has_mirror, object_ids=object_ids)


def _camera_frame(view: CameraPose, resolution):
    r = view.pose.rotation[:, 0].copy()
    u = view.pose.rotation[:, 1].copy()
    f = -view.pose.rotation[:, 2]
    o = view.pose.translation.copy()
    w, h = resolution
    tv = math.tan(view.vertical_fov / 2.0)
    th = tv * (w / h)
    return o, r, u, f.copy(), th, tv


def quantize(linear: np.ndarray, gamma: float) -> np.ndarray:
    """Clamp to [0,1], apply the display gamma, quantize to uint8."""
    g = np.clip(linear, 0.0, 1.0) ** (1.0 / gamma)
    return np.floor(g * 255.0 + 0.5).astype(np.uint8)


def render(spec: SceneSpec, view: CameraPose, settings: RenderSettings,
           catalog: Optional[Catalog] = None,
           compiled: Optional[CompiledScene] = None) -> RenderPasses:
    """All six ground-truth passes for one view.

    Geometric passes come from the pixel-center ray; RGB averages the
    stratified subpixel samples. Byte-identical for identical inputs at
    any thread count.
    """
    if compiled is None:
        if catalog is None:
            raise ValueError("render needs a catalog or a compiled scene")
        compiled = compile_scene(spec, catalog)
    o, r, u, f, th, tv = _camera_frame(view, settings.resolution)
    w, h = settings.resolution

    depth = np.empty((h, w), np.float32)
    normal = np.empty((h, w, 3), np.float32)
    inst = np.empty((h, w), np.uint16)
    refl = np.empty((h, w), np.uint16)
    mask = np.empty((h, w), np.uint8)
    kernels.geometry_kernel(o, r, u, f, th, tv, w, h,
                            *compiled.geometry_args(),
                            depth, normal, inst, refl, mask)

    sa, sb = settings.shadow_grid()
    cell_area = compiled.l_area / (sa * sb)
    rgb_lin = np.empty((h, w, 3), np.float64)
    kernels.radiance_kernel(o, r, u, f, th, tv, w, h,
                            settings.spp_side, settings.max_bounce, False,
                            *compiled.radiance_args(cell_area, sa, sb),
                            rgb_lin)

    return RenderPasses(rgb=quantize(rgb_lin, settings.gamma), depth=depth,
                        normal=normal, instance=inst, reflected_instance=refl,
                        mirror_mask=mask.astype(bool))


def render_reflection_oracle(spec: SceneSpec, view: CameraPose, settings: RenderSettings,
                             catalog: Optional[Catalog] = None,
                             compiled: Optional[CompiledScene] = None):
    """RGB seen by the virtually reflected camera (mirror excluded) plus
    the validity mask of pixels whose primary ray reaches the aperture.

    Planar-mirror geometry makes valid pixels match the main render's
    mirror region; the reflected basis keeps the mirrored handedness so
    the pixel correspondence is the identity.
    """
    if spec.mirror is None:
        raise NoMirror("scene has no mirror")
    if compiled is None:
        if catalog is None:
            raise ValueError("oracle needs a catalog or a compiled scene")
        compiled = compile_scene(spec, catalog)
    o, r, u, f, th, tv = _camera_frame(view, settings.resolution)
    w, h = settings.resolution

    n = spec.mirror.plane.normal
    m = np.eye(3) - 2.0 * np.outer(n, n)
    o_ref = reflect_point(spec.mirror.plane, o)
    r_ref, u_ref, f_ref = m @ r, m @ u, m @ f

    sa, sb = settings.shadow_grid()
    cell_area = compiled.l_area / (sa * sb)
    rgb_lin = np.empty((h, w, 3), np.float64)
    kernels.radiance_kernel(o_ref, r_ref, u_ref, f_ref, th, tv, w, h,
                            settings.spp_side, settings.max_bounce, True,
                            *compiled.radiance_args(cell_area, sa, sb),
                            rgb_lin)

    depth = np.empty((h, w), np.float32)
    normal = np.empty((h, w, 3), np.float32)
    inst = np.empty((h, w), np.uint16)
    refl = np.empty((h, w), np.uint16)
    mask = np.empty((h, w), np.uint8)
    kernels.geometry_kernel(o, r, u, f, th, tv, w, h,
                            *compiled.geometry_args(),
                            depth, normal, inst, refl, mask)
    validity = inst == INST_MIRROR

    return quantize(rgb_lin, settings.gamma), validity


@dataclass
class SurfaceHit:
    """Shading inputs for one surface point."""

    point: np.ndarray
    normal: np.ndarray
    albedo: np.ndarray
    incoming: np.ndarray           # unit direction the ray was traveling
    is_mirror: bool = False


def shade(hit: SurfaceHit, compiled: CompiledScene, settings: RenderSettings,
          depth: int = 0) -> np.ndarray:
    """Radiance leaving a surface point toward -incoming.

    Lambert surfaces get area-light irradiance with occlusion plus
    environment ambient; a mirror hit returns the shade of the reflected
    ray at depth + 1, or the environment color once the bounce budget is
    spent.
    """
    p = np.asarray(hit.point, dtype=float)
    d = np.asarray(hit.incoming, dtype=float)
    d = d / np.linalg.norm(d)
    sa, sb = settings.shadow_grid()
    cell_area = compiled.l_area / (sa * sb)
    if hit.is_mirror:
        n = np.asarray(hit.normal, dtype=float)
        rd = d - 2.0 * float(np.dot(d, n)) * n
        if depth >= settings.max_bounce:
            return np.array(kernels._env_color(compiled.env, rd[0], rd[1], rd[2]))
        return np.array(kernels._trace_radiance(
            p[0], p[1], p[2], rd[0], rd[1], rd[2], depth + 1,
            settings.max_bounce, False,
            *compiled.radiance_args(cell_area, sa, sb)))
    n = np.asarray(hit.normal, dtype=float)
    e = kernels._direct_irradiance(p[0], p[1], p[2], n[0], n[1], n[2],
                                   compiled.l_c, compiled.l_u, compiled.l_v,
                                   compiled.l_n, compiled.l_rad, cell_area, sa, sb,
                                   compiled.tri_v, compiled.tri_mat, compiled.mat_kind,
                                   compiled.node_min, compiled.node_max,
                                   compiled.node_left, compiled.node_right,
                                   compiled.node_count)
    albedo = np.asarray(hit.albedo, dtype=float)
    return albedo * (np.array(e) / math.pi + compiled.amb)
