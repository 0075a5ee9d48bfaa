"""Bundled fixture assets: a small procedurally generated catalog of
furniture meshes and floor textures, so generation runs with zero
external downloads.

``write_fixture_catalog(dest)`` materializes OBJ meshes, PNG textures and
a ``catalog.json`` index into ``dest`` and returns the index path. The set
covers every category referenced by the default pairing table.
"""

import json
import math
from pathlib import Path

import numpy as np
from PIL import Image

from .assets import ObjectAsset, save_obj


class MeshBuilder:
    """Accumulates boxes and cylinders into one triangle mesh."""

    def __init__(self):
        self.verts = []
        self.tris = []
        self.uvs = []

    def _quad(self, a, b, c, d):
        self.tris.append((a, b, c))
        self.tris.append((a, c, d))

    def add_box(self, center, size):
        cx, cy, cz = center
        sx, sy, sz = size
        lo = (cx - sx / 2, cy - sy / 2, cz - sz / 2)
        hi = (cx + sx / 2, cy + sy / 2, cz + sz / 2)
        base = len(self.verts)
        corners = [
            (lo[0], lo[1], lo[2]), (hi[0], lo[1], lo[2]),
            (hi[0], hi[1], lo[2]), (lo[0], hi[1], lo[2]),
            (lo[0], lo[1], hi[2]), (hi[0], lo[1], hi[2]),
            (hi[0], hi[1], hi[2]), (lo[0], hi[1], hi[2]),
        ]
        self.verts.extend(corners)
        # each face maps the full texture tile
        self.uvs.extend([(0, 0), (1, 0), (1, 1), (0, 1)] * 2)
        for a, b, c, d in [(0, 3, 2, 1), (4, 5, 6, 7), (0, 1, 5, 4),
                           (2, 3, 7, 6), (0, 4, 7, 3), (1, 2, 6, 5)]:
            self._quad(base + a, base + b, base + c, base + d)

    def add_cylinder(self, center_xy, z0, radius, height, segments=20):
        cx, cy = center_xy
        base = len(self.verts)
        for k in range(segments):
            ang = 2.0 * math.pi * k / segments
            x, y = cx + radius * math.cos(ang), cy + radius * math.sin(ang)
            self.verts.append((x, y, z0))
            self.verts.append((x, y, z0 + height))
            self.uvs.append((k / segments, 0.0))
            self.uvs.append((k / segments, 1.0))
        for k in range(segments):
            a = base + 2 * k
            b = base + 2 * ((k + 1) % segments)
            self._quad(a, b, b + 1, a + 1)
        lo_c = len(self.verts)
        self.verts.append((cx, cy, z0))
        self.uvs.append((0.5, 0.5))
        hi_c = len(self.verts)
        self.verts.append((cx, cy, z0 + height))
        self.uvs.append((0.5, 0.5))
        for k in range(segments):
            a = base + 2 * k
            b = base + 2 * ((k + 1) % segments)
            self.tris.append((lo_c, b, a))
            self.tris.append((hi_c, a + 1, b + 1))

    def build(self, asset_id, category, with_uvs=False) -> ObjectAsset:
        return ObjectAsset(
            id=asset_id, category=category,
            vertices=np.asarray(self.verts, dtype=float),
            triangles=np.asarray(self.tris, dtype=np.int32),
            uvs=np.asarray(self.uvs, dtype=float) if with_uvs else None,
        )


def _chair(solid_back: bool) -> MeshBuilder:
    m = MeshBuilder()
    m.add_box((0, 0, 0.14), (0.46, 0.46, 0.20))              # plinth base
    m.add_box((0, 0, 0.38), (0.56, 0.56, 0.28))              # seat cushion
    if solid_back:
        m.add_box((0, -0.20, 0.76), (0.56, 0.16, 0.52))      # back
    else:
        m.add_box((0, -0.20, 0.94), (0.56, 0.16, 0.16))      # top rail
        m.add_box((0, -0.20, 0.64), (0.56, 0.14, 0.46))      # lower panel
    for sx in (-1, 1):
        m.add_box((sx * 0.22, 0.04, 0.60), (0.14, 0.48, 0.18))  # arms
    return m


def _table(width, depth, height) -> MeshBuilder:
    m = MeshBuilder()
    m.add_box((0, 0, height - 0.08), (width, depth, 0.16))
    m.add_box((0, 0, height - 0.26), (width - 0.14, depth - 0.14, 0.22))  # apron
    for sx in (-1, 1):
        for sy in (-1, 1):
            m.add_box((sx * (width / 2 - 0.09), sy * (depth / 2 - 0.09), (height - 0.16) / 2),
                      (0.14, 0.14, height - 0.16))
    return m


def _sofa() -> MeshBuilder:
    m = MeshBuilder()
    m.add_box((0, 0.05, 0.24), (1.6, 0.80, 0.48))            # base + cushions
    m.add_box((0, 0.30, 0.66), (1.6, 0.28, 0.50))            # back
    for sx in (-1, 1):
        m.add_box((sx * 0.70, 0.0, 0.52), (0.22, 0.90, 0.34))
    return m


def _bed() -> MeshBuilder:
    m = MeshBuilder()
    m.add_box((0, 0, 0.20), (2.0, 1.6, 0.40))
    m.add_box((0, 0, 0.51), (1.9, 1.5, 0.24))                # mattress
    m.add_box((-0.97, 0, 0.55), (0.14, 1.6, 1.10))           # headboard
    return m


def _lamp(base_r, base_h, pole_r, pole_h, shade_r, shade_h) -> MeshBuilder:
    m = MeshBuilder()
    m.add_cylinder((0, 0), 0.0, base_r, base_h)
    m.add_cylinder((0, 0), base_h, pole_r, pole_h)
    m.add_cylinder((0, 0), base_h + pole_h, shade_r, shade_h)
    return m


def _stool() -> MeshBuilder:
    m = MeshBuilder()
    m.add_cylinder((0, 0), 0.34, 0.26, 0.14)                 # seat
    m.add_cylinder((0, 0), 0.06, 0.17, 0.28)                 # column
    m.add_cylinder((0, 0), 0.0, 0.24, 0.06)                  # foot
    return m


def _cabinet() -> MeshBuilder:
    m = MeshBuilder()
    m.add_box((0, 0, 0.75), (0.85, 0.50, 1.50))
    for sx in (-1, 1):
        m.add_box((sx * 0.21, -0.26, 0.80), (0.38, 0.02, 1.30))  # door panels
        m.add_box((sx * 0.10, -0.285, 0.80), (0.03, 0.03, 0.18))  # handles
    return m


def _rug() -> MeshBuilder:
    # layered floor mat; kept thick so it stays visible from low view angles
    m = MeshBuilder()
    m.add_box((0, 0, 0.12), (1.15, 0.85, 0.24))
    m.add_box((0, 0, 0.33), (0.90, 0.62, 0.18))
    return m


def _cart() -> MeshBuilder:
    m = MeshBuilder()
    for sx in (-1, 1):
        for sy in (-1, 1):
            m.add_box((sx * 0.32, sy * 0.21, 0.46), (0.10, 0.10, 0.92))
    for z in (0.10, 0.48, 0.88):
        m.add_box((0, 0, z), (0.78, 0.56, 0.10))
    m.add_box((0.43, 0, 0.84), (0.06, 0.44, 0.06))            # handle
    return m


def _shelf() -> MeshBuilder:
    m = MeshBuilder()
    for sx in (-1, 1):
        m.add_box((sx * 0.42, 0, 0.65), (0.08, 0.52, 1.30))
    m.add_box((0, 0.235, 0.65), (0.92, 0.05, 1.30))           # back panel
    for k in range(4):
        m.add_box((0, 0, 0.10 + 0.365 * k), (0.92, 0.52, 0.09))
    return m


_FIXTURE_MESHES = [
    # (id, category, builder, base RGB, textured)
    ("chair_017", "chair", lambda: _chair(True), (0.62, 0.36, 0.22), False),
    ("chair_panel_003", "chair", lambda: _chair(False), (0.30, 0.32, 0.38), False),
    ("table_low_004", "table", lambda: _table(1.20, 0.80, 0.60), (0.55, 0.42, 0.30), False),
    ("table_side_009", "table", lambda: _table(0.62, 0.62, 0.55), (0.25, 0.26, 0.28), False),
    ("sofa_two_001", "sofa", _sofa, (0.42, 0.48, 0.55), False),
    ("bed_double_002", "bed", _bed, (0.60, 0.58, 0.52), False),
    ("lamp_floor_005", "lamp", lambda: _lamp(0.30, 0.10, 0.09, 0.62, 0.36, 0.52), (0.75, 0.70, 0.55), False),
    ("lamp_table_011", "lamp", lambda: _lamp(0.22, 0.08, 0.08, 0.26, 0.30, 0.34), (0.70, 0.55, 0.35), False),
    ("stool_round_006", "stool", _stool, (0.45, 0.30, 0.20), False),
    ("cabinet_tall_008", "cabinet", _cabinet, (0.35, 0.28, 0.24), False),
    ("rug_rect_010", "rug", _rug, (0.70, 0.30, 0.28), True),
    ("cart_kitchen_012", "cart", _cart, (0.50, 0.52, 0.54), False),
    ("shelf_open_013", "shelf", _shelf, (0.58, 0.44, 0.30), False),
]


def _floor_checker(size=256, cell=32):
    yy, xx = np.mgrid[0:size, 0:size]
    check = ((xx // cell + yy // cell) % 2).astype(np.uint8)
    img = np.empty((size, size, 3), np.uint8)
    img[check == 0] = (202, 198, 190)
    img[check == 1] = (66, 68, 74)
    return img


def _floor_boards(size=256, board=40):
    xx = np.arange(size)
    idx = xx // board
    shade = (35 * ((idx * 7919) % 5) / 4.0).astype(np.uint8)   # per-board tone
    row = np.stack([140 + shade, 100 + shade // 2, 62 + shade // 3], axis=-1).astype(np.uint8)
    img = np.repeat(row[None, :, :], size, axis=0)
    img[:, xx % board < 3] = (50, 36, 24)                       # seams
    return img


def _floor_slate(size=256, tile=64, grout=4):
    yy, xx = np.mgrid[0:size, 0:size]
    tone = (18 * ((xx // tile + 3 * (yy // tile)) % 3)).astype(np.uint8)
    img = np.stack([126 + tone, 126 + tone, 132 + tone], axis=-1).astype(np.uint8)
    seam = (xx % tile < grout) | (yy % tile < grout)
    img[seam] = (84, 86, 90)
    return img


def _rug_texture(size=128, stripe=16):
    yy = np.mgrid[0:size, 0:size][0]
    a = (yy // stripe) % 2 == 0
    img = np.empty((size, size, 3), np.uint8)
    img[a] = (178, 62, 52)
    img[~a] = (222, 206, 184)
    return img


_FIXTURE_FLOORS = [
    ("floor_checker", _floor_checker, 0.5),
    ("floor_boards", _floor_boards, 0.6),
    ("floor_slate", _floor_slate, 0.55),
]


def write_fixture_catalog(dest) -> Path:
    """Write the bundled meshes, textures and index; returns the index path."""
    dest = Path(dest)
    (dest / "meshes").mkdir(parents=True, exist_ok=True)
    (dest / "textures").mkdir(parents=True, exist_ok=True)
    entries = []
    for aid, category, build, color, textured in _FIXTURE_MESHES:
        mesh = build().build(aid, category, with_uvs=textured)
        save_obj(mesh, dest / "meshes" / f"{aid}.obj")
        entry = {"id": aid, "path": f"meshes/{aid}.obj", "category": category}
        if textured:
            tex_name = f"textures/{aid}.png"
            Image.fromarray(_rug_texture()).save(dest / tex_name)
            entry["texture"] = tex_name
        else:
            entry["base_color"] = list(color)
        entries.append(entry)
    for fid, gen, tiling in _FIXTURE_FLOORS:
        tex_name = f"textures/{fid}.png"
        Image.fromarray(gen()).save(dest / tex_name)
        entries.append({"id": fid, "path": tex_name, "category": "floor", "tiling": tiling})
    index = dest / "catalog.json"
    with open(index, "w", encoding="utf-8") as fh:
        json.dump(entries, fh, indent=2)
    return index
