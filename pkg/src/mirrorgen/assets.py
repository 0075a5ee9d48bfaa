"""Mesh/texture loading and the object catalog.

The catalog is a directory with a ``catalog.json`` index: a JSON array of
entries ``{"id", "path", "category", "base_color" | "texture",
"tiling"?}``. Entries with category ``"floor"`` are floor textures (path
points at an 8-bit RGB PNG); every other entry is a Wavefront OBJ mesh.
Paths are resolved relative to the index file.
"""

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
from PIL import Image

from .errors import EmptyCategory, ParseError, UnknownAsset, UnsupportedFeature
from .geometry import Aabb

# Directives read by the OBJ subset; grouping/material statements are
# accepted and ignored, anything else is out of subset.
_OBJ_HANDLED = {"v", "vn", "vt", "f"}
_OBJ_IGNORED = {"o", "g", "s", "usemtl", "mtllib"}


@dataclass
class ObjectAsset:
    """Triangle mesh with optional per-corner normals/uvs and a category.

    ``triangles`` indexes ``vertices``; when normals or uvs are present
    they are corner-aligned with ``vertices`` (the loader splits shared
    positions as needed), so one index array addresses all attributes.
    """

    id: str
    category: str
    vertices: np.ndarray            # (N, 3)
    triangles: np.ndarray           # (T, 3) int
    normals: Optional[np.ndarray] = None   # (N, 3) unit, or None
    uvs: Optional[np.ndarray] = None       # (N, 2), or None
    base_color: np.ndarray = field(default_factory=lambda: np.array([0.7, 0.7, 0.7]))
    texture: Optional[str] = None   # key into Catalog.textures

    @property
    def aabb(self) -> Aabb:
        return Aabb.from_points(self.vertices)


@dataclass
class FloorTexture:
    id: str
    pixels: np.ndarray   # (H, W, 3) uint8
    tiling: float        # repeats per world unit

    def __post_init__(self):
        h, w = self.pixels.shape[:2]
        if h < 1 or w < 1 or self.tiling <= 0:
            raise ValueError(f"floor texture {self.id}: bad size or tiling")


@dataclass
class Catalog:
    """Immutable asset index; safe for concurrent reads after loading."""

    assets: Dict[str, ObjectAsset]
    by_category: Dict[str, List[str]]
    floor_textures: Dict[str, FloorTexture]
    textures: Dict[str, np.ndarray] = field(default_factory=dict)


def _parse_floats(parts, count, path, line_no):
    if len(parts) < count:
        raise ParseError(path, line_no, f"expected {count} numbers, got {len(parts)}")
    try:
        return [float(x) for x in parts[:count]]
    except ValueError as exc:
        raise ParseError(path, line_no, f"bad number: {exc}") from None


def _resolve_index(idx_str, n, path, line_no):
    """1-based OBJ index (negative = relative to end) -> 0-based."""
    idx = int(idx_str)
    if idx > 0:
        idx -= 1
    elif idx < 0:
        idx += n
    else:
        raise ParseError(path, line_no, "index 0 is not valid in OBJ")
    if not 0 <= idx < n:
        raise ParseError(path, line_no, f"index {idx_str} out of range (have {n})")
    return idx


def load_obj(path) -> ObjectAsset:
    """Load the supported OBJ subset: v/vn/vt and polygonal f records.

    Convex polygons are fan-triangulated. Faces may mix v, v/vt, v//vn and
    v/vt/vn corner forms; missing normals are filled with the face normal.
    Positions shared between corners with different vt/vn indices are
    duplicated so every attribute is corner-aligned.
    """
    path = Path(path)
    positions, normals_in, uvs_in = [], [], []
    corners = {}            # (vi, ti, ni) -> output index
    out_pos, out_uv, out_nrm = [], [], []
    tri_corners = []        # (corner_idx, corner_idx, corner_idx, has_normal)
    any_uv = any_nrm = False

    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for line_no, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            key = parts[0]
            if key == "v":
                positions.append(_parse_floats(parts[1:], 3, path, line_no))
            elif key == "vn":
                normals_in.append(_parse_floats(parts[1:], 3, path, line_no))
            elif key == "vt":
                uvs_in.append(_parse_floats(parts[1:], 2, path, line_no))
            elif key == "f":
                if len(parts) < 4:
                    raise ParseError(path, line_no, "face needs at least 3 corners")
                face = []
                for token in parts[1:]:
                    fields = token.split("/")
                    vi = _resolve_index(fields[0], len(positions), path, line_no)
                    ti = ni = -1
                    if len(fields) > 1 and fields[1]:
                        ti = _resolve_index(fields[1], len(uvs_in), path, line_no)
                    if len(fields) > 2 and fields[2]:
                        ni = _resolve_index(fields[2], len(normals_in), path, line_no)
                    ckey = (vi, ti, ni)
                    if ckey not in corners:
                        corners[ckey] = len(out_pos)
                        out_pos.append(positions[vi])
                        out_uv.append(uvs_in[ti] if ti >= 0 else (0.0, 0.0))
                        out_nrm.append(normals_in[ni] if ni >= 0 else (0.0, 0.0, 0.0))
                    face.append((corners[ckey], ni >= 0))
                    any_uv |= ti >= 0
                    any_nrm |= ni >= 0
                for k in range(1, len(face) - 1):
                    tri_corners.append((face[0], face[k], face[k + 1]))
            elif key in _OBJ_IGNORED:
                continue
            else:
                raise UnsupportedFeature(path, line_no, f"directive {key!r} is outside the OBJ subset")

    if not tri_corners:
        raise ParseError(path, 0, "no faces found")

    verts = np.asarray(out_pos, dtype=float)
    tris = np.array([[a[0], b[0], c[0]] for a, b, c in tri_corners], dtype=np.int32)
    uvs = np.asarray(out_uv, dtype=float) if any_uv else None

    nrm = np.asarray(out_nrm, dtype=float)
    for (a, b, c) in tri_corners:
        if not (a[1] and b[1] and c[1]):
            fa, fb, fc = verts[a[0]], verts[b[0]], verts[c[0]]
            fn = np.cross(fb - fa, fc - fa)
            ln = np.linalg.norm(fn)
            fn = fn / ln if ln > 1e-15 else np.array([0.0, 0.0, 1.0])
            for corner, has in (a, b, c):
                if not has and np.linalg.norm(nrm[corner]) < 1e-12:
                    nrm[corner] = fn
    lens = np.linalg.norm(nrm, axis=1)
    lens[lens < 1e-12] = 1.0
    nrm = nrm / lens[:, None]

    return ObjectAsset(id=path.stem, category="", vertices=verts, triangles=tris,
                       normals=nrm, uvs=uvs)


def save_obj(asset: ObjectAsset, path) -> None:
    """Write a mesh back out as OBJ (v/vt/vn plus corner-aligned faces)."""
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for p in asset.vertices:
            fh.write(f"v {p[0]:.9g} {p[1]:.9g} {p[2]:.9g}\n")
        if asset.uvs is not None:
            for t in asset.uvs:
                fh.write(f"vt {t[0]:.9g} {t[1]:.9g}\n")
        if asset.normals is not None:
            for n in asset.normals:
                fh.write(f"vn {n[0]:.9g} {n[1]:.9g} {n[2]:.9g}\n")
        has_t, has_n = asset.uvs is not None, asset.normals is not None
        for tri in asset.triangles:
            ids = []
            for i in tri:
                j = int(i) + 1
                if has_t and has_n:
                    ids.append(f"{j}/{j}/{j}")
                elif has_t:
                    ids.append(f"{j}/{j}")
                elif has_n:
                    ids.append(f"{j}//{j}")
                else:
                    ids.append(str(j))
            fh.write("f " + " ".join(ids) + "\n")


def load_texture(path) -> np.ndarray:
    """8-bit RGB PNG as an (H, W, 3) uint8 array."""
    img = Image.open(path).convert("RGB")
    return np.asarray(img, dtype=np.uint8)


def load_catalog(index_path) -> Catalog:
    """Load a catalog.json index and every asset it references."""
    index_path = Path(index_path)
    root = index_path.parent
    with open(index_path, "r", encoding="utf-8") as fh:
        try:
            entries = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(index_path, exc.lineno, exc.msg) from None

    assets: Dict[str, ObjectAsset] = {}
    by_category: Dict[str, List[str]] = {}
    floors: Dict[str, FloorTexture] = {}
    textures: Dict[str, np.ndarray] = {}

    for i, entry in enumerate(entries):
        for req in ("id", "path", "category"):
            if req not in entry:
                raise ParseError(index_path, 0, f"entry {i} missing {req!r}")
        aid, category = entry["id"], entry["category"]
        if not category:
            raise ParseError(index_path, 0, f"entry {aid!r} has an empty category")
        apath = root / entry["path"]
        if category == "floor":
            floors[aid] = FloorTexture(id=aid, pixels=load_texture(apath),
                                       tiling=float(entry.get("tiling", 1.0)))
            continue
        asset = load_obj(apath)
        asset.id = aid
        asset.category = category
        if "texture" in entry:
            tpath = root / entry["texture"]
            textures[aid] = load_texture(tpath)
            asset.texture = aid
        elif "base_color" in entry:
            asset.base_color = np.asarray(entry["base_color"], dtype=float)
        assets[aid] = asset
        by_category.setdefault(category, []).append(aid)

    for ids in by_category.values():
        ids.sort()
    return Catalog(assets=assets, by_category=by_category,
                   floor_textures=floors, textures=textures)


def semantic_category(asset_id: str, catalog: Catalog) -> str:
    """Category label stored for an asset id."""
    try:
        return catalog.assets[asset_id].category
    except KeyError:
        raise UnknownAsset(f"unknown asset id {asset_id!r}") from None


def sample_asset(category: str, catalog: Catalog, rng: np.random.Generator) -> ObjectAsset:
    """Uniform draw over the category's (sorted) id list."""
    ids = catalog.by_category.get(category, [])
    if not ids:
        raise EmptyCategory(f"no assets in category {category!r}")
    return catalog.assets[ids[int(rng.integers(0, len(ids)))]]


# Default manual pairing for multi-object scenes (symmetric closure of the
# curated pairs; overridable through a JSON mapping file).
DEFAULT_PAIRING = {
    "chair": ["table"],
    "table": ["chair", "sofa"],
    "sofa": ["table"],
    "bed": ["lamp"],
    "lamp": ["bed", "stool"],
    "stool": ["lamp"],
    "cabinet": ["rug"],
    "rug": ["cabinet"],
    "cart": ["shelf"],
    "shelf": ["cart"],
}


@dataclass
class PairingTable:
    """Category -> categories it may share a scene with."""

    pairs: Dict[str, List[str]]

    def __post_init__(self):
        for cat, lst in self.pairs.items():
            if not lst:
                raise ValueError(f"pairing for {cat!r} is empty")

    @classmethod
    def default(cls) -> "PairingTable":
        return cls({k: list(v) for k, v in DEFAULT_PAIRING.items()})

    @classmethod
    def load(cls, path) -> "PairingTable":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        return cls({str(k): [str(x) for x in v] for k, v in data.items()})

    def validate_against(self, catalog: Catalog) -> None:
        """Every referenced category must exist in the catalog."""
        known = set(catalog.by_category)
        for cat, lst in self.pairs.items():
            missing = [c for c in [cat] + lst if c not in known]
            if missing:
                raise UnknownAsset(f"pairing references unknown categories: {missing}")

    def paired_categories(self, category: str) -> List[str]:
        return self.pairs.get(category, [])
