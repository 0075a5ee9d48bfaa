"""Render pass bundle and its on-disk encoding.

PNG carries the 8-bit passes (rgb, mirror mask) and the 16-bit id passes
(instance, reflected_instance, widened to 16-bit grayscale). Depth and
normals are PFM: header ``Pf`` (grayscale) or ``PF`` (3-channel), ASCII
dimensions, scale line ``-1.0`` (little-endian), then float32 rows stored
bottom-to-top. Sky depth is the +inf sentinel.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

PASS_NAMES = ("rgb", "depth", "normal", "instance", "reflected_instance", "mirror_mask")


@dataclass
class RenderPasses:
    rgb: np.ndarray                  # (H, W, 3) uint8
    depth: np.ndarray                # (H, W) float32, +inf for sky
    normal: np.ndarray               # (H, W, 3) float32, unit at hits, 0 at sky
    instance: np.ndarray             # (H, W) uint16
    reflected_instance: np.ndarray   # (H, W) uint16
    mirror_mask: np.ndarray          # (H, W) bool

    @property
    def resolution(self):
        h, w = self.rgb.shape[:2]
        return (w, h)


def write_pfm(path, data: np.ndarray) -> None:
    """Write (H, W) or (H, W, 3) float32 data as little-endian PFM."""
    data = np.asarray(data, dtype=np.float32)
    if data.ndim == 2:
        header = b"Pf"
    elif data.ndim == 3 and data.shape[2] == 3:
        header = b"PF"
    else:
        raise ValueError("PFM data must be (H, W) or (H, W, 3)")
    h, w = data.shape[:2]
    with open(path, "wb") as fh:
        fh.write(header + b"\n")
        fh.write(f"{w} {h}\n".encode())
        fh.write(b"-1.0\n")
        fh.write(np.flipud(data).astype("<f4").tobytes())


def read_pfm(path) -> np.ndarray:
    """Read a PFM written by write_pfm (also accepts big-endian scale)."""
    with open(path, "rb") as fh:
        kind = fh.readline().strip()
        if kind not in (b"PF", b"Pf"):
            raise ValueError(f"{path}: not a PFM file")
        dims = fh.readline().split()
        w, h = int(dims[0]), int(dims[1])
        scale = float(fh.readline().strip())
        count = w * h * (3 if kind == b"PF" else 1)
        dtype = "<f4" if scale < 0 else ">f4"
        data = np.frombuffer(fh.read(count * 4), dtype=dtype).astype(np.float32)
    shape = (h, w, 3) if kind == b"PF" else (h, w)
    return np.flipud(data.reshape(shape)).copy()


def encode_passes(passes: RenderPasses, out_dir, basename: str) -> dict:
    """Write the six pass files ``{basename}_{pass}.{png|pfm}``; returns
    a mapping of pass name to path."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {}

    p = out_dir / f"{basename}_rgb.png"
    Image.fromarray(passes.rgb, mode="RGB").save(p)
    paths["rgb"] = p

    p = out_dir / f"{basename}_depth.pfm"
    write_pfm(p, passes.depth)
    paths["depth"] = p

    p = out_dir / f"{basename}_normal.pfm"
    write_pfm(p, passes.normal)
    paths["normal"] = p

    for name, img in (("instance", passes.instance),
                      ("reflected_instance", passes.reflected_instance)):
        p = out_dir / f"{basename}_{name}.png"
        Image.fromarray(img.astype(np.uint16)).save(p)
        paths[name] = p

    p = out_dir / f"{basename}_mirror_mask.png"
    Image.fromarray(np.where(passes.mirror_mask, 255, 0).astype(np.uint8), mode="L").save(p)
    paths["mirror_mask"] = p
    return paths


def read_pass_png(path, bits16: bool = False) -> np.ndarray:
    img = Image.open(path)
    if bits16:
        return np.asarray(img, dtype=np.uint16)
    return np.asarray(img)


def decode_passes(out_dir, basename: str) -> RenderPasses:
    """Inverse of encode_passes."""
    out_dir = Path(out_dir)
    rgb = read_pass_png(out_dir / f"{basename}_rgb.png")
    depth = read_pfm(out_dir / f"{basename}_depth.pfm")
    normal = read_pfm(out_dir / f"{basename}_normal.pfm")
    inst = read_pass_png(out_dir / f"{basename}_instance.png", bits16=True)
    refl = read_pass_png(out_dir / f"{basename}_reflected_instance.png", bits16=True)
    mask = read_pass_png(out_dir / f"{basename}_mirror_mask.png") > 127
    return RenderPasses(rgb=rgb, depth=depth, normal=normal, instance=inst,
                        reflected_instance=refl, mirror_mask=mask)
