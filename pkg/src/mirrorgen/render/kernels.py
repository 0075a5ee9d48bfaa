"""Numba kernels for the Whitted-style renderer.

Everything here is deterministic: anti-aliasing offsets and area-light
sample points are fixed stratified grids (pure functions of the sample
index), floating point stays at strict IEEE double precision, and pixels
are written independently, so results do not depend on the thread count.

Ray-triangle intersection treats triangles as closed sets (boundary hits
accepted) and keeps the first hit found at the smallest t along a fixed
traversal order, so edge-grazing rays resolve identically on every run.
"""

import math

import numpy as np
from numba import njit, prange

INV_PI = 1.0 / math.pi
EPS_RAY = 1e-4
_BARY_EPS = 1e-9

# material kinds
MAT_LAMBERT = 0
MAT_TEXTURED = 1
MAT_MIRROR = 2

# instance ids
INST_SKY = 0
INST_FLOOR = 1
INST_MIRROR = 2
INST_FRAME = 3
INST_OBJECT0 = 10


@njit(cache=True)
def _safe_inv(d):
    if d > 1e-12 or d < -1e-12:
        return 1.0 / d
    return 1e12 if d >= 0.0 else -1e12


@njit(cache=True)
def _ray_aabb(ox, oy, oz, ix, iy, iz, bmin, bmax, tmax):
    t1 = (bmin[0] - ox) * ix
    t2 = (bmax[0] - ox) * ix
    tn = min(t1, t2)
    tf = max(t1, t2)
    t1 = (bmin[1] - oy) * iy
    t2 = (bmax[1] - oy) * iy
    tn = max(tn, min(t1, t2))
    tf = min(tf, max(t1, t2))
    t1 = (bmin[2] - oz) * iz
    t2 = (bmax[2] - oz) * iz
    tn = max(tn, min(t1, t2))
    tf = min(tf, max(t1, t2))
    return tf >= tn and tf > 0.0 and tn < tmax


@njit(cache=True)
def _bvh_first_hit(ox, oy, oz, dx, dy, dz, tmin, tmax, skip_mirror,
                   tri_v, tri_mat, mat_kind,
                   node_min, node_max, node_left, node_right, node_count):
    """Nearest intersection; returns (t, tri_index, u, v), tri_index < 0 on miss."""
    ix = _safe_inv(dx)
    iy = _safe_inv(dy)
    iz = _safe_inv(dz)
    stack = np.empty(64, np.int32)
    stack[0] = 0
    sp = 1
    best_t = tmax
    best_tri = -1
    best_u = 0.0
    best_v = 0.0
    while sp > 0:
        sp -= 1
        ni = stack[sp]
        if not _ray_aabb(ox, oy, oz, ix, iy, iz, node_min[ni], node_max[ni], best_t):
            continue
        cnt = node_count[ni]
        if cnt > 0:
            start = node_left[ni]
            for k in range(start, start + cnt):
                if skip_mirror and mat_kind[tri_mat[k]] == MAT_MIRROR:
                    continue
                ax = tri_v[k, 0, 0]
                ay = tri_v[k, 0, 1]
                az = tri_v[k, 0, 2]
                e1x = tri_v[k, 1, 0] - ax
                e1y = tri_v[k, 1, 1] - ay
                e1z = tri_v[k, 1, 2] - az
                e2x = tri_v[k, 2, 0] - ax
                e2y = tri_v[k, 2, 1] - ay
                e2z = tri_v[k, 2, 2] - az
                px = dy * e2z - dz * e2y
                py = dz * e2x - dx * e2z
                pz = dx * e2y - dy * e2x
                det = e1x * px + e1y * py + e1z * pz
                if -1e-12 < det < 1e-12:
                    continue
                inv = 1.0 / det
                tx = ox - ax
                ty = oy - ay
                tz = oz - az
                u = (tx * px + ty * py + tz * pz) * inv
                if u < -_BARY_EPS or u > 1.0 + _BARY_EPS:
                    continue
                qx = ty * e1z - tz * e1y
                qy = tz * e1x - tx * e1z
                qz = tx * e1y - ty * e1x
                v = (dx * qx + dy * qy + dz * qz) * inv
                if v < -_BARY_EPS or u + v > 1.0 + _BARY_EPS:
                    continue
                t = (e2x * qx + e2y * qy + e2z * qz) * inv
                if t <= tmin or t >= best_t:
                    continue
                best_t = t
                best_tri = k
                best_u = u
                best_v = v
            continue
        stack[sp] = node_left[ni]
        sp += 1
        stack[sp] = node_right[ni]
        sp += 1
    return best_t, best_tri, best_u, best_v


@njit(cache=True)
def _bvh_occluded(ox, oy, oz, dx, dy, dz, tmin, tmax,
                  tri_v, tri_mat, mat_kind,
                  node_min, node_max, node_left, node_right, node_count):
    """Any-hit test for shadow rays. The mirror surface never occludes, so
    shadowing is identical whether or not the mirror is in the scene."""
    ix = _safe_inv(dx)
    iy = _safe_inv(dy)
    iz = _safe_inv(dz)
    stack = np.empty(64, np.int32)
    stack[0] = 0
    sp = 1
    while sp > 0:
        sp -= 1
        ni = stack[sp]
        if not _ray_aabb(ox, oy, oz, ix, iy, iz, node_min[ni], node_max[ni], tmax):
            continue
        cnt = node_count[ni]
        if cnt > 0:
            start = node_left[ni]
            for k in range(start, start + cnt):
                if mat_kind[tri_mat[k]] == MAT_MIRROR:
                    continue
                ax = tri_v[k, 0, 0]
                ay = tri_v[k, 0, 1]
                az = tri_v[k, 0, 2]
                e1x = tri_v[k, 1, 0] - ax
                e1y = tri_v[k, 1, 1] - ay
                e1z = tri_v[k, 1, 2] - az
                e2x = tri_v[k, 2, 0] - ax
                e2y = tri_v[k, 2, 1] - ay
                e2z = tri_v[k, 2, 2] - az
                px = dy * e2z - dz * e2y
                py = dz * e2x - dx * e2z
                pz = dx * e2y - dy * e2x
                det = e1x * px + e1y * py + e1z * pz
                if -1e-12 < det < 1e-12:
                    continue
                inv = 1.0 / det
                tx = ox - ax
                ty = oy - ay
                tz = oz - az
                u = (tx * px + ty * py + tz * pz) * inv
                if u < -_BARY_EPS or u > 1.0 + _BARY_EPS:
                    continue
                qx = ty * e1z - tz * e1y
                qy = tz * e1x - tx * e1z
                qz = tx * e1y - ty * e1x
                v = (dx * qx + dy * qy + dz * qz) * inv
                if v < -_BARY_EPS or u + v > 1.0 + _BARY_EPS:
                    continue
                t = (e2x * qx + e2y * qy + e2z * qz) * inv
                if tmin < t < tmax:
                    return True
            continue
        stack[sp] = node_left[ni]
        sp += 1
        stack[sp] = node_right[ni]
        sp += 1
    return False


@njit(cache=True)
def _env_color(env, dx, dy, dz):
    z = dz
    if z > 1.0:
        z = 1.0
    elif z < -1.0:
        z = -1.0
    h = env.shape[0]
    w = env.shape[1]
    r = int(math.acos(z) / math.pi * h)
    if r >= h:
        r = h - 1
    c = int((math.atan2(dy, dx) + math.pi) / (2.0 * math.pi) * w)
    if c >= w:
        c = w - 1
    return env[r, c, 0], env[r, c, 1], env[r, c, 2]


@njit(cache=True)
def _tex_color(tex_data, off, tw, th, u, v):
    """Bilinear lookup with wrap addressing on a flat (P, 3) texel array."""
    u = u - math.floor(u)
    v = v - math.floor(v)
    x = u * tw - 0.5
    y = (1.0 - v) * th - 0.5   # v=0 is the bottom row of the image
    x0 = int(math.floor(x))
    y0 = int(math.floor(y))
    fx = x - x0
    fy = y - y0
    x0m = x0 % tw
    x1m = (x0 + 1) % tw
    y0m = y0 % th
    y1m = (y0 + 1) % th
    r = 0.0
    g = 0.0
    b = 0.0
    i00 = off + y0m * tw + x0m
    i10 = off + y0m * tw + x1m
    i01 = off + y1m * tw + x0m
    i11 = off + y1m * tw + x1m
    w00 = (1.0 - fx) * (1.0 - fy)
    w10 = fx * (1.0 - fy)
    w01 = (1.0 - fx) * fy
    w11 = fx * fy
    r = tex_data[i00, 0] * w00 + tex_data[i10, 0] * w10 + tex_data[i01, 0] * w01 + tex_data[i11, 0] * w11
    g = tex_data[i00, 1] * w00 + tex_data[i10, 1] * w10 + tex_data[i01, 1] * w01 + tex_data[i11, 1] * w11
    b = tex_data[i00, 2] * w00 + tex_data[i10, 2] * w10 + tex_data[i01, 2] * w01 + tex_data[i11, 2] * w11
    return r, g, b


@njit(cache=True)
def _direct_irradiance(px, py, pz, nx, ny, nz,
                       l_c, l_u, l_v, l_n, l_rad, cell_area, shadow_a, shadow_b,
                       tri_v, tri_mat, mat_kind,
                       node_min, node_max, node_left, node_right, node_count):
    """Irradiance from the rectangular light via a stratified midpoint grid
    of shadow_a x shadow_b sample points with occlusion rays."""
    er = 0.0
    eg = 0.0
    eb = 0.0
    for i in range(shadow_a):
        su = 2.0 * (i + 0.5) / shadow_a - 1.0
        for j in range(shadow_b):
            sv = 2.0 * (j + 0.5) / shadow_b - 1.0
            sx = l_c[0] + l_u[0] * su + l_v[0] * sv
            sy = l_c[1] + l_u[1] * su + l_v[1] * sv
            sz = l_c[2] + l_u[2] * su + l_v[2] * sv
            wx = sx - px
            wy = sy - py
            wz = sz - pz
            r2 = wx * wx + wy * wy + wz * wz
            if r2 < 1e-12:
                continue
            r = math.sqrt(r2)
            wxn = wx / r
            wyn = wy / r
            wzn = wz / r
            cos_s = nx * wxn + ny * wyn + nz * wzn
            if cos_s <= 0.0:
                continue
            cos_l = -(wxn * l_n[0] + wyn * l_n[1] + wzn * l_n[2])
            if cos_l <= 0.0:
                continue
            sox = px + nx * EPS_RAY
            soy = py + ny * EPS_RAY
            soz = pz + nz * EPS_RAY
            if _bvh_occluded(sox, soy, soz, wxn, wyn, wzn, EPS_RAY, r - 2.0 * EPS_RAY,
                             tri_v, tri_mat, mat_kind,
                             node_min, node_max, node_left, node_right, node_count):
                continue
            g = cos_s * cos_l / r2 * cell_area
            er += l_rad[0] * g
            eg += l_rad[1] * g
            eb += l_rad[2] * g
    return er, eg, eb


@njit(cache=True)
def _trace_radiance(ox, oy, oz, dx, dy, dz, bounce, max_bounce, skip_mirror,
                    tri_v, tri_n, tri_uv, tri_inst, tri_mat,
                    node_min, node_max, node_left, node_right, node_count,
                    mat_albedo, mat_kind, mat_tex,
                    tex_data, tex_off, tex_w, tex_h,
                    env, amb,
                    l_c, l_u, l_v, l_n, l_rad, cell_area, shadow_a, shadow_b,
                    m_n, m_c, m_u, m_v, m_hw, m_hh):
    """Radiance along a ray: textured-Lambert surfaces under the area light
    plus environment ambient; the mirror aperture recurses specularly up to
    max_bounce and returns the environment color past the budget."""
    while True:
        t, tri, u, v = _bvh_first_hit(ox, oy, oz, dx, dy, dz, EPS_RAY, 1e30, skip_mirror,
                                      tri_v, tri_mat, mat_kind,
                                      node_min, node_max, node_left, node_right, node_count)
        if tri < 0:
            return _env_color(env, dx, dy, dz)
        px = ox + t * dx
        py = oy + t * dy
        pz = oz + t * dz
        mi = tri_mat[tri]
        kind = mat_kind[mi]
        if kind == MAT_MIRROR:
            la = (px - m_c[0]) * m_u[0] + (py - m_c[1]) * m_u[1] + (pz - m_c[2]) * m_u[2]
            lb = (px - m_c[0]) * m_v[0] + (py - m_c[1]) * m_v[1] + (pz - m_c[2]) * m_v[2]
            if abs(la) <= m_hw and abs(lb) <= m_hh:
                dn = dx * m_n[0] + dy * m_n[1] + dz * m_n[2]
                dx = dx - 2.0 * dn * m_n[0]
                dy = dy - 2.0 * dn * m_n[1]
                dz = dz - 2.0 * dn * m_n[2]
                if bounce >= max_bounce:
                    return _env_color(env, dx, dy, dz)
                ox = px
                oy = py
                oz = pz
                bounce += 1
                continue
            nxs = m_n[0]
            nys = m_n[1]
            nzs = m_n[2]
            if dx * nxs + dy * nys + dz * nzs > 0.0:
                nxs = -nxs
                nys = -nys
                nzs = -nzs
            ar = mat_albedo[mi, 0]
            ag = mat_albedo[mi, 1]
            ab = mat_albedo[mi, 2]
        else:
            w0 = 1.0 - u - v
            nxs = w0 * tri_n[tri, 0, 0] + u * tri_n[tri, 1, 0] + v * tri_n[tri, 2, 0]
            nys = w0 * tri_n[tri, 0, 1] + u * tri_n[tri, 1, 1] + v * tri_n[tri, 2, 1]
            nzs = w0 * tri_n[tri, 0, 2] + u * tri_n[tri, 1, 2] + v * tri_n[tri, 2, 2]
            ln = math.sqrt(nxs * nxs + nys * nys + nzs * nzs)
            if ln < 1e-12:
                nxs = 0.0
                nys = 0.0
                nzs = 1.0
            else:
                nxs /= ln
                nys /= ln
                nzs /= ln
            if dx * nxs + dy * nys + dz * nzs > 0.0:
                nxs = -nxs
                nys = -nys
                nzs = -nzs
            if kind == MAT_TEXTURED:
                ti = mat_tex[mi]
                uu = w0 * tri_uv[tri, 0, 0] + u * tri_uv[tri, 1, 0] + v * tri_uv[tri, 2, 0]
                vv = w0 * tri_uv[tri, 0, 1] + u * tri_uv[tri, 1, 1] + v * tri_uv[tri, 2, 1]
                ar, ag, ab = _tex_color(tex_data, tex_off[ti], tex_w[ti], tex_h[ti], uu, vv)
            else:
                ar = mat_albedo[mi, 0]
                ag = mat_albedo[mi, 1]
                ab = mat_albedo[mi, 2]
        er, eg, eb = _direct_irradiance(px, py, pz, nxs, nys, nzs,
                                        l_c, l_u, l_v, l_n, l_rad, cell_area,
                                        shadow_a, shadow_b,
                                        tri_v, tri_mat, mat_kind,
                                        node_min, node_max, node_left, node_right, node_count)
        return (ar * (er * INV_PI + amb[0]),
                ag * (eg * INV_PI + amb[1]),
                ab * (eb * INV_PI + amb[2]))


@njit(cache=True)
def _classify_instance(tri, tri_inst, tri_mat, mat_kind, px, py, pz, m_c, m_u, m_v, m_hw, m_hh):
    inst = tri_inst[tri]
    if mat_kind[tri_mat[tri]] == MAT_MIRROR:
        la = (px - m_c[0]) * m_u[0] + (py - m_c[1]) * m_u[1] + (pz - m_c[2]) * m_u[2]
        lb = (px - m_c[0]) * m_v[0] + (py - m_c[1]) * m_v[1] + (pz - m_c[2]) * m_v[2]
        if abs(la) <= m_hw and abs(lb) <= m_hh:
            return INST_MIRROR
        return INST_FRAME
    return inst


@njit(cache=True, parallel=True)
def geometry_kernel(cam_o, cam_r, cam_u, cam_f, tan_w, tan_h, width, height,
                    tri_v, tri_n, tri_uv, tri_inst, tri_mat,
                    node_min, node_max, node_left, node_right, node_count,
                    mat_albedo, mat_kind, mat_tex,
                    m_n, m_c, m_u, m_v, m_hw, m_hh,
                    out_depth, out_normal, out_inst, out_refl, out_mask):
    """Per-pixel ground truth from the pixel-center primary ray: camera-z
    depth, world shading normal, instance id, reflected-instance id and
    mirror mask."""
    for row in prange(height):
        for col in range(width):
            sx = (2.0 * (col + 0.5) / width - 1.0) * tan_w
            sy = (1.0 - 2.0 * (row + 0.5) / height) * tan_h
            dx = cam_f[0] + cam_r[0] * sx + cam_u[0] * sy
            dy = cam_f[1] + cam_r[1] * sx + cam_u[1] * sy
            dz = cam_f[2] + cam_r[2] * sx + cam_u[2] * sy
            ln = math.sqrt(dx * dx + dy * dy + dz * dz)
            dx /= ln
            dy /= ln
            dz /= ln
            t, tri, u, v = _bvh_first_hit(cam_o[0], cam_o[1], cam_o[2], dx, dy, dz,
                                          EPS_RAY, 1e30, False,
                                          tri_v, tri_mat, mat_kind,
                                          node_min, node_max, node_left, node_right, node_count)
            if tri < 0:
                out_depth[row, col] = np.inf
                out_normal[row, col, 0] = 0.0
                out_normal[row, col, 1] = 0.0
                out_normal[row, col, 2] = 0.0
                out_inst[row, col] = INST_SKY
                out_refl[row, col] = 0
                out_mask[row, col] = 0
                continue
            px = cam_o[0] + t * dx
            py = cam_o[1] + t * dy
            pz = cam_o[2] + t * dz
            inst = _classify_instance(tri, tri_inst, tri_mat, mat_kind,
                                      px, py, pz, m_c, m_u, m_v, m_hw, m_hh)
            out_depth[row, col] = t * (dx * cam_f[0] + dy * cam_f[1] + dz * cam_f[2])
            if mat_kind[tri_mat[tri]] == MAT_MIRROR:
                nxs = m_n[0]
                nys = m_n[1]
                nzs = m_n[2]
                if dx * nxs + dy * nys + dz * nzs > 0.0:
                    nxs = -nxs
                    nys = -nys
                    nzs = -nzs
            else:
                w0 = 1.0 - u - v
                nxs = w0 * tri_n[tri, 0, 0] + u * tri_n[tri, 1, 0] + v * tri_n[tri, 2, 0]
                nys = w0 * tri_n[tri, 0, 1] + u * tri_n[tri, 1, 1] + v * tri_n[tri, 2, 1]
                nzs = w0 * tri_n[tri, 0, 2] + u * tri_n[tri, 1, 2] + v * tri_n[tri, 2, 2]
                ln = math.sqrt(nxs * nxs + nys * nys + nzs * nzs)
                if ln < 1e-12:
                    nxs = 0.0
                    nys = 0.0
                    nzs = 1.0
                else:
                    nxs /= ln
                    nys /= ln
                    nzs /= ln
                if dx * nxs + dy * nys + dz * nzs > 0.0:
                    nxs = -nxs
                    nys = -nys
                    nzs = -nzs
            out_normal[row, col, 0] = nxs
            out_normal[row, col, 1] = nys
            out_normal[row, col, 2] = nzs
            out_inst[row, col] = inst
            out_mask[row, col] = 1 if inst == INST_MIRROR else 0
            refl = 0
            if inst == INST_MIRROR:
                dn = dx * m_n[0] + dy * m_n[1] + dz * m_n[2]
                rx = dx - 2.0 * dn * m_n[0]
                ry = dy - 2.0 * dn * m_n[1]
                rz = dz - 2.0 * dn * m_n[2]
                t2, tri2, u2, v2 = _bvh_first_hit(px, py, pz, rx, ry, rz,
                                                  EPS_RAY, 1e30, False,
                                                  tri_v, tri_mat, mat_kind,
                                                  node_min, node_max, node_left, node_right, node_count)
                if tri2 >= 0:
                    qx = px + t2 * rx
                    qy = py + t2 * ry
                    qz = pz + t2 * rz
                    refl = _classify_instance(tri2, tri_inst, tri_mat, mat_kind,
                                              qx, qy, qz, m_c, m_u, m_v, m_hw, m_hh)
            out_refl[row, col] = refl


@njit(cache=True, parallel=True)
def radiance_kernel(cam_o, cam_r, cam_u, cam_f, tan_w, tan_h, width, height,
                    spp_side, max_bounce, skip_mirror,
                    tri_v, tri_n, tri_uv, tri_inst, tri_mat,
                    node_min, node_max, node_left, node_right, node_count,
                    mat_albedo, mat_kind, mat_tex,
                    tex_data, tex_off, tex_w, tex_h,
                    env, amb,
                    l_c, l_u, l_v, l_n, l_rad, cell_area, shadow_a, shadow_b,
                    m_n, m_c, m_u, m_v, m_hw, m_hh,
                    out_rgb):
    """Linear radiance per pixel, averaged over a spp_side^2 stratified
    grid of subpixel sample positions."""
    spp = spp_side * spp_side
    for row in prange(height):
        for col in range(width):
            accr = 0.0
            accg = 0.0
            accb = 0.0
            for s in range(spp):
                ox_off = (s % spp_side + 0.5) / spp_side
                oy_off = (s // spp_side + 0.5) / spp_side
                sx = (2.0 * (col + ox_off) / width - 1.0) * tan_w
                sy = (1.0 - 2.0 * (row + oy_off) / height) * tan_h
                dx = cam_f[0] + cam_r[0] * sx + cam_u[0] * sy
                dy = cam_f[1] + cam_r[1] * sx + cam_u[1] * sy
                dz = cam_f[2] + cam_r[2] * sx + cam_u[2] * sy
                ln = math.sqrt(dx * dx + dy * dy + dz * dz)
                dx /= ln
                dy /= ln
                dz /= ln
                r, g, b = _trace_radiance(cam_o[0], cam_o[1], cam_o[2], dx, dy, dz,
                                          0, max_bounce, skip_mirror,
                                          tri_v, tri_n, tri_uv, tri_inst, tri_mat,
                                          node_min, node_max, node_left, node_right, node_count,
                                          mat_albedo, mat_kind, mat_tex,
                                          tex_data, tex_off, tex_w, tex_h,
                                          env, amb,
                                          l_c, l_u, l_v, l_n, l_rad, cell_area,
                                          shadow_a, shadow_b,
                                          m_n, m_c, m_u, m_v, m_hw, m_hh)
                accr += r
                accg += g
                accb += b
            out_rgb[row, col, 0] = accr / spp
            out_rgb[row, col, 1] = accg / spp
            out_rgb[row, col, 2] = accb / spp
