"""Pure-NumPy kernel backend.

Vectorized twins of the compiled kernels in _core.pyx. Both backends share
the same numeric contract: float64 accumulation throughout, border-clamped
reads, interpolation corner weights of prod(1 - |corner - coord|) per axis,
and a fixed accumulation order so results are run-to-run identical.
"""

from __future__ import annotations

import numpy as np

# Corner enumeration order for trilinear scatter/gather: offsets from
# (floor a, floor b, floor c). The order only affects float accumulation
# order, but it is pinned so runs are reproducible.
TRILINEAR_CORNERS = np.array(
    [
        (0, 0, 0),
        (1, 0, 0),
        (0, 1, 0),
        (0, 0, 1),
        (1, 1, 0),
        (1, 0, 1),
        (0, 1, 1),
        (1, 1, 1),
    ],
    dtype=np.int64,
)

BILINEAR_CORNERS = np.array([(0, 0), (1, 0), (0, 1), (1, 1)], dtype=np.int64)


def texel_barycentrics(ts: int) -> np.ndarray:
    """(ts^3, 3) barycentric weights of texel (x, y, z): (x, y, z) / (x+y+z).

    The all-zero texel maps to the first vertex, i.e. weights (1, 0, 0).
    C-order enumeration over (x, y, z) matches reshape to (ts, ts, ts).
    """
    x, y, z = np.meshgrid(np.arange(ts), np.arange(ts), np.arange(ts), indexing="ij")
    coords = np.stack([x, y, z], axis=-1).reshape(-1, 3).astype(np.float64)
    total = coords.sum(axis=1)
    weights = np.empty_like(coords)
    zero = total == 0
    weights[zero] = (1.0, 0.0, 0.0)
    weights[~zero] = coords[~zero] / total[~zero, None]
    return weights


def _texel_uv_positions(facet_uvs: np.ndarray, ts: int, width: int, height: int):
    """Project every texel of every facet onto the UV map, in pixel coordinates."""
    bary = texel_barycentrics(ts)
    pos = np.einsum("tk,fkd->ftd", bary, facet_uvs)
    a = pos[..., 0] * width - 0.5
    b = pos[..., 1] * height - 0.5
    return a, b


def gather_texels(uv: np.ndarray, facet_uvs: np.ndarray, ts: int) -> np.ndarray:
    """Tensor-traversal sampling: per-texel bilinear gather from the UV map.

    Returns the (nf, ts, ts, ts, 3) facet texture tensor. Reads outside the
    map are clamped to the border.
    """
    width, height = uv.shape[0], uv.shape[1]
    nf = facet_uvs.shape[0]
    a, b = _texel_uv_positions(facet_uvs, ts, width, height)
    fa = np.floor(a)
    fb = np.floor(b)
    out = np.zeros(a.shape + (3,))
    for dx, dy in BILINEAR_CORNERS:
        cx = fa + dx
        cy = fb + dy
        w = (1.0 - np.abs(cx - a)) * (1.0 - np.abs(cy - b))
        px = np.clip(cx, 0, width - 1).astype(np.int64)
        py = np.clip(cy, 0, height - 1).astype(np.int64)
        out += w[..., None] * uv[px, py]
    return out.reshape(nf, ts, ts, ts, 3)


def gather_texels_grad(
    grad_tensor: np.ndarray, facet_uvs: np.ndarray, width: int, height: int
) -> np.ndarray:
    """Adjoint of gather_texels: scatter texel gradients to their 4 UV corners."""
    nf, ts = grad_tensor.shape[0], grad_tensor.shape[1]
    g = grad_tensor.reshape(nf, ts * ts * ts, 3)
    a, b = _texel_uv_positions(facet_uvs, ts, width, height)
    fa = np.floor(a)
    fb = np.floor(b)
    grad_uv = np.zeros((width * height, 3))
    for dx, dy in BILINEAR_CORNERS:
        cx = fa + dx
        cy = fb + dy
        w = (1.0 - np.abs(cx - a)) * (1.0 - np.abs(cy - b))
        px = np.clip(cx, 0, width - 1).astype(np.int64)
        py = np.clip(cy, 0, height - 1).astype(np.int64)
        np.add.at(grad_uv, (px * height + py).reshape(-1), (w[..., None] * g).reshape(-1, 3))
    return grad_uv.reshape(width, height, 3)


def _owned_texel_coords(owner: np.ndarray, bary: np.ndarray, ts: int):
    """Texel-space coordinates (a, b, c) = barycentric * (ts - 1) of owned pixels."""
    ox, oy = np.nonzero(owner >= 0)
    facet = owner[ox, oy].astype(np.int64)
    abc = bary[ox, oy] * (ts - 1.0)
    return ox, oy, facet, abc


def scatter_pixels(
    uv: np.ndarray, owner: np.ndarray, bary: np.ndarray, nf: int, ts: int
):
    """UV-traversal sampling scatter: accumulate pixel RGB into texel bins.

    Returns (raw_values, weights) of shapes (nf, ts, ts, ts, 3) and
    (nf, ts, ts, ts); normalization and zero-weight back-fill are the
    caller's job.
    """
    ox, oy, facet, abc = _owned_texel_coords(owner, bary, ts)
    rgb = uv[ox, oy]
    floor = np.floor(abc)
    raw = np.zeros(nf * ts * ts * ts * 3).reshape(-1, 3)
    weights = np.zeros(nf * ts * ts * ts)
    for offset in TRILINEAR_CORNERS:
        corner = floor + offset
        w = np.prod(1.0 - np.abs(corner - abc), axis=1)
        c = np.clip(corner, 0, ts - 1).astype(np.int64)
        idx = ((facet * ts + c[:, 0]) * ts + c[:, 1]) * ts + c[:, 2]
        np.add.at(weights, idx, w)
        np.add.at(raw, idx, w[:, None] * rgb)
    return raw.reshape(nf, ts, ts, ts, 3), weights.reshape(nf, ts, ts, ts)


def scatter_pixels_grad(
    grad_tensor: np.ndarray,
    owner: np.ndarray,
    bary: np.ndarray,
    weights: np.ndarray,
    ts: int,
) -> np.ndarray:
    """Adjoint of the scatter + per-texel normalization.

    Gradient at owned pixel (x, y) is sum_i grad[texel_i] * w_i / W[texel_i]
    over its eight corners; corners that received zero weight contribute
    nothing (their forward contribution was zero).
    """
    width, height = owner.shape
    nf = grad_tensor.shape[0]
    ox, oy, facet, abc = _owned_texel_coords(owner, bary, ts)
    floor = np.floor(abc)
    g = grad_tensor.reshape(-1, 3)
    wf = weights.reshape(-1)
    acc = np.zeros((len(ox), 3))
    for offset in TRILINEAR_CORNERS:
        corner = floor + offset
        w = np.prod(1.0 - np.abs(corner - abc), axis=1)
        c = np.clip(corner, 0, ts - 1).astype(np.int64)
        idx = ((facet * ts + c[:, 0]) * ts + c[:, 1]) * ts + c[:, 2]
        total = wf[idx]
        scale = np.where(w > 0.0, w / np.where(total > 0.0, total, 1.0), 0.0)
        acc += scale[:, None] * g[idx]
    grad_uv = np.zeros((width, height, 3))
    grad_uv[ox, oy] = acc
    return grad_uv


def rasterize_facets(clip_verts: np.ndarray, width: int, height: int):
    """Z-buffered rasterization of facets given clip-space vertex positions.

    clip_verts: (nf, 3, 4) float64. Returns (facet_id, bary): facet_id is
    (H, W) int32 with -1 for background; bary is (H, W, 3) float64
    perspective-correct barycentric coordinates of each covered pixel center.

    Coverage uses an inclusive edge rule (barycentric >= 0), facets are
    processed in ascending id order, and the depth test is strict less-than,
    so equal-depth ties resolve to the lower facet id. Facets with any vertex
    at or behind the camera plane are skipped entirely.
    """
    nf = clip_verts.shape[0]
    facet_id = np.full((height, width), -1, dtype=np.int32)
    bary = np.zeros((height, width, 3))
    zbuf = np.full((height, width), np.inf)

    for fid in range(nf):
        v = clip_verts[fid]
        w = v[:, 3]
        if np.any(w <= 1e-9):
            continue
        sx = (v[:, 0] / w + 1.0) * 0.5 * width
        sy = (1.0 - v[:, 1] / w) * 0.5 * height
        area2 = (sx[1] - sx[0]) * (sy[2] - sy[0]) - (sx[2] - sx[0]) * (sy[1] - sy[0])
        if area2 == 0.0:
            continue
        c0 = max(int(np.floor(sx.min() - 0.5)), 0)
        c1 = min(int(np.ceil(sx.max() - 0.5)), width - 1)
        r0 = max(int(np.floor(sy.min() - 0.5)), 0)
        r1 = min(int(np.ceil(sy.max() - 0.5)), height - 1)
        if c0 > c1 or r0 > r1:
            continue
        px = np.arange(c0, c1 + 1) + 0.5
        py = (np.arange(r0, r1 + 1) + 0.5)[:, None]
        lam0 = ((sy[1] - sy[2]) * (px - sx[2]) + (sx[2] - sx[1]) * (py - sy[2])) / area2
        lam1 = ((sy[2] - sy[0]) * (px - sx[2]) + (sx[0] - sx[2]) * (py - sy[2])) / area2
        lam2 = 1.0 - lam0 - lam1
        inside = (lam0 >= 0.0) & (lam1 >= 0.0) & (lam2 >= 0.0)
        if not inside.any():
            continue
        inv_w = lam0 / w[0] + lam1 / w[1] + lam2 / w[2]
        depth = 1.0 / inv_w
        tile = (slice(r0, r1 + 1), slice(c0, c1 + 1))
        update = inside & (depth < zbuf[tile])
        zbuf[tile][update] = depth[update]
        facet_id[tile][update] = fid
        bary[tile + (0,)][update] = (lam0 / w[0] * depth)[update]
        bary[tile + (1,)][update] = (lam1 / w[1] * depth)[update]
        bary[tile + (2,)][update] = (lam2 / w[2] * depth)[update]
    return facet_id, bary
