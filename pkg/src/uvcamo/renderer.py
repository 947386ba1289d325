"""Software rasterization of the facet-textured mesh, plus scene compositing.

The rasterizer z-buffers facets under a perspective camera and shades each
covered pixel with a trilinear read of the winning facet's texture cube at
barycentric * (ts - 1). Coverage is hard (no anti-aliasing) and depth ties
resolve to the lower facet id, so the texture-to-pixel map is linear and its
adjoint is exact. Visibility is treated as constant in the backward pass:
gradients flow only through texture values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .geometry import CameraTransform, Mesh, camera_matrix
from .sampler import FacetTextureTensor


@dataclass(frozen=True)
class RenderedImage:
    """(H, W, 3) pixels plus the boolean facet-coverage mask.

    Background pixels (mask false) are exactly zero before compositing.
    """

    pixels: np.ndarray
    foreground_mask: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.float64)
        m = np.asarray(self.foreground_mask, dtype=bool)
        if p.ndim != 3 or p.shape[2] != 3:
            raise ValueError(f"pixels must be (H, W, 3), got {p.shape}")
        if m.shape != p.shape[:2]:
            raise ValueError(f"mask shape {m.shape} does not match image {p.shape[:2]}")
        object.__setattr__(self, "pixels", p)
        object.__setattr__(self, "foreground_mask", m)

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True)
class RenderTape:
    """The linear map from texture values to rendered pixels.

    For each covered pixel: the winning facet, the eight texel ids (flattened
    into nf * ts^3) it interpolates, and their trilinear weights. Weights per
    pixel sum to 1.
    """

    rows: np.ndarray
    cols: np.ndarray
    facet_ids: np.ndarray
    texels: np.ndarray
    weights: np.ndarray
    facet_count: int
    texture_size: int
    height: int
    width: int

    def apply(self, tex_values: np.ndarray) -> np.ndarray:
        """Apply the linear texture-to-image map to a texture tensor."""
        self._check_tex_shape(tex_values.shape)
        flat = tex_values.reshape(-1, 3)
        image = np.zeros((self.height, self.width, 3))
        if len(self.rows):
            image[self.rows, self.cols] = (flat[self.texels] * self.weights[..., None]).sum(axis=1)
        return image

    def backward(self, upstream: np.ndarray) -> np.ndarray:
        """Adjoint: scatter upstream pixel gradients into texel gradients."""
        if upstream.shape != (self.height, self.width, 3):
            raise ValueError(
                f"upstream shape {upstream.shape} does not match image "
                f"({self.height}, {self.width}, 3)"
            )
        ts = self.texture_size
        grad = np.zeros((self.facet_count * ts * ts * ts, 3))
        if len(self.rows):
            contrib = upstream[self.rows, self.cols][:, None, :] * self.weights[..., None]
            np.add.at(grad, self.texels.reshape(-1), contrib.reshape(-1, 3))
        return grad.reshape(self.facet_count, ts, ts, ts, 3)

    def _check_tex_shape(self, shape) -> None:
        ts = self.texture_size
        if shape != (self.facet_count, ts, ts, ts, 3):
            raise ValueError(
                f"texture shape {shape} does not match tape "
                f"({self.facet_count}, {ts}, {ts}, {ts}, 3)"
            )


def _trilinear_footprint(facet: np.ndarray, abc: np.ndarray, ts: int):
    """Texel ids and weights of the 8-corner trilinear footprint at (a, b, c)."""
    n = len(facet)
    floor = np.floor(abc)
    texels = np.empty((n, 8), dtype=np.int64)
    weights = np.empty((n, 8))
    for i, offset in enumerate(kernels.TRILINEAR_CORNERS):
        corner = floor + offset
        weights[:, i] = np.prod(1.0 - np.abs(corner - abc), axis=1)
        c = np.clip(corner, 0, ts - 1).astype(np.int64)
        texels[:, i] = ((facet * ts + c[:, 0]) * ts + c[:, 1]) * ts + c[:, 2]
    return texels, weights


def rasterize(mesh: Mesh, tex: FacetTextureTensor, cam: CameraTransform):
    """Render the textured mesh under the camera. Returns (RenderedImage, RenderTape).

    Deterministic: identical inputs give bit-identical images. An empty image
    (all background) results when the mesh is behind the camera or projects
    outside the frame.
    """
    if tex.facet_count != mesh.facet_count:
        raise ValueError(
            f"texture built for {tex.facet_count} facets, mesh has {mesh.facet_count}"
        )
    mat = camera_matrix(cam)
    homo = np.concatenate([mesh.vertices, np.ones((len(mesh.vertices), 1))], axis=1)
    clip = homo @ mat.T
    facet_clip = np.ascontiguousarray(clip[mesh.facet_vertices])
    facet_id, bary = kernels.rasterize_facets(facet_clip, cam.image_width, cam.image_height)

    rows, cols = np.nonzero(facet_id >= 0)
    facets = facet_id[rows, cols].astype(np.int64)
    abc = bary[rows, cols] * (tex.texture_size - 1.0)
    texels, weights = _trilinear_footprint(facets, abc, tex.texture_size)
    tape = RenderTape(
        rows=rows,
        cols=cols,
        facet_ids=facets,
        texels=texels,
        weights=weights,
        facet_count=mesh.facet_count,
        texture_size=tex.texture_size,
        height=cam.image_height,
        width=cam.image_width,
    )
    image = RenderedImage(tape.apply(tex.values), facet_id >= 0)
    return image, tape


def backward_rasterize(tape: RenderTape, upstream: np.ndarray) -> np.ndarray:
    """Gradient of rasterize w.r.t. the facet texture tensor."""
    return tape.backward(np.asarray(upstream, dtype=np.float64))


def segment_scene(image: np.ndarray, mask: np.ndarray):
    """Split a scene image into (foreground, background) using its binary mask.

    The mask marks vehicle pixels with 0 and background with 1, so
    foreground = image * (1 - mask) and background = image * mask; the two
    parts sum back to the input exactly.
    """
    image = np.asarray(image, dtype=np.float64)
    mask = np.asarray(mask, dtype=np.float64)
    if image.ndim != 3 or image.shape[2] != 3:
        raise ValueError(f"image must be (H, W, 3), got {image.shape}")
    if mask.shape != image.shape[:2]:
        raise ValueError(f"mask shape {mask.shape} does not match image {image.shape[:2]}")
    if not np.isin(mask, (0.0, 1.0)).all():
        raise ValueError("mask must be binary (vehicle pixels 0, background 1)")
    foreground = image * (1.0 - mask)[..., None]
    background = image * mask[..., None]
    return foreground, background


def composite(rendered: RenderedImage, background: np.ndarray) -> np.ndarray:
    """Attach the rendered foreground onto the background image.

    The background is suppressed wherever the render's foreground mask is
    set, then the two are summed and clamped to [0, 1]; on foreground pixels
    the gradient w.r.t. the render is the identity (where unclamped).
    """
    background = np.asarray(background, dtype=np.float64)
    if background.shape != rendered.pixels.shape:
        raise ValueError(
            f"background shape {background.shape} does not match render {rendered.pixels.shape}"
        )
    masked = background * (~rendered.foreground_mask)[..., None]
    return np.clip(rendered.pixels + masked, 0.0, 1.0)


def composite_backward(rendered: RenderedImage, background: np.ndarray, upstream: np.ndarray) -> np.ndarray:
    """Gradient of composite w.r.t. the rendered image (visibility constant)."""
    masked = background * (~rendered.foreground_mask)[..., None]
    total = rendered.pixels + masked
    active = (total >= 0.0) & (total <= 1.0)
    return upstream * active
