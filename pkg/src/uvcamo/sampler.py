"""UV map <-> facet texture tensor sampling, forward and backward.

Two sampling routes produce the (nf, ts, ts, ts, 3) facet texture tensor
from a UV map:

* tensor traversal: iterate texels and bilinearly gather from the UV map.
  UV pixels that no texel projection lands near receive no gradient.
* UV traversal: iterate UV pixels and scatter each owned pixel's RGB into
  the eight texels around its projection, then normalize per texel by the
  accumulated weight. Every owned pixel receives gradient.

Texels that receive zero scatter weight are back-filled with the tensor-
traversal read (and route gradient through its adjoint) so the tensor stays
fully populated and differentiable. The coverage analyzer reports which UV
pixels a given route can actually optimize.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import imgio, kernels
from .geometry import FacetUVIndex, Mesh, UVMap, build_uv_index


@dataclass(frozen=True)
class FacetTextureTensor:
    """Face-aligned texture cube per facet: (nf, ts, ts, ts, 3) float64."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.ndim != 5 or v.shape[1] != v.shape[2] or v.shape[2] != v.shape[3] or v.shape[4] != 3:
            raise ValueError(f"texture tensor must be (nf, ts, ts, ts, 3), got {v.shape}")
        if v.shape[1] < 2:
            raise ValueError("texture size must be at least 2")
        object.__setattr__(self, "values", v)

    @property
    def facet_count(self) -> int:
        return self.values.shape[0]

    @property
    def texture_size(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class WeightTensor:
    """Scatter accumulation weights: (nf, ts, ts, ts) float64, all >= 0.

    An entry is zero iff no UV pixel distributed mass to that texel.
    """

    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 4:
            raise ValueError(f"weight tensor must be (nf, ts, ts, ts), got {w.shape}")
        object.__setattr__(self, "weights", w)

    @property
    def covered(self) -> np.ndarray:
        return self.weights > 0.0


class SamplerMethod(str, Enum):
    TENSOR_TRAVERSAL = "tensor-traversal"
    UV_TRAVERSAL = "uv-traversal"


class CoverageFlag:
    UNOWNED = 0
    UNOPTIMIZED = 1
    OPTIMIZED = 2


@dataclass(frozen=True)
class CoverageMap:
    """Per UV pixel: can the chosen sampling route optimize it?

    flags: (wt, ht) uint8 of CoverageFlag values. A pixel is OPTIMIZED iff
    the route's backward pass deposits a nonzero gradient there for an
    all-ones upstream gradient; unowned pixels are always UNOWNED.
    """

    flags: np.ndarray

    @property
    def owned_count(self) -> int:
        return int(np.count_nonzero(self.flags != CoverageFlag.UNOWNED))

    @property
    def optimized_count(self) -> int:
        return int(np.count_nonzero(self.flags == CoverageFlag.OPTIMIZED))

    @property
    def unoptimized_count(self) -> int:
        return int(np.count_nonzero(self.flags == CoverageFlag.UNOPTIMIZED))

    def summary(self) -> dict:
        return {
            "owned": self.owned_count,
            "optimized": self.optimized_count,
            "unoptimized": self.unoptimized_count,
        }

    def save_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.summary(), fh, indent=2)
            fh.write("\n")

    def save_png(self, path) -> None:
        """Heatmap: OPTIMIZED white, UNOPTIMIZED red, UNOWNED black."""
        palette = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [1.0, 1.0, 1.0]])
        image = palette[self.flags]
        imgio.save_image(path, np.swapaxes(image, 0, 1))


def project_facet_point(
    mesh: Mesh, facet: int, x: int, y: int, z: int, ts: int, width: int, height: int
):
    """Project texel (x, y, z) of a facet onto the UV map, in pixel coordinates.

    Barycentric weights are (x, y, z) / (x + y + z) over the facet's UV
    vertices; the all-zero texel maps to the first vertex. Pixel coordinate
    p corresponds to UV coordinate (p + 0.5) / dimension.
    """
    if not 0 <= facet < mesh.facet_count:
        raise ValueError(f"facet {facet} out of range")
    if not all(0 <= c < ts for c in (x, y, z)):
        raise ValueError(f"texel ({x}, {y}, {z}) out of range for ts={ts}")
    total = x + y + z
    if total == 0:
        weights = np.array([1.0, 0.0, 0.0])
    else:
        weights = np.array([x, y, z], dtype=np.float64) / total
    u, v = weights @ mesh.facet_uvs[facet]
    return u * width - 0.5, v * height - 0.5


def sample_tensor_traversal(uv: UVMap, mesh: Mesh, ts: int) -> FacetTextureTensor:
    """Sample the facet texture tensor by traversing texels (bilinear gather)."""
    values = kernels.gather_texels(
        np.ascontiguousarray(uv.pixels), np.ascontiguousarray(mesh.facet_uvs), ts
    )
    return FacetTextureTensor(values)


def backward_tensor_traversal(upstream: np.ndarray, mesh: Mesh, uv_dims) -> np.ndarray:
    """Gradient of sample_tensor_traversal w.r.t. the UV map.

    Each texel's upstream gradient scatters to the four UV pixels it read
    from, with the forward bilinear weights.
    """
    width, height = uv_dims
    upstream = np.ascontiguousarray(upstream, dtype=np.float64)
    if upstream.ndim != 5 or upstream.shape[0] != mesh.facet_count or upstream.shape[4] != 3:
        raise ValueError(
            f"upstream shape {upstream.shape} does not match (nf={mesh.facet_count}, ts, ts, ts, 3)"
        )
    return kernels.gather_texels_grad(
        upstream, np.ascontiguousarray(mesh.facet_uvs), width, height
    )


def sample_uv_traversal(uv: UVMap, index: FacetUVIndex, ts: int):
    """Sample the facet texture tensor by traversing UV pixels (scatter + normalize).

    Each owned pixel's RGB is distributed over the eight texels surrounding
    its projection at barycentric * (ts - 1); accumulated values are divided
    by the accumulated weights. Texels with zero weight are back-filled with
    the tensor-traversal read. Returns (tensor, weights).
    """
    if (index.width, index.height) != (uv.width, uv.height):
        raise ValueError(
            f"index built for {index.width}x{index.height}, UV map is {uv.width}x{uv.height}"
        )
    facet_uvs = index.require_facet_uvs()
    pixels = np.ascontiguousarray(uv.pixels)
    raw, weights = kernels.scatter_pixels(
        pixels, index.owner, index.bary, index.facet_count, ts
    )
    covered = weights > 0.0
    values = np.where(covered[..., None], raw / np.where(covered, weights, 1.0)[..., None], 0.0)
    if not covered.all():
        fill = kernels.gather_texels(pixels, np.ascontiguousarray(facet_uvs), ts)
        values = np.where(covered[..., None], values, fill)
    return FacetTextureTensor(values), WeightTensor(weights)


def backward_uv_traversal(
    upstream: np.ndarray, index: FacetUVIndex, weights: WeightTensor, ts: int
) -> np.ndarray:
    """Gradient of sample_uv_traversal w.r.t. the UV map.

    Owned pixels gather upstream * w_i / W over their eight texels;
    back-filled (zero-weight) texels route their gradient through the
    tensor-traversal adjoint instead.
    """
    upstream = np.ascontiguousarray(upstream, dtype=np.float64)
    expected = (index.facet_count, ts, ts, ts, 3)
    if upstream.shape != expected:
        raise ValueError(f"upstream shape {upstream.shape} does not match {expected}")
    if weights.weights.shape != expected[:4]:
        raise ValueError(
            f"stale weight tensor: shape {weights.weights.shape} does not match {expected[:4]}"
        )
    grad = kernels.scatter_pixels_grad(upstream, index.owner, index.bary, weights.weights, ts)
    uncovered = ~weights.covered
    if uncovered.any():
        fill_upstream = np.where(uncovered[..., None], upstream, 0.0)
        grad = grad + kernels.gather_texels_grad(
            np.ascontiguousarray(fill_upstream),
            np.ascontiguousarray(index.require_facet_uvs()),
            index.width,
            index.height,
        )
    return grad


def coverage_map(mesh: Mesh, uv_dims, ts: int, method: SamplerMethod) -> CoverageMap:
    """Classify UV pixels by whether the chosen route's backward pass reaches them.

    Runs the route's backward pass with an all-ones upstream gradient; owned
    pixels with any nonzero gradient channel are OPTIMIZED, other owned
    pixels UNOPTIMIZED, unowned pixels UNOWNED.
    """
    width, height = uv_dims
    method = SamplerMethod(method)
    index = build_uv_index(mesh, width, height)
    ones = np.ones((mesh.facet_count, ts, ts, ts, 3))
    if method is SamplerMethod.UV_TRAVERSAL:
        _, weights = sample_uv_traversal(UVMap.constant(width, height), index, ts)
        grad = backward_uv_traversal(ones, index, weights, ts)
    else:
        grad = backward_tensor_traversal(ones, mesh, uv_dims)
    reached = np.abs(grad).sum(axis=2) > 0.0
    flags = np.full((width, height), CoverageFlag.UNOWNED, dtype=np.uint8)
    flags[index.owned & reached] = CoverageFlag.OPTIMIZED
    flags[index.owned & ~reached] = CoverageFlag.UNOPTIMIZED
    return CoverageMap(flags)
