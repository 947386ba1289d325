"""Mesh, UV-atlas, and camera primitives.

Coordinate conventions
----------------------
UV space is the unit square with u growing along texture x and v along
texture y. UV pixel (x, y) covers the square [x/wt, (x+1)/wt] x
[y/ht, (y+1)/ht]; its center is at ((x+0.5)/wt, (y+0.5)/ht). UVMap pixels
are stored as a (wt, ht, 3) array indexed [x, y], with y = 0 being the top
row of the saved PNG.

World space is right-handed with +z up. The camera orbits the origin:
azimuth 0 / elevation 0 / distance d places it at (d, 0, 0) looking at the
origin; elevation 90 places it directly above at (0, 0, d). Screen rows grow
downward, so NDC y = +1 maps to image row 0.

All types are immutable after construction (backing arrays are marked
read-only) and safe to share across threads.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import imgio
from .errors import ObjParseError

UV_INDEX_MAGIC = b"UVIX"
_UV_INDEX_RECORD = np.dtype([("owner", "<i4"), ("bary", "<f8", (3,))])


def _frozen_array(arr, dtype, shape_hint=None):
    out = np.array(arr, dtype=dtype, copy=True)
    if shape_hint is not None and out.ndim != len(shape_hint):
        raise ValueError(f"expected array with {len(shape_hint)} dims, got shape {out.shape}")
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Mesh:
    """Triangle mesh with per-corner UV coordinates.

    vertices: (nv, 3) float64 positions in model units.
    facet_vertices: (nf, 3) int32 indices into vertices.
    facet_uvs: (nf, 3, 2) float64 UV coordinates, each component in [0, 1].
    """

    vertices: np.ndarray
    facet_vertices: np.ndarray
    facet_uvs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "vertices", _frozen_array(self.vertices, np.float64))
        object.__setattr__(self, "facet_vertices", _frozen_array(self.facet_vertices, np.int32))
        object.__setattr__(self, "facet_uvs", _frozen_array(self.facet_uvs, np.float64))
        if self.vertices.ndim != 2 or self.vertices.shape[1] != 3:
            raise ValueError(f"vertices must be (nv, 3), got {self.vertices.shape}")
        if self.facet_vertices.ndim != 2 or self.facet_vertices.shape[1] != 3:
            raise ValueError(f"facet_vertices must be (nf, 3), got {self.facet_vertices.shape}")
        if self.facet_uvs.shape != (self.facet_vertices.shape[0], 3, 2):
            raise ValueError(f"facet_uvs must be (nf, 3, 2), got {self.facet_uvs.shape}")
        if self.facet_count < 1:
            raise ValueError("mesh must have at least one facet")
        if self.facet_vertices.min() < 0 or self.facet_vertices.max() >= len(self.vertices):
            raise ValueError("facet vertex index out of range")
        if self.facet_uvs.min() < 0.0 or self.facet_uvs.max() > 1.0:
            raise ValueError("UV coordinates must lie in [0, 1]")

    @property
    def facet_count(self) -> int:
        return self.facet_vertices.shape[0]

    @cached_property
    def degenerate_facets(self) -> np.ndarray:
        """(nf,) bool: facets whose UV triangle has zero area."""
        e1 = self.facet_uvs[:, 1] - self.facet_uvs[:, 0]
        e2 = self.facet_uvs[:, 2] - self.facet_uvs[:, 0]
        area2 = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]
        flags = area2 == 0.0
        flags.setflags(write=False)
        return flags

    def translated(self, dx: float, dy: float, dz: float = 0.0) -> "Mesh":
        """Return a copy shifted by (dx, dy, dz) in world space."""
        return Mesh(self.vertices + np.array([dx, dy, dz]), self.facet_vertices, self.facet_uvs)


@dataclass(frozen=True)
class UVMap:
    """Optimizable texture image, stored as (wt, ht, 3) float64 indexed [x, y]."""

    pixels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pixels", _frozen_array(self.pixels, np.float64))
        if self.pixels.ndim != 3 or self.pixels.shape[2] != 3:
            raise ValueError(f"UVMap pixels must be (wt, ht, 3), got {self.pixels.shape}")
        if self.width < 2 or self.height < 2:
            raise ValueError("UV map must be at least 2x2")

    @property
    def width(self) -> int:
        return self.pixels.shape[0]

    @property
    def height(self) -> int:
        return self.pixels.shape[1]

    @staticmethod
    def constant(width: int, height: int, rgb=(0.5, 0.5, 0.5)) -> "UVMap":
        pixels = np.empty((width, height, 3), dtype=np.float64)
        pixels[:] = np.asarray(rgb, dtype=np.float64)
        return UVMap(pixels)

    @staticmethod
    def random(width: int, height: int, seed: int = 0) -> "UVMap":
        rng = np.random.default_rng(seed)
        return UVMap(rng.random((width, height, 3)))

    def clamped(self) -> "UVMap":
        return UVMap(np.clip(self.pixels, 0.0, 1.0))

    def save_png(self, path) -> None:
        # PNG rows run top to bottom, matching y; pixel columns match x.
        imgio.save_image(path, np.swapaxes(self.pixels, 0, 1))

    @staticmethod
    def load_png(path) -> "UVMap":
        return UVMap(np.swapaxes(imgio.load_image(path), 0, 1))


@dataclass(frozen=True)
class CameraTransform:
    """Orbit camera looking at the world origin."""

    azimuth: float
    elevation: float
    distance: float
    image_width: int = 64
    image_height: int = 64
    field_of_view: float = 60.0

    def __post_init__(self):
        if self.distance <= 0:
            raise ValueError("camera distance must be positive")
        if not -90.0 <= self.elevation <= 90.0:
            raise ValueError("elevation must lie in [-90, 90] degrees")
        if self.image_width < 16 or self.image_height < 16:
            raise ValueError("image dimensions must be at least 16 pixels")
        if not 0.0 < self.field_of_view < 180.0:
            raise ValueError("field of view must lie in (0, 180) degrees")

    @property
    def position(self) -> np.ndarray:
        az = np.deg2rad(self.azimuth)
        el = np.deg2rad(self.elevation)
        return self.distance * np.array(
            [np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)]
        )


def camera_matrix(cam: CameraTransform) -> np.ndarray:
    """4x4 view-projection matrix (world -> clip space) for a look-at-origin camera.

    Clip w equals the distance along the viewing axis, so w > 0 means "in
    front of the camera". The matrix is a pure function of the transform:
    identical inputs give bit-identical outputs.
    """
    pos = cam.position
    forward = -pos / np.linalg.norm(pos)
    up_hint = np.array([0.0, 0.0, 1.0])
    if abs(forward @ up_hint) > 1.0 - 1e-9:
        # Looking straight up/down: use the horizontal direction that the
        # world-z hint tends to as elevation approaches +/-90.
        az = np.deg2rad(cam.azimuth)
        up_hint = np.array([-np.cos(az), -np.sin(az), 0.0]) * np.sign(cam.elevation)
    right = np.cross(forward, up_hint)
    right /= np.linalg.norm(right)
    up = np.cross(right, forward)

    view = np.eye(4)
    view[0, :3] = right
    view[1, :3] = up
    view[2, :3] = -forward
    view[:3, 3] = -view[:3, :3] @ pos

    near = cam.distance / 100.0
    far = cam.distance * 100.0
    f = 1.0 / np.tan(np.deg2rad(cam.field_of_view) / 2.0)
    aspect = cam.image_width / cam.image_height
    proj = np.zeros((4, 4))
    proj[0, 0] = f / aspect
    proj[1, 1] = f
    proj[2, 2] = (far + near) / (near - far)
    proj[2, 3] = 2.0 * far * near / (near - far)
    proj[3, 2] = -1.0
    return proj @ view


@dataclass(frozen=True)
class FacetUVIndex:
    """Per-UV-pixel facet ownership with barycentric coordinates.

    owner: (wt, ht) int32, owning facet id or -1 when no facet's UV triangle
    contains the pixel center. Ties on shared edges resolve to the lowest
    facet id. bary: (wt, ht, 3) float64, barycentric coordinates of the pixel
    center in the owner's UV triangle (zeros when unowned). facet_uvs is
    carried from the source mesh so samplers can project texels back into UV
    space without re-threading the mesh.
    """

    width: int
    height: int
    facet_count: int
    owner: np.ndarray
    bary: np.ndarray
    facet_uvs: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "owner", _frozen_array(self.owner, np.int32))
        object.__setattr__(self, "bary", _frozen_array(self.bary, np.float64))
        if self.facet_uvs is not None:
            object.__setattr__(self, "facet_uvs", _frozen_array(self.facet_uvs, np.float64))
        if self.owner.shape != (self.width, self.height):
            raise ValueError(f"owner must be ({self.width}, {self.height}), got {self.owner.shape}")
        if self.bary.shape != (self.width, self.height, 3):
            raise ValueError(f"bary must be ({self.width}, {self.height}, 3), got {self.bary.shape}")

    @property
    def owned(self) -> np.ndarray:
        return self.owner >= 0

    def require_facet_uvs(self) -> np.ndarray:
        if self.facet_uvs is None:
            raise ValueError(
                "FacetUVIndex has no facet UV table; build it from a mesh or pass "
                "mesh= when loading from cache"
            )
        return self.facet_uvs


def pixel_centers(width: int, height: int) -> np.ndarray:
    """(width, height, 2) array of UV-space pixel-center coordinates."""
    u = (np.arange(width) + 0.5) / width
    v = (np.arange(height) + 0.5) / height
    out = np.empty((width, height, 2))
    out[..., 0] = u[:, None]
    out[..., 1] = v[None, :]
    return out


def build_uv_index(mesh: Mesh, width: int, height: int) -> FacetUVIndex:
    """Assign each UV pixel center to the facet whose UV triangle contains it.

    Inside tests use barycentric coordinates with an exact >= 0 rule, so pixel
    centers on a shared edge are inside both adjacent facets; the lowest facet
    id wins. Degenerate facets own no pixels.
    """
    if width < 2 or height < 2:
        raise ValueError("UV index dimensions must be at least 2x2")
    centers = pixel_centers(width, height)
    owner = np.full((width, height), -1, dtype=np.int32)
    bary = np.zeros((width, height, 3))

    degenerate = mesh.degenerate_facets
    for fid in range(mesh.facet_count):
        if degenerate[fid]:
            continue
        p0, p1, p2 = mesh.facet_uvs[fid]
        e1 = p1 - p0
        e2 = p2 - p0
        denom = e1[0] * e2[1] - e1[1] * e2[0]
        q = centers - p0
        w1 = (q[..., 0] * e2[1] - q[..., 1] * e2[0]) / denom
        w2 = (e1[0] * q[..., 1] - e1[1] * q[..., 0]) / denom
        w0 = 1.0 - w1 - w2
        claim = (w0 >= 0.0) & (w1 >= 0.0) & (w2 >= 0.0) & (owner < 0)
        owner[claim] = fid
        bary[claim, 0] = w0[claim]
        bary[claim, 1] = w1[claim]
        bary[claim, 2] = w2[claim]
    return FacetUVIndex(width, height, mesh.facet_count, owner, bary, mesh.facet_uvs)


def save_uv_index(index: FacetUVIndex, path) -> None:
    """Write the index cache: magic "UVIX", little-endian u32 (wt, ht, nf),
    then one record per pixel (i32 owner, 3 x f64 barycentrics) in x-major order."""
    records = np.empty(index.width * index.height, dtype=_UV_INDEX_RECORD)
    records["owner"] = index.owner.reshape(-1)
    records["bary"] = index.bary.reshape(-1, 3)
    with open(path, "wb") as fh:
        fh.write(UV_INDEX_MAGIC)
        fh.write(struct.pack("<III", index.width, index.height, index.facet_count))
        fh.write(records.tobytes())


def load_uv_index(path, mesh: Mesh | None = None) -> FacetUVIndex:
    """Read an index cache written by save_uv_index.

    The cache stores only per-pixel records; pass the source mesh to reattach
    the facet UV table that samplers need for zero-weight back-fill.
    """
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != UV_INDEX_MAGIC:
            raise ValueError(f"{path}: not a UV index cache (bad magic {magic!r})")
        width, height, facet_count = struct.unpack("<III", fh.read(12))
        body = fh.read()
    expected = width * height * _UV_INDEX_RECORD.itemsize
    if len(body) != expected:
        raise ValueError(f"{path}: truncated UV index cache")
    records = np.frombuffer(body, dtype=_UV_INDEX_RECORD)
    owner = records["owner"].reshape(width, height)
    bary = records["bary"].reshape(width, height, 3)
    facet_uvs = None
    if mesh is not None:
        if mesh.facet_count != facet_count:
            raise ValueError(
                f"{path}: cache built for {facet_count} facets, mesh has {mesh.facet_count}"
            )
        facet_uvs = mesh.facet_uvs
    return FacetUVIndex(width, height, facet_count, owner, bary, facet_uvs)


def load_mesh(path) -> Mesh:
    """Load a triangulated OBJ subset: v / vt / f with v/vt references.

    Faces must be triangles and every face corner must reference a texture
    coordinate; normals and material statements are ignored.
    """
    vertices = []
    uvs = []
    facet_vertices = []
    facet_uvs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            tokens = raw.split()
            if not tokens or tokens[0].startswith("#"):
                continue
            kind, args = tokens[0], tokens[1:]
            if kind == "v":
                if len(args) < 3:
                    raise ObjParseError(path, line_no, "vertex needs 3 coordinates")
                try:
                    vertices.append([float(c) for c in args[:3]])
                except ValueError:
                    raise ObjParseError(path, line_no, f"bad vertex coordinate in {raw.strip()!r}") from None
            elif kind == "vt":
                if len(args) < 2:
                    raise ObjParseError(path, line_no, "texture coordinate needs 2 components")
                try:
                    uvs.append([float(c) for c in args[:2]])
                except ValueError:
                    raise ObjParseError(path, line_no, f"bad texture coordinate in {raw.strip()!r}") from None
            elif kind == "f":
                if len(args) != 3:
                    raise ObjParseError(path, line_no, f"non-triangular face ({len(args)} corners)")
                vi = []
                ti = []
                for ref in args:
                    parts = ref.split("/")
                    if len(parts) < 2 or not parts[1]:
                        raise ObjParseError(path, line_no, f"face corner {ref!r} missing texture coordinate")
                    try:
                        v_idx = int(parts[0])
                        t_idx = int(parts[1])
                    except ValueError:
                        raise ObjParseError(path, line_no, f"bad face reference {ref!r}") from None
                    if not 1 <= v_idx <= len(vertices):
                        raise ObjParseError(path, line_no, f"vertex index {v_idx} out of range")
                    if not 1 <= t_idx <= len(uvs):
                        raise ObjParseError(path, line_no, f"texture index {t_idx} out of range")
                    vi.append(v_idx - 1)
                    ti.append(t_idx - 1)
                facet_vertices.append(vi)
                facet_uvs.append([uvs[t] for t in ti])
    if not facet_vertices:
        raise ObjParseError(path, 0, "no faces found")
    for corners in facet_uvs:
        for u, v in corners:
            if not (0.0 <= u <= 1.0 and 0.0 <= v <= 1.0):
                raise ObjParseError(path, 0, f"UV coordinate ({u}, {v}) outside [0, 1]")
    return Mesh(np.array(vertices), np.array(facet_vertices), np.array(facet_uvs))
