"""Procedural desk-scale test scenes with analytic ground-truth depth.

Renders pinhole z-depth for plane / sphere / box primitives, and derives
"fake model" predictions (affine, monotone, noisy, inverted transforms of
the ground truth in inverse-depth space) so that every downstream result
can be checked against a known answer.
"""

from __future__ import annotations

import enum
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .depthio import DepthKind, DepthMap, to_inverse
from .errors import DegenerateCamera

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

NEAR_CLIP = 1e-3


@dataclass
class Camera:
    fx: float
    fy: float
    cx: float
    cy: float


@dataclass
class Plane:
    """Infinite plane: normal . x = offset, camera at the origin looking +z."""

    normal: tuple[float, float, float]
    offset: float
    kind: str = "plane"


@dataclass
class Sphere:
    center: tuple[float, float, float]
    radius: float
    kind: str = "sphere"


@dataclass
class Box:
    """Axis-aligned box given by center and full size per axis."""

    center: tuple[float, float, float]
    size: tuple[float, float, float]
    kind: str = "box"


Primitive = Plane | Sphere | Box


@dataclass
class SceneSpec:
    width: int
    height: int
    camera: Camera
    primitives: list[Primitive] = field(default_factory=list)
    seed: int = 0

    def __post_init__(self):
        if not self.primitives:
            raise ValueError("a scene needs at least one primitive")


def _ray_dirs(spec: SceneSpec):
    cam = spec.camera
    if not (cam.fx > 0 and cam.fy > 0) or not np.all(
        np.isfinite([cam.fx, cam.fy, cam.cx, cam.cy])
    ):
        raise DegenerateCamera(f"bad intrinsics: {cam}")
    xs = (np.arange(spec.width) + 0.5 - cam.cx) / cam.fx
    ys = (np.arange(spec.height) + 0.5 - cam.cy) / cam.fy
    dx, dy = np.meshgrid(xs, ys)
    # dir_z = 1 everywhere, so the ray parameter t equals z-depth.
    return dx, dy


def _hit_plane(p: Plane, dx, dy):
    nx, ny, nz = p.normal
    denom = nx * dx + ny * dy + nz
    with np.errstate(divide="ignore", invalid="ignore"):
        t = p.offset / denom
    t = np.where(np.abs(denom) > 1e-12, t, np.inf)
    return np.where(t > NEAR_CLIP, t, np.inf)


def _hit_sphere(s: Sphere, dx, dy):
    cx, cy, cz = s.center
    a = dx * dx + dy * dy + 1.0
    b = -2.0 * (dx * cx + dy * cy + cz)
    c0 = cx * cx + cy * cy + cz * cz - s.radius * s.radius
    disc = b * b - 4.0 * a * c0
    sq = np.sqrt(np.maximum(disc, 0.0))
    t1 = (-b - sq) / (2.0 * a)
    t2 = (-b + sq) / (2.0 * a)
    t = np.where(t1 > NEAR_CLIP, t1, t2)
    return np.where((disc >= 0) & (t > NEAR_CLIP), t, np.inf)


def _hit_box(box: Box, dx, dy):
    lo = np.asarray(box.center, dtype=np.float64) - np.asarray(box.size) / 2.0
    hi = np.asarray(box.center, dtype=np.float64) + np.asarray(box.size) / 2.0
    t_near = np.full(dx.shape, -np.inf)
    t_far = np.full(dx.shape, np.inf)
    for axis, d in enumerate((dx, dy, np.ones_like(dx))):
        with np.errstate(divide="ignore", invalid="ignore"):
            t1 = (lo[axis] - 0.0) / d
            t2 = (hi[axis] - 0.0) / d
        parallel = np.abs(d) < 1e-12
        inside = (0.0 >= lo[axis]) & (0.0 <= hi[axis])
        t1 = np.where(parallel, np.where(inside, -np.inf, np.inf), t1)
        t2 = np.where(parallel, np.where(inside, np.inf, -np.inf), t2)
        t_near = np.maximum(t_near, np.minimum(t1, t2))
        t_far = np.minimum(t_far, np.maximum(t1, t2))
    hit = (t_far >= t_near) & (t_near > NEAR_CLIP)
    return np.where(hit, t_near, np.inf)


_HITTERS = {Plane: _hit_plane, Sphere: _hit_sphere, Box: _hit_box}


def render_depth(spec: SceneSpec) -> DepthMap:
    """Per-pixel nearest-intersection z-depth in meters; sky pixels invalid."""
    dx, dy = _ray_dirs(spec)
    depth = np.full(dx.shape, np.inf)
    for prim in spec.primitives:
        depth = np.minimum(depth, _HITTERS[type(prim)](prim, dx, dy))
    valid = np.isfinite(depth)
    values = np.where(valid, depth, np.nan).astype(np.float32)
    return DepthMap(values, valid, DepthKind.METRIC_METERS)


def render_index(spec: SceneSpec) -> np.ndarray:
    """Index of the nearest primitive per pixel (-1 for sky)."""
    dx, dy = _ray_dirs(spec)
    best_t = np.full(dx.shape, np.inf)
    best = np.full(dx.shape, -1, dtype=np.int64)
    for i, prim in enumerate(spec.primitives):
        t = _HITTERS[type(prim)](prim, dx, dy)
        closer = t < best_t
        best_t = np.where(closer, t, best_t)
        best = np.where(closer, i, best)
    return best


_PALETTE = np.array(
    [[204, 92, 92], [92, 160, 204], [118, 204, 92], [204, 176, 92],
     [160, 92, 204], [92, 204, 190], [204, 120, 180], [140, 140, 140]],
    dtype=np.uint8,
)


def render_rgb(spec: SceneSpec) -> np.ndarray:
    """Flat-shaded H x W x 3 uint8 image for display (sky = dark gray)."""
    idx = render_index(spec)
    out = np.full(idx.shape + (3,), 24, dtype=np.uint8)
    hit = idx >= 0
    out[hit] = _PALETTE[idx[hit] % len(_PALETTE)]
    return out


def random_scene(
    seed: int,
    width: int = 64,
    height: int = 64,
    n_primitives: int = 5,
    with_background: bool = True,
) -> SceneSpec:
    """Deterministic random arrangement of spheres and boxes in front of the camera."""
    rng = np.random.default_rng(seed)
    cam = Camera(fx=float(width), fy=float(width), cx=width / 2.0, cy=height / 2.0)
    prims: list[Primitive] = []
    if with_background:
        prims.append(Plane(normal=(0.0, 0.0, 1.0), offset=20.0))
    for _ in range(n_primitives):
        z = float(rng.uniform(3.0, 12.0))
        x = float(rng.uniform(-0.4, 0.4)) * z
        y = float(rng.uniform(-0.4, 0.4)) * z
        if rng.random() < 0.5:
            prims.append(Sphere(center=(x, y, z), radius=float(rng.uniform(0.3, 1.5))))
        else:
            size = tuple(float(rng.uniform(0.4, 2.0)) for _ in range(3))
            prims.append(Box(center=(x, y, z), size=size))
    return SceneSpec(width=width, height=height, camera=cam, primitives=prims, seed=seed)


# ---------------------------------------------------------------------------
# Fake models

class FakeKind(enum.Enum):
    IDENTITY = "identity"
    AFFINE = "affine"
    MONOTONE = "monotone"
    NOISY = "noisy"
    INVERTED = "inverted"


def fake_model(
    gt: DepthMap,
    kind: FakeKind,
    a: float = 2.0,
    b: float = 3.0,
    gamma: float = 2.0,
    sigma: float = 0.05,
    seed: int = 0,
) -> DepthMap:
    """Derive a synthetic prediction by transforming gt pointwise in
    inverse-depth space; the validity mask is preserved."""
    inv = to_inverse(gt)
    v = inv.values.astype(np.float32).copy()
    m = inv.valid
    if kind is FakeKind.IDENTITY:
        pass
    elif kind is FakeKind.AFFINE:
        v[m] = a * v[m] + b
    elif kind is FakeKind.MONOTONE:
        v[m] = v[m] ** gamma
    elif kind is FakeKind.NOISY:
        rng = np.random.default_rng(seed)
        v[m] = v[m] + rng.normal(0.0, sigma, size=int(m.sum())).astype(np.float32)
    elif kind is FakeKind.INVERTED:
        lo, hi = float(v[m].min()), float(v[m].max())
        v[m] = (lo + hi) - v[m]
    else:
        raise ValueError(f"unknown fake model kind {kind}")
    v[~m] = np.nan
    return DepthMap(v, m.copy(), DepthKind.INVERSE_RELATIVE)


# ---------------------------------------------------------------------------
# Scene files

def load_scene(path: str | Path) -> SceneSpec:
    """Read a SceneSpec from a TOML file."""
    with open(path, "rb") as f:
        doc = tomllib.load(f)
    cam = Camera(**{k: float(v) for k, v in doc["camera"].items()})
    prims: list[Primitive] = []
    for p in doc.get("primitives", []):
        kind = p.get("kind")
        if kind == "plane":
            prims.append(Plane(normal=tuple(p["normal"]), offset=float(p["offset"])))
        elif kind == "sphere":
            prims.append(Sphere(center=tuple(p["center"]), radius=float(p["radius"])))
        elif kind == "box":
            prims.append(Box(center=tuple(p["center"]), size=tuple(p["size"])))
        else:
            raise ValueError(f"unknown primitive kind {kind!r} in {path}")
    return SceneSpec(
        width=int(doc["width"]),
        height=int(doc["height"]),
        camera=cam,
        primitives=prims,
        seed=int(doc.get("seed", 0)),
    )
