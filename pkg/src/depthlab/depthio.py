"""Depth-map and manifest I/O.

Centralizes every on-disk format the toolkit touches so other modules never
parse bytes themselves:

* PFM     -- `Pf` grayscale header; the sign of the scale token is the
             byte order (negative = little-endian); rows stored bottom-up.
* PNG16   -- single-channel 16-bit PNG with a `depth_scale` text chunk
             (decimal string); value = pixel * depth_scale; 0 = invalid.
* RawF32  -- 16-byte header (magic "DBF1", u32 width, u32 height, u32 kind)
             followed by little-endian float32 values, row-major top-down.
* masks   -- 8-bit grayscale PNG, 0 = invalid, nonzero = valid.
* manifests -- UTF-8 JSON Lines, one record per line with fields
             `image_id`, `image`, `depth`, `mask` (optional).

On load, NaN and exact-zero pixels both become invalid; invalid pixels carry
NaN in memory and are never read by downstream math.
"""

from __future__ import annotations

import enum
import io
import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError
from PIL.PngImagePlugin import PngInfo

from .errors import (
    DimensionOverflow,
    DuplicateImageId,
    IoFailure,
    MalformedHeader,
    MissingFile,
    TruncatedPayload,
    UnrepresentableValue,
)

MAX_SIDE = 16384

RAWF32_MAGIC = b"DBF1"


class DepthKind(enum.Enum):
    INVERSE_RELATIVE = "inverse_relative"
    METRIC_METERS = "metric_meters"


class DepthFormat(enum.Enum):
    PFM = "pfm"
    PNG16 = "png16"
    RAWF32 = "rawf32"


_EXTENSIONS = {
    ".pfm": DepthFormat.PFM,
    ".png": DepthFormat.PNG16,
    ".raw": DepthFormat.RAWF32,
    ".dbf": DepthFormat.RAWF32,
}


def infer_format(path: str | Path) -> DepthFormat:
    """Guess the depth format from a file extension."""
    ext = Path(path).suffix.lower()
    if ext not in _EXTENSIONS:
        raise IoFailure(f"cannot infer depth format from extension {ext!r} ({path})")
    return _EXTENSIONS[ext]


@dataclass
class DepthMap:
    """Dense H x W depth field plus validity mask.

    `values` is float32 row-major; semantics are inverse relative depth
    (larger = closer) unless `kind` is METRIC_METERS.  Invalid pixels hold
    NaN and must never be read.
    """

    values: np.ndarray
    valid: np.ndarray
    kind: DepthKind = DepthKind.INVERSE_RELATIVE

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.dtype not in (np.float32, np.float64):
            self.values = self.values.astype(np.float32)
        self.valid = np.asarray(self.valid, dtype=bool)
        if self.values.ndim != 2:
            raise ValueError(f"depth values must be 2-D, got shape {self.values.shape}")
        if self.valid.shape != self.values.shape:
            raise ValueError(
                f"mask shape {self.valid.shape} != values shape {self.values.shape}"
            )

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def valid_count(self) -> int:
        return int(self.valid.sum())

    def check_invariants(self):
        """Raise if the map violates its contract (finiteness, positivity)."""
        v = self.values[self.valid]
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite value at a valid pixel")
        if self.kind is DepthKind.METRIC_METERS and v.size and not np.all(v > 0):
            raise ValueError("metric depth must be > 0 at valid pixels")

    def copy(self) -> "DepthMap":
        return DepthMap(self.values.copy(), self.valid.copy(), self.kind)


def from_values(values: np.ndarray, kind: DepthKind = DepthKind.INVERSE_RELATIVE) -> DepthMap:
    """Build a DepthMap treating NaN and exact-zero entries as invalid."""
    values = np.asarray(values, dtype=np.float32)
    valid = np.isfinite(values) & (values != 0.0)
    values = values.copy()
    values[~valid] = np.nan
    return DepthMap(values, valid, kind)


def to_inverse(m: DepthMap) -> DepthMap:
    """Pointwise conversion to inverse (1/depth) space; no-op if already inverse.

    The division runs in float64 so downstream accumulation is not limited
    by a second float32 rounding."""
    if m.kind is DepthKind.INVERSE_RELATIVE:
        return m
    out = np.full(m.values.shape, np.nan, dtype=np.float64)
    out[m.valid] = 1.0 / m.values[m.valid].astype(np.float64)
    return DepthMap(out, m.valid.copy(), DepthKind.INVERSE_RELATIVE)


def to_depth(m: DepthMap) -> DepthMap:
    """Pointwise conversion to metric depth; pixels with value <= 0 become invalid."""
    if m.kind is DepthKind.METRIC_METERS:
        return m
    valid = m.valid & (m.values > 0)
    out = np.full(m.values.shape, np.nan, dtype=np.float64)
    out[valid] = 1.0 / m.values[valid].astype(np.float64)
    return DepthMap(out, valid, DepthKind.METRIC_METERS)


# ---------------------------------------------------------------------------
# PFM

def _load_pfm(data: bytes) -> DepthMap:
    pos = 0

    def token():
        nonlocal pos
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos >= len(data):
            raise MalformedHeader("unexpected end of PFM header", offset=len(data))
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        return data[start:pos], start

    magic, off = token()
    if magic == b"PF":
        raise MalformedHeader("color PFM not supported, expected grayscale 'Pf'", offset=off)
    if magic != b"Pf":
        raise MalformedHeader(f"bad PFM magic {magic[:8]!r}", offset=off)

    dims = []
    for _ in range(2):
        tok, off = token()
        try:
            d = int(tok)
        except ValueError:
            raise MalformedHeader(f"bad PFM dimension token {tok[:16]!r}", offset=off) from None
        if d <= 0:
            raise MalformedHeader(f"non-positive PFM dimension {d}", offset=off)
        if d > MAX_SIDE:
            raise DimensionOverflow(f"PFM dimension {d} exceeds {MAX_SIDE}", offset=off)
        dims.append(d)
    width, height = dims

    tok, off = token()
    try:
        scale = float(tok)
    except ValueError:
        raise MalformedHeader(f"bad PFM scale token {tok[:16]!r}", offset=off) from None
    if scale == 0.0:
        raise MalformedHeader("PFM scale must be nonzero", offset=off)

    # Exactly one whitespace byte separates the header from the payload.
    pos += 1
    need = width * height * 4
    if len(data) - pos < need:
        raise TruncatedPayload(
            f"PFM payload needs {need} bytes, file ends early", offset=len(data)
        )
    dtype = "<f4" if scale < 0 else ">f4"
    flat = np.frombuffer(data, dtype=dtype, count=width * height, offset=pos)
    rows = flat.reshape(height, width).astype(np.float32)
    return from_values(np.flipud(rows))  # PFM rows are stored bottom-up


def _save_pfm(m: DepthMap) -> bytes:
    out = m.values.copy()
    out[~m.valid] = np.nan
    header = f"Pf\n{m.width} {m.height}\n-1.0\n".encode("ascii")
    return header + np.flipud(out).astype("<f4").tobytes()


# ---------------------------------------------------------------------------
# PNG16

_PNG_SIGNATURE = b"\x89PNG\r\n\x1a\n"


def _load_png16(data: bytes) -> DepthMap:
    if not data.startswith(_PNG_SIGNATURE):
        raise MalformedHeader("not a PNG file", offset=0)
    try:
        im = Image.open(io.BytesIO(data))
        im.load()
    except UnidentifiedImageError:
        raise MalformedHeader("not a PNG file", offset=0) from None
    except OSError as e:
        raise TruncatedPayload(f"PNG decode failed: {e}", offset=len(data)) from None
    except (ValueError, SyntaxError) as e:
        # Pillow decoders raise plain ValueError/SyntaxError on some corrupt inputs.
        raise MalformedHeader(f"PNG decode failed: {e}", offset=0) from None
    if im.mode not in ("I;16", "I;16B", "I"):
        raise MalformedHeader(f"expected single-channel 16-bit PNG, got mode {im.mode}", offset=0)
    if im.width > MAX_SIDE or im.height > MAX_SIDE:
        raise DimensionOverflow(
            f"PNG dimensions {im.width}x{im.height} exceed {MAX_SIDE}", offset=16
        )
    text = getattr(im, "text", {})
    if "depth_scale" not in text:
        raise MalformedHeader("PNG16 depth file lacks a depth_scale text chunk")
    try:
        scale = float(text["depth_scale"])
    except ValueError:
        raise MalformedHeader(
            f"bad depth_scale chunk {text['depth_scale']!r}"
        ) from None
    if not (scale > 0) or not np.isfinite(scale):
        raise MalformedHeader(f"depth_scale must be finite and > 0, got {scale}")
    kind = DepthKind(text.get("depth_kind", DepthKind.INVERSE_RELATIVE.value))
    raw = np.asarray(im, dtype=np.uint16)
    values = raw.astype(np.float32) * np.float32(scale)
    return from_values(values, kind)


def _save_png16(m: DepthMap) -> bytes:
    v = m.values[m.valid]
    if v.size:
        vmax = float(v.max())
        if float(v.min()) < 0:
            raise UnrepresentableValue("PNG16 cannot store negative depth values")
        if vmax <= 0:
            raise UnrepresentableValue("PNG16 cannot store an all-zero valid map")
        scale = vmax / 65535.0
    else:
        scale = 1.0
    quantized = np.zeros(m.values.shape, dtype=np.uint16)
    if v.size:
        # Valid pixels land in 1..65535 so zero stays an unambiguous sentinel.
        q = np.rint(m.values[m.valid] / scale).clip(1, 65535)
        quantized[m.valid] = q.astype(np.uint16)
    info = PngInfo()
    info.add_text("depth_scale", repr(scale))
    info.add_text("depth_kind", m.kind.value)
    buf = io.BytesIO()
    Image.fromarray(quantized).save(buf, format="PNG", pnginfo=info)
    return buf.getvalue()


# ---------------------------------------------------------------------------
# RawF32

_KIND_CODES = {DepthKind.INVERSE_RELATIVE: 0, DepthKind.METRIC_METERS: 1}
_CODE_KINDS = {v: k for k, v in _KIND_CODES.items()}


def _load_rawf32(data: bytes) -> DepthMap:
    if len(data) < 16:
        raise TruncatedPayload("RawF32 header needs 16 bytes", offset=len(data))
    if data[:4] != RAWF32_MAGIC:
        raise MalformedHeader(f"bad RawF32 magic {data[:4]!r}", offset=0)
    width, height, kind_code = struct.unpack_from("<III", data, 4)
    if width == 0 or width > MAX_SIDE:
        raise DimensionOverflow(f"RawF32 width {width} out of range", offset=4)
    if height == 0 or height > MAX_SIDE:
        raise DimensionOverflow(f"RawF32 height {height} out of range", offset=8)
    if kind_code not in _CODE_KINDS:
        raise MalformedHeader(f"unknown RawF32 kind code {kind_code}", offset=12)
    need = width * height * 4
    if len(data) - 16 < need:
        raise TruncatedPayload(
            f"RawF32 payload needs {need} bytes, file ends early", offset=len(data)
        )
    flat = np.frombuffer(data, dtype="<f4", count=width * height, offset=16)
    return from_values(flat.reshape(height, width), _CODE_KINDS[kind_code])


def _save_rawf32(m: DepthMap) -> bytes:
    out = m.values.copy()
    out[~m.valid] = np.nan
    header = RAWF32_MAGIC + struct.pack("<III", m.width, m.height, _KIND_CODES[m.kind])
    return header + out.astype("<f4").tobytes()


# ---------------------------------------------------------------------------
# Public depth entry points

_LOADERS = {
    DepthFormat.PFM: _load_pfm,
    DepthFormat.PNG16: _load_png16,
    DepthFormat.RAWF32: _load_rawf32,
}
_SAVERS = {
    DepthFormat.PFM: _save_pfm,
    DepthFormat.PNG16: _save_png16,
    DepthFormat.RAWF32: _save_rawf32,
}


def load_depth(path: str | Path, fmt: DepthFormat | None = None) -> DepthMap:
    """Load a depth map, inferring the format from the extension if not given."""
    path = Path(path)
    if fmt is None:
        fmt = infer_format(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise IoFailure(f"cannot read {path}: {e}") from None
    return _LOADERS[fmt](data)


def decode_depth(data: bytes, fmt: DepthFormat) -> DepthMap:
    """Decode a depth map from raw bytes."""
    return _LOADERS[fmt](data)


def save_depth(m: DepthMap, path: str | Path, fmt: DepthFormat | None = None):
    """Write a depth map; values at valid pixels survive a round-trip exactly
    (PFM, RawF32) or within (max value)/65535 (PNG16)."""
    path = Path(path)
    if fmt is None:
        fmt = infer_format(path)
    payload = _SAVERS[fmt](m)
    try:
        path.write_bytes(payload)
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from None


# ---------------------------------------------------------------------------
# Validity masks

def load_mask(path: str | Path) -> np.ndarray:
    """Load an 8-bit PNG mask; nonzero pixels are valid."""
    try:
        im = Image.open(path)
        im.load()
    except FileNotFoundError:
        raise MissingFile(f"mask file not found: {path}") from None
    except (UnidentifiedImageError, OSError) as e:
        raise MalformedHeader(f"cannot decode mask {path}: {e}") from None
    return np.asarray(im.convert("L")) != 0


def save_mask(mask: np.ndarray, path: str | Path):
    """Write a bool mask as an 8-bit PNG (0 = invalid, 255 = valid)."""
    arr = np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8)
    try:
        Image.fromarray(arr).save(path, format="PNG")
    except OSError as e:
        raise IoFailure(f"cannot write {path}: {e}") from None


# ---------------------------------------------------------------------------
# Prediction manifests

class DatasetRole(enum.Enum):
    LABELED_SYNTHETIC = "labeled_synthetic"
    PSEUDO_LABELED_REAL = "pseudo_labeled_real"
    GROUND_TRUTH = "ground_truth"
    MODEL_PREDICTION = "model_prediction"


@dataclass
class ManifestEntry:
    image_id: str
    image: str
    depth: str
    mask: str | None = None


@dataclass
class PredictionManifest:
    """Ordered set of (image, depth, mask) records for one model or dataset.

    Entry paths may be relative; they are resolved against `root` (normally
    the directory the manifest file lives in), which keeps manifests
    relocatable and byte-deterministic.
    """

    entries: list[ManifestEntry] = field(default_factory=list)
    source_tag: str = ""
    dataset_role: DatasetRole = DatasetRole.MODEL_PREDICTION
    root: Path = field(default_factory=Path)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def image_ids(self) -> list[str]:
        return [e.image_id for e in self.entries]

    def entry(self, image_id: str) -> ManifestEntry:
        for e in self.entries:
            if e.image_id == image_id:
                return e
        raise KeyError(image_id)

    def resolve(self, rel: str) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else self.root / p

    def depth_path(self, e: ManifestEntry) -> Path:
        return self.resolve(e.depth)

    def image_path(self, e: ManifestEntry) -> Path:
        return self.resolve(e.image)

    def mask_path(self, e: ManifestEntry) -> Path | None:
        return self.resolve(e.mask) if e.mask else None

    def load_depth(self, e: ManifestEntry) -> DepthMap:
        """Load an entry's depth map, intersecting its mask file if present."""
        m = load_depth(self.depth_path(e))
        mp = self.mask_path(e)
        if mp is not None:
            extra = load_mask(mp)
            if extra.shape != m.valid.shape:
                raise IoFailure(
                    f"mask {mp} shape {extra.shape} != depth shape {m.valid.shape}"
                )
            m.valid &= extra
            m.values[~m.valid] = np.nan
        return m

    def save(self, path: str | Path):
        path = Path(path)
        lines = []
        for e in self.entries:
            rec = {"image_id": e.image_id, "image": e.image, "depth": e.depth}
            if e.mask is not None:
                rec["mask"] = e.mask
            lines.append(json.dumps(rec, sort_keys=True))
        path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_manifest(
    path: str | Path,
    source_tag: str | None = None,
    dataset_role: DatasetRole = DatasetRole.MODEL_PREDICTION,
    check_files: bool = True,
) -> PredictionManifest:
    """Parse a JSONL manifest; fails atomically if any referenced file is missing."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise MissingFile(f"cannot read manifest {path}: {e}") from None
    entries: list[ManifestEntry] = []
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as e:
            raise IoFailure(f"manifest {path} line {lineno}: bad JSON ({e.msg})") from None
        for key in ("image_id", "image", "depth"):
            if key not in rec:
                raise IoFailure(f"manifest {path} line {lineno}: missing field {key!r}")
        image_id = str(rec["image_id"])
        if image_id in seen:
            raise DuplicateImageId(f"duplicate image_id {image_id!r} in {path}")
        seen.add(image_id)
        entries.append(
            ManifestEntry(image_id, str(rec["image"]), str(rec["depth"]), rec.get("mask"))
        )
    manifest = PredictionManifest(
        entries=entries,
        source_tag=source_tag if source_tag is not None else path.stem,
        dataset_role=dataset_role,
        root=path.parent,
    )
    if check_files:
        for e in entries:
            for p in (manifest.image_path(e), manifest.depth_path(e), manifest.mask_path(e)):
                if p is not None and not p.exists():
                    raise MissingFile(f"manifest {path}: referenced file missing: {p}")
    return manifest
