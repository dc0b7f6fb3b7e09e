"""IDX image ingestion, 7x7 patch grids and PGM export."""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

__all__ = [
    "IdxFormatError",
    "IMAGE_SIDE",
    "PATCH_SIDE",
    "GRID_SIDE",
    "load_idx",
    "parse_idx",
    "encode_idx",
    "patchify",
    "unpatchify",
    "format_pgm",
    "write_pgm",
]

IDX3_MAGIC = 0x00000803
IMAGE_SIDE = 28
PATCH_SIDE = 7
GRID_SIDE = IMAGE_SIDE // PATCH_SIDE  # 4 x 4 patches


class IdxFormatError(ValueError):
    """Malformed or unsupported IDX file."""


def parse_idx(raw: bytes) -> np.ndarray:
    """Decode an IDX3 ubyte image file (optionally gzipped) into floats in [0, 1]."""
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    if len(raw) < 16:
        raise IdxFormatError(f"header truncated: need 16 bytes, got {len(raw)}")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IDX3_MAGIC:
        raise IdxFormatError(f"magic: expected 0x{IDX3_MAGIC:08x}, got 0x{magic:08x}")
    if rows != IMAGE_SIDE:
        raise IdxFormatError(f"rows: expected {IMAGE_SIDE}, got {rows}")
    if cols != IMAGE_SIDE:
        raise IdxFormatError(f"cols: expected {IMAGE_SIDE}, got {cols}")
    expected = count * rows * cols
    body = raw[16:]
    if len(body) != expected:
        raise IdxFormatError(f"count: header promises {count} images ({expected} bytes), body has {len(body)}")
    pixels = np.frombuffer(body, dtype=np.uint8).reshape(count, rows, cols)
    return pixels.astype(np.float64) / 255.0


def load_idx(path) -> np.ndarray:
    return parse_idx(Path(path).read_bytes())


def encode_idx(images, compress: bool = False) -> bytes:
    """Encode uint8 images of shape (count, 28, 28) as IDX3 bytes."""
    images = np.asarray(images)
    if images.ndim != 3:
        raise ValueError(f"expected (count, rows, cols), got shape {images.shape}")
    if images.dtype != np.uint8:
        if np.any((images < 0) | (images > 255)):
            raise ValueError("pixel values must lie in [0, 255]")
        images = images.astype(np.uint8)
    raw = struct.pack(">IIII", IDX3_MAGIC, *images.shape) + images.tobytes()
    return gzip.compress(raw, mtime=0) if compress else raw


def patchify(image) -> np.ndarray:
    """Split a 28x28 image into 16 row-major flattened 7x7 patches, shape (16, 49).

    Patch ``4 * r + c`` covers rows 7r..7r+6 and columns 7c..7c+6.
    """
    image = np.asarray(image, dtype=np.float64)
    if image.shape != (IMAGE_SIDE, IMAGE_SIDE):
        raise ValueError(f"image must be {IMAGE_SIDE}x{IMAGE_SIDE}, got {image.shape}")
    g, p = GRID_SIDE, PATCH_SIDE
    return image.reshape(g, p, g, p).transpose(0, 2, 1, 3).reshape(g * g, p * p)


def unpatchify(patches) -> np.ndarray:
    """Inverse of :func:`patchify`."""
    patches = np.asarray(patches, dtype=np.float64)
    g, p = GRID_SIDE, PATCH_SIDE
    if patches.shape != (g * g, p * p):
        raise ValueError(f"patch grid must have shape {(g * g, p * p)}, got {patches.shape}")
    return patches.reshape(g, g, p, p).transpose(0, 2, 1, 3).reshape(g * p, g * p)


def format_pgm(image, maxval: int = 255) -> str:
    """ASCII (P2) greymap; values are clipped to [0, 1] then scaled to ``maxval``."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2:
        raise ValueError("PGM export needs a 2-D image")
    levels = np.rint(np.clip(image, 0.0, 1.0) * maxval).astype(int)
    rows = [" ".join(str(v) for v in row) for row in levels]
    return f"P2\n{image.shape[1]} {image.shape[0]}\n{maxval}\n" + "\n".join(rows) + "\n"


def write_pgm(image, path, maxval: int = 255) -> None:
    Path(path).write_text(format_pgm(image, maxval))
