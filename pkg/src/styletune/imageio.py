"""Image decode/encode between files and (1, 3, h, w) tensors in [0, 1].

PNG and binary PPM (P6) come in; 8-bit PNG goes out.  The training-style
preprocessing is bilinear resize of the short side followed by a center
crop, so the same function backs the trainer, the CLI, and the service
(byte-level parity between the last two depends on sharing this path).
"""

from __future__ import annotations

import io

import numpy as np
from PIL import Image, UnidentifiedImageError

from .tensor import Tensor

__all__ = [
    "ImageFormatError",
    "decode_image",
    "load_image",
    "save_image",
    "to_png_bytes",
    "to_uint8",
]


class ImageFormatError(ValueError):
    """Unsupported or corrupt image data."""


def _resize_center_crop(img: Image.Image, size: int) -> Image.Image:
    w, h = img.size
    scl = size / min(w, h)
    nw, nh = max(size, round(w * scl)), max(size, round(h * scl))
    img = img.resize((nw, nh), Image.BILINEAR)
    left = (nw - size) // 2
    top = (nh - size) // 2
    return img.crop((left, top, left + size, top + size))


def decode_image(data: bytes, size: int | None = None, dtype=np.float64) -> Tensor:
    """Decode PNG/PPM bytes to a (1, 3, h, w) tensor scaled to [0, 1]."""
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise ImageFormatError(f"cannot decode image: {exc}") from exc
    if img.format not in ("PNG", "PPM"):
        raise ImageFormatError(f"unsupported image format {img.format!r} (need PNG or PPM)")
    img = img.convert("RGB")
    if size is not None:
        if img.size[0] < 1 or img.size[1] < 1:
            raise ImageFormatError("empty image")
        img = _resize_center_crop(img, size)
    arr = np.asarray(img, dtype=dtype) / np.asarray(255.0, dtype=dtype)
    return Tensor(np.ascontiguousarray(arr.transpose(2, 0, 1))[None, :, :, :])


def load_image(path: str, size: int | None = None, dtype=np.float64) -> Tensor:
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        return decode_image(data, size=size, dtype=dtype)
    except ImageFormatError as exc:
        raise ImageFormatError(f"{path}: {exc}") from exc


def to_uint8(t: "Tensor | np.ndarray") -> np.ndarray:
    """Clamp to [0, 1] and quantize to the 8-bit grid, as (h, w, 3)."""
    arr = t.data if isinstance(t, Tensor) else np.asarray(t)
    if arr.ndim != 4 or arr.shape[0] != 1 or arr.shape[1] != 3:
        raise ImageFormatError(f"expected a (1, 3, h, w) image tensor, got shape {arr.shape}")
    clipped = np.clip(arr[0], 0.0, 1.0)
    return np.rint(clipped * 255.0).astype(np.uint8).transpose(1, 2, 0)


def to_png_bytes(t: "Tensor | np.ndarray") -> bytes:
    buf = io.BytesIO()
    Image.fromarray(to_uint8(t), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def save_image(t: "Tensor | np.ndarray", path: str) -> None:
    with open(path, "wb") as fh:
        fh.write(to_png_bytes(t))
