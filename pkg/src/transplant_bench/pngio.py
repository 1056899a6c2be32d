"""Lossless PNG I/O for generated test images.

PNG is required so detector inputs match the compositing pixel contracts
exactly; encoding settings are fixed so identical pixels give identical
bytes.
"""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image


def png_bytes(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(image), mode="RGB").save(
        buf, format="PNG", optimize=False
    )
    return buf.getvalue()


def save_png(image: np.ndarray, path) -> None:
    Path(path).write_bytes(png_bytes(image))


def load_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def decode_png(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)
