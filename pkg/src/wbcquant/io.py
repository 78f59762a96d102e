"""Raster file I/O (PNG and TIFF through Pillow) and atomic text writes."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidInputError
from .imgproc import to_grayscale

IMAGE_SUFFIXES = {".png", ".tif", ".tiff"}


def read_gray(path) -> np.ndarray:
    """Read an 8-bit grayscale or 24-bit RGB raster as a gray ``uint8`` array."""
    with Image.open(path) as im:
        if im.mode in ("L", "P"):
            arr = np.asarray(im.convert("L"))
        elif im.mode in ("RGB", "RGBA"):
            arr = to_grayscale(np.asarray(im.convert("RGB")))
        else:
            raise InvalidInputError(f"{path}: unsupported image mode {im.mode}")
    if arr.size == 0:
        raise InvalidInputError(f"{path}: zero-sized image")
    return np.ascontiguousarray(arr, dtype=np.uint8)


def write_image(path, img: np.ndarray) -> None:
    Image.fromarray(np.asarray(img, dtype=np.uint8), mode="L").save(path)


def write_mask(path, mask: np.ndarray) -> None:
    write_image(path, np.where(np.asarray(mask, dtype=bool), 255, 0).astype(np.uint8))


def read_mask(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L")) > 127


def atomic_write_text(path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def list_images(directory) -> list[Path]:
    directory = Path(directory)
    return sorted(p for p in directory.iterdir()
                  if p.suffix.lower() in IMAGE_SUFFIXES and not p.name.endswith((".void.png", ".mask.png")))
