"""IDX dataset reader and binary PGM writer."""
from __future__ import annotations

import os
import struct

import numpy as np

from .errors import DimensionError, FormatError

IDX_IMAGES = 0x00000803
IDX_LABELS = 0x00000801


def parse_idx(data: bytes) -> np.ndarray:
    """Parse an IDX image (count, rows, cols) or label (count) buffer.

    Images come back as ``uint8`` of shape ``(count, rows * cols)``, labels as
    shape ``(count,)``, in file order.
    """
    if len(data) < 8:
        raise FormatError("IDX buffer too short for a header")
    (magic,) = struct.unpack(">I", data[:4])
    if magic == IDX_IMAGES:
        if len(data) < 16:
            raise FormatError("IDX image header truncated")
        count, rows, cols = struct.unpack(">III", data[4:16])
        need = count * rows * cols
        body = data[16:]
        if len(body) < need:
            raise FormatError(f"IDX image body truncated: {len(body)} of {need} bytes")
        return np.frombuffer(body, dtype=np.uint8, count=need).reshape(count, rows * cols).copy()
    if magic == IDX_LABELS:
        (count,) = struct.unpack(">I", data[4:8])
        body = data[8:]
        if len(body) < count:
            raise FormatError(f"IDX label body truncated: {len(body)} of {count} bytes")
        return np.frombuffer(body, dtype=np.uint8, count=count).copy()
    raise FormatError(f"unrecognised IDX magic 0x{magic:08x}")


def load_idx(path, limit: int | None = None) -> np.ndarray:
    with open(path, "rb") as f:
        data = f.read()
    samples = parse_idx(data)
    return samples if limit is None else samples[:limit]


def write_idx_images(path, images: np.ndarray, rows: int, cols: int) -> None:
    images = np.asarray(images, dtype=np.uint8).reshape(len(images), rows * cols)
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", IDX_IMAGES, len(images), rows, cols))
        f.write(images.tobytes())


def write_idx_labels(path, labels) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    with open(path, "wb") as f:
        f.write(struct.pack(">II", IDX_LABELS, len(labels)))
        f.write(labels.tobytes())


def pgm_bytes(pixels, width: int, height: int) -> bytes:
    px = np.asarray(pixels, dtype=np.uint8).reshape(-1)
    if px.size != width * height:
        raise DimensionError(f"{px.size} pixels do not fill {width}x{height}")
    return f"P5\n{width} {height}\n255\n".encode("ascii") + px.tobytes()


def write_pgm(path, pixels, width: int, height: int) -> None:
    with open(os.fspath(path), "wb") as f:
        f.write(pgm_bytes(pixels, width, height))


def read_pgm(path) -> tuple[int, int, np.ndarray]:
    with open(path, "rb") as f:
        data = f.read()
    parts = data.split(b"\n", 3)
    if len(parts) < 4 or parts[0] != b"P5" or parts[2] != b"255":
        raise FormatError("not an 8-bit binary PGM written by this tool")
    w, h = (int(t) for t in parts[1].split())
    body = parts[3]
    if len(body) != w * h:
        raise FormatError("PGM body length does not match its header")
    return w, h, np.frombuffer(body, dtype=np.uint8).copy()
