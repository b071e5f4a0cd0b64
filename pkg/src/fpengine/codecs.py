"""Encoders from raw signals to activation vectors, and decoders back."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import as_vector
from .errors import ArgumentError, DimensionError


@dataclass(frozen=True)
class ImageCodecSpec:
    width: int
    height: int
    threshold: float = 0.5

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ArgumentError("image width and height must be positive")
        if not 0.0 <= self.threshold <= 1.0:
            raise ArgumentError(f"threshold must lie in [0, 1], got {self.threshold}")

    @property
    def dim(self) -> int:
        return self.width * self.height

    def to_dict(self) -> dict:
        return {"kind": "image", "width": self.width, "height": self.height,
                "threshold": self.threshold}


@dataclass(frozen=True)
class CategoricalCodecSpec:
    symbols: int
    block_size: int = 1

    def __post_init__(self):
        if self.symbols < 2:
            raise ArgumentError("a categorical codec needs at least 2 symbols")
        if self.block_size < 1:
            raise ArgumentError("block_size must be at least 1")

    @property
    def dim(self) -> int:
        return self.symbols * self.block_size

    def to_dict(self) -> dict:
        return {"kind": "categorical", "symbols": self.symbols, "block_size": self.block_size}


def codec_from_dict(d: dict):
    kind = d.get("kind")
    if kind == "image":
        return ImageCodecSpec(int(d["width"]), int(d["height"]), float(d.get("threshold", 0.5)))
    if kind == "categorical":
        return CategoricalCodecSpec(int(d["symbols"]), int(d.get("block_size", 1)))
    raise ArgumentError(f"unknown codec kind {kind!r}")


def encode_image(pixels, spec: ImageCodecSpec) -> np.ndarray:
    """Threshold an 8-bit grayscale image (row-major) into a binary vector."""
    px = np.asarray(pixels, dtype=np.uint8).reshape(-1)
    if px.size != spec.dim:
        raise DimensionError(f"image has {px.size} pixels, codec expects {spec.width}x{spec.height}")
    return (px / 255.0 >= spec.threshold).astype(np.float64)


def decode_image(v, spec: ImageCodecSpec) -> np.ndarray:
    """Scale activations to bytes, rounding half up."""
    v = as_vector(v)
    if v.size != spec.dim:
        raise DimensionError(f"vector has length {v.size}, codec expects {spec.dim}")
    return np.floor(v * 255.0 + 0.5).astype(np.uint8)


def encode_categorical(symbol: int, spec: CategoricalCodecSpec) -> np.ndarray:
    if not 0 <= symbol < spec.symbols:
        raise ArgumentError(f"symbol {symbol} outside [0, {spec.symbols})")
    v = np.zeros(spec.dim, dtype=np.float64)
    v[symbol * spec.block_size:(symbol + 1) * spec.block_size] = 1.0
    return v


def decode_categorical(v, spec: CategoricalCodecSpec) -> tuple[int, float]:
    """Return the block with the highest mean activation and that mean.

    Ties go to the lowest symbol index.
    """
    v = as_vector(v)
    if v.size != spec.dim:
        raise DimensionError(f"vector has length {v.size}, codec expects {spec.dim}")
    means = v.reshape(spec.symbols, spec.block_size).mean(axis=1)
    k = int(np.argmax(means))
    return k, float(means[k])
