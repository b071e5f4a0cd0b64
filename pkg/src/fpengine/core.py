"""Activation vectors, masks, segment layouts and masked cosine similarity.

An activation vector is a 1-D float64 array with every value in [0, 1]. A
binary activation vector is a sparse distributed representation; dense ones
arise from footprint averaging. A mask is a boolean array of the same length,
``True`` where the dimension was observed.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ArgumentError, DimensionError, LookupFailure

# Values produced by arithmetic may overshoot [0, 1] by a rounding error.
_RANGE_SLACK = 1e-12


def as_vector(values, *, name: str = "vector") -> np.ndarray:
    """Return ``values`` as a float64 activation vector, checking the range."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise DimensionError(f"{name} must be a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ArgumentError(f"{name} contains non-finite values")
    lo, hi = v.min(), v.max()
    if lo < -_RANGE_SLACK or hi > 1.0 + _RANGE_SLACK:
        raise ArgumentError(f"{name} has values outside [0, 1] (min={lo}, max={hi})")
    if lo < 0.0 or hi > 1.0:
        v = np.clip(v, 0.0, 1.0)
    return v


def full_mask(d: int) -> np.ndarray:
    return np.ones(d, dtype=bool)


def empty_mask(d: int) -> np.ndarray:
    return np.zeros(d, dtype=bool)


def as_mask(mask, d: int) -> np.ndarray:
    """Normalise ``mask`` (``None`` means all-present) to a boolean array of length d."""
    if mask is None:
        return full_mask(d)
    m = np.asarray(mask, dtype=bool)
    if m.shape != (d,):
        raise DimensionError(f"mask has shape {m.shape}, expected ({d},)")
    return m


def _cosines(rows: np.ndarray, x: np.ndarray, row_sq: np.ndarray | None = None) -> np.ndarray:
    # Dots and squared norms go through the same reduction so that a row
    # compared with an identical x yields exactly 1.0.
    dots = (rows * x).sum(axis=1)
    if row_sq is None:
        row_sq = (rows * rows).sum(axis=1)
    x2 = x[None, :]
    x_sq = (x2 * x2).sum(axis=1)[0]
    out = np.empty(rows.shape[0], dtype=np.float64)
    row_zero = row_sq == 0.0
    if x_sq == 0.0:
        out[:] = 0.0
        out[row_zero] = 1.0
        return out
    denom = np.sqrt(row_sq * x_sq)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = dots / denom
    out[row_zero] = 0.0
    return np.clip(out, 0.0, 1.0)


def cosine_many(rows: np.ndarray, x: np.ndarray, mask: np.ndarray | None = None,
                row_sq: np.ndarray | None = None) -> np.ndarray:
    """Masked cosine of ``x`` against every row of ``rows``.

    ``row_sq`` may carry precomputed squared row norms; it is only used when
    the mask is absent or all-present.
    """
    if mask is not None and not mask.all():
        w = mask.astype(np.float64)
        return _cosines(rows * w, x * w)
    return _cosines(rows, x, row_sq)


def similarity(a, b, m=None) -> float:
    """Cosine similarity of ``a`` and ``b`` restricted to the present dimensions of ``m``.

    Both restricted vectors all-zero gives 1.0; exactly one all-zero gives 0.0.
    """
    a = as_vector(a, name="a")
    b = as_vector(b, name="b")
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.size} vs {b.size}")
    m = as_mask(m, a.size)
    return float(cosine_many(b[None, :], a, m)[0])


def concat(parts: Sequence) -> np.ndarray:
    if len(parts) == 0:
        raise ArgumentError("concat needs at least one part")
    return np.concatenate([as_vector(p, name=f"part {i}") for i, p in enumerate(parts)])


def binarize(v, tau: float) -> np.ndarray:
    """1.0 where ``v >= tau``, else 0.0."""
    if not 0.0 <= tau <= 1.0:
        raise ArgumentError(f"tau must lie in [0, 1], got {tau}")
    v = as_vector(v)
    return (v >= tau).astype(np.float64)


@dataclass(frozen=True)
class Segment:
    name: str
    offset: int
    length: int

    @property
    def stop(self) -> int:
        return self.offset + self.length


class SegmentLayout:
    """Contiguous named segments covering ``[0, total)`` in order."""

    def __init__(self, segments: Iterable[tuple[str, int]]):
        segs = []
        offset = 0
        for name, length in segments:
            length = int(length)
            if length < 1:
                raise ArgumentError(f"segment {name!r} must have positive length")
            segs.append(Segment(str(name), offset, length))
            offset += length
        if not segs:
            raise ArgumentError("a layout needs at least one segment")
        names = [s.name for s in segs]
        if len(set(names)) != len(names):
            raise ArgumentError(f"duplicate segment names in {names}")
        self.segments: tuple[Segment, ...] = tuple(segs)
        self.total = offset
        self._by_name = {s.name: s for s in segs}

    @property
    def names(self) -> list[str]:
        return [s.name for s in self.segments]

    def __contains__(self, name) -> bool:
        return name in self._by_name

    def __getitem__(self, name: str) -> Segment:
        try:
            return self._by_name[name]
        except KeyError:
            raise LookupFailure(f"no segment named {name!r} (have {self.names})") from None

    def slice(self, name: str) -> slice:
        s = self[name]
        return slice(s.offset, s.stop)

    def __eq__(self, other) -> bool:
        return isinstance(other, SegmentLayout) and self.segments == other.segments

    def __repr__(self) -> str:
        inner = ", ".join(f"{s.name}:({s.offset},{s.length})" for s in self.segments)
        return f"SegmentLayout({inner})"


def segment(v, layout: SegmentLayout, name: str) -> np.ndarray:
    """The slice of ``v`` that ``layout`` assigns to ``name``."""
    v = as_vector(v)
    if v.size != layout.total:
        raise DimensionError(f"vector has length {v.size}, layout covers {layout.total}")
    return v[layout.slice(name)].copy()
