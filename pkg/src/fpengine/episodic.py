"""Declarative memory: a single Cluster over episodes of the last ``n`` frames."""
from __future__ import annotations

from collections import deque
from typing import Optional, Sequence

import numpy as np

from .cluster import Cluster, ClusterPolicy, Trace
from .core import SegmentLayout, as_mask, as_vector
from .errors import ArgumentError, DimensionError, NoMatchError


class EpisodeBuffer:
    """The most recent ``capacity`` frames, oldest first."""

    def __init__(self, capacity: int, frame_dim: int):
        if capacity < 2:
            raise ArgumentError(f"episode length must be at least 2, got {capacity}")
        self.capacity = int(capacity)
        self.frame_dim = int(frame_dim)
        self.frames: deque[np.ndarray] = deque(maxlen=self.capacity)

    def push(self, frame) -> None:
        frame = as_vector(frame, name="frame")
        if frame.size != self.frame_dim:
            raise DimensionError(f"frame has {frame.size} dims, expected {self.frame_dim}")
        self.frames.append(frame.copy())

    @property
    def full(self) -> bool:
        return len(self.frames) == self.capacity

    def episode(self) -> np.ndarray:
        return np.concatenate(list(self.frames))

    def clear(self) -> None:
        self.frames.clear()

    def __len__(self) -> int:
        return len(self.frames)


class DeclarativeMemory:
    """Buffers frames and learns the concatenated episode once ``n`` are held.

    Slot ``i`` of an episode holds the ``i``-th oldest buffered frame.
    """

    def __init__(self, frame_dim: int, n: int, policy: ClusterPolicy | None = None):
        self.buffer = EpisodeBuffer(n, frame_dim)
        self.layout = SegmentLayout((f"slot{i}", frame_dim) for i in range(n))
        self.cluster = Cluster(n * frame_dim, policy)

    @property
    def n(self) -> int:
        return self.buffer.capacity

    @property
    def frame_dim(self) -> int:
        return self.buffer.frame_dim

    def observe(self, frame, learn: bool = True) -> Optional[Trace]:
        """Push ``frame``; returns ``None`` while the buffer is still warming up."""
        self.buffer.push(frame)
        if not self.buffer.full:
            return None
        return self.cluster.process(self.buffer.episode(), None, learn)

    def reset(self) -> None:
        """Forget the buffered frames (learned episodes are kept)."""
        self.buffer.clear()

    def _frames(self, frames: Sequence, count: int) -> list[np.ndarray]:
        if len(frames) != count:
            raise ArgumentError(f"expected {count} frames, got {len(frames)}")
        out = []
        for i, f in enumerate(frames):
            f = as_vector(f, name=f"frame {i}")
            if f.size != self.frame_dim:
                raise ArgumentError(f"frame {i} has {f.size} dims, expected {self.frame_dim}")
            out.append(f)
        return out

    def query_episode(self, frames: Sequence, masks: Sequence | None = None) -> Trace:
        """Match a partially observed episode of ``n`` frames without learning."""
        frames = self._frames(frames, self.n)
        if masks is None:
            mask = None
        else:
            if len(masks) != self.n:
                raise ArgumentError(f"expected {self.n} masks, got {len(masks)}")
            mask = np.concatenate([as_mask(m, self.frame_dim) for m in masks])
        t = self.cluster.query(np.concatenate(frames), mask)
        if not t.is_match:
            raise NoMatchError("the episode cluster holds no footprints")
        return t

    def predict(self, recent: Sequence) -> np.ndarray:
        """Predict the frame that follows the ``n - 1`` most recent ones."""
        recent = self._frames(recent, self.n - 1)
        d = self.frame_dim
        frames = recent + [np.zeros(d)]
        masks = [None] * (self.n - 1) + [np.zeros(d, dtype=bool)]
        t = self.query_episode(frames, masks)
        return t.projection[self.layout.slice(f"slot{self.n - 1}")].copy()

    def state_hash(self) -> str:
        return self.cluster.state_hash()


def dm_observe(dm: DeclarativeMemory, frame, learn: bool = True) -> Optional[Trace]:
    return dm.observe(frame, learn)


def dm_predict(dm: DeclarativeMemory, recent: Sequence) -> np.ndarray:
    return dm.predict(recent)
