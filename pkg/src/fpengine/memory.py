"""Footprints and Cells: the primitive pattern memory.

A Footprint is the running mean of every manifestation assigned to it and
projects that mean as its output. A Cell is a set of Footprints sharing one
similarity threshold; each input is assigned to the most similar Footprint
at or above the threshold, or founds a new one.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import as_mask, as_vector, cosine_many
from .errors import ArgumentError, DimensionError

# Similarities closer than this are treated as equal, both when ranking
# footprints and against theta, so rounding cannot break a mathematical tie.
SIM_EPS = 1e-12


def running_mean(value: np.ndarray, count: int, x: np.ndarray) -> np.ndarray:
    """Mean after adding ``x`` to ``count`` samples whose mean is ``value``."""
    new = value + (x - value) / (count + 1)
    return np.clip(new, 0.0, 1.0, out=new)


@dataclass
class Footprint:
    id: int
    value: np.ndarray
    count: int = 1

    @classmethod
    def create(cls, x, id: int = 0) -> "Footprint":
        return cls(id, as_vector(x).copy(), 1)

    def learn(self, x) -> "Footprint":
        x = as_vector(x)
        if x.shape != self.value.shape:
            raise DimensionError(f"footprint has dimension {self.value.size}, input {x.size}")
        self.value = running_mean(self.value, self.count, x)
        self.count += 1
        return self

    def project(self) -> np.ndarray:
        return self.value.copy()

    @property
    def dim(self) -> int:
        return self.value.size


@dataclass
class CellOutcome:
    """Result of presenting one input to a Cell.

    ``footprint_id`` is ``None`` only for a query against an empty cell.
    ``matched`` tells whether the similarity cleared the cell threshold.
    """
    footprint_id: Optional[int]
    similarity: float
    created: bool
    projection: Optional[np.ndarray]
    matched: bool = True

    @property
    def is_match(self) -> bool:
        return self.footprint_id is not None


NO_MATCH = CellOutcome(None, 0.0, False, None, False)


class Cell:
    """Footprints of dimension ``dim`` sharing the threshold ``theta``.

    Footprint ids are assigned in creation order starting at 0 and double as
    row indices into the value matrix.
    """

    def __init__(self, dim: int, theta: float):
        if dim < 1:
            raise ArgumentError("cell dimension must be positive")
        if not 0.0 <= theta <= 1.0:
            raise ArgumentError(f"theta must lie in [0, 1], got {theta}")
        self.dim = int(dim)
        self.theta = float(theta)
        self._values = np.zeros((4, self.dim), dtype=np.float64)
        self._sq = np.zeros(4, dtype=np.float64)
        self._counts = np.zeros(4, dtype=np.int64)
        self._n = 0

    def __len__(self) -> int:
        return self._n

    @property
    def next_id(self) -> int:
        return self._n

    @property
    def values(self) -> np.ndarray:
        """Read-only view of the footprint values, one row per footprint."""
        v = self._values[:self._n]
        v.flags.writeable = False
        return v

    @property
    def counts(self) -> np.ndarray:
        c = self._counts[:self._n]
        c.flags.writeable = False
        return c

    @property
    def footprints(self) -> list[Footprint]:
        return [self.footprint(i) for i in range(self._n)]

    def footprint(self, fid: int) -> Footprint:
        if not 0 <= fid < self._n:
            raise KeyError(fid)
        return Footprint(fid, self._values[fid].copy(), int(self._counts[fid]))

    def total_count(self) -> int:
        return int(self._counts[:self._n].sum())

    def _append(self, x: np.ndarray, count: int = 1) -> int:
        if self._n == self._values.shape[0]:
            cap = 2 * self._n
            self._values = np.resize(self._values, (cap, self.dim))
            self._sq = np.resize(self._sq, cap)
            self._counts = np.resize(self._counts, cap)
        fid = self._n
        self._values[fid] = x
        self._sq[fid] = (self._values[fid:fid + 1] ** 2).sum(axis=1)[0]
        self._counts[fid] = count
        self._n += 1
        return fid

    def _set(self, fid: int, value: np.ndarray, count: int) -> None:
        self._values[fid] = value
        self._sq[fid] = (self._values[fid:fid + 1] ** 2).sum(axis=1)[0]
        self._counts[fid] = count

    def similarities(self, x, mask=None) -> np.ndarray:
        x = as_vector(x)
        if x.size != self.dim:
            raise DimensionError(f"cell has dimension {self.dim}, input {x.size}")
        m = as_mask(mask, self.dim)
        return cosine_many(self._values[:self._n], x, m, self._sq[:self._n])

    def process(self, x, mask=None, learn: bool = True) -> CellOutcome:
        """Match ``x`` against the footprints; in learn mode update or create one."""
        x = as_vector(x)
        if x.size != self.dim:
            raise DimensionError(f"cell has dimension {self.dim}, input {x.size}")
        m = as_mask(mask, self.dim)
        n = self._n
        if n:
            sims = cosine_many(self._values[:n], x, m, self._sq[:n])
            best = int(np.flatnonzero(sims >= sims.max() - SIM_EPS)[0])
            best_sim = float(sims[best])
        if n == 0 or best_sim < self.theta - SIM_EPS:
            if not learn:
                if n == 0:
                    return NO_MATCH
                return CellOutcome(best, best_sim, False, self._values[best].copy(), False)
            seed = np.where(m, x, 0.0)
            fid = self._append(seed)
            sim = float(cosine_many(self._values[fid:fid + 1], seed, m, self._sq[fid:fid + 1])[0])
            return CellOutcome(fid, sim, True, seed.copy(), True)
        if learn:
            # Unobserved dimensions take the footprint's own value and so do not move.
            row = self._values[best]
            x_imp = np.where(m, x, row)
            count = int(self._counts[best])
            self._set(best, running_mean(row.copy(), count, x_imp), count + 1)
        return CellOutcome(best, best_sim, False, self._values[best].copy(), True)

    def state_hash(self) -> str:
        h = hashlib.sha256()
        h.update(np.float64(self.theta).tobytes())
        h.update(np.int64(self.dim).tobytes())
        h.update(np.ascontiguousarray(self._counts[:self._n]).tobytes())
        h.update(np.ascontiguousarray(self._values[:self._n]).tobytes())
        return h.hexdigest()

    def __repr__(self) -> str:
        return f"Cell(dim={self.dim}, theta={self.theta}, footprints={self._n})"
