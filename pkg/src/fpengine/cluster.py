"""Clusters: trees of Cells refining one another.

The seed Cell holds the most generic footprints. Once a footprint has
absorbed ``spawn_count`` inputs it gets a child Cell with a stricter
threshold, where its sub-domain is refined. An input descends greedily
along a single branch, so a learn call touches exactly the cells on its path.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import as_mask, as_vector
from .errors import ArgumentError, DimensionError, NoMatchError
from .memory import Cell, CellOutcome


@dataclass(frozen=True)
class ClusterPolicy:
    theta_seed: float = 0.5
    theta_step: float = 0.1
    theta_max: float = 1.0
    spawn_count: int = 10
    max_depth: int = 4

    def __post_init__(self):
        if not 0.0 <= self.theta_seed <= 1.0:
            raise ArgumentError(f"theta_seed must lie in [0, 1], got {self.theta_seed}")
        if not self.theta_step > 0.0:
            raise ArgumentError(f"theta_step must be positive, got {self.theta_step}")
        if not self.theta_seed <= self.theta_max <= 1.0:
            raise ArgumentError(f"theta_max must lie in [theta_seed, 1], got {self.theta_max}")
        if self.spawn_count < 2:
            raise ArgumentError(f"spawn_count must be at least 2, got {self.spawn_count}")
        if self.max_depth < 1:
            raise ArgumentError(f"max_depth must be at least 1, got {self.max_depth}")

    def child_theta(self, parent_theta: float) -> float:
        return min(parent_theta + self.theta_step, self.theta_max)

    def to_dict(self) -> dict:
        return {"theta_seed": self.theta_seed, "theta_step": self.theta_step,
                "theta_max": self.theta_max, "spawn_count": self.spawn_count,
                "max_depth": self.max_depth}

    @classmethod
    def from_dict(cls, d: dict) -> "ClusterPolicy":
        return cls(float(d["theta_seed"]), float(d["theta_step"]), float(d["theta_max"]),
                   int(d["spawn_count"]), int(d["max_depth"]))


@dataclass
class Trace:
    """The branch an input took: ``(cell index, outcome)`` pairs from the seed down.

    An empty path means the query found nothing to match.
    """
    path: list[tuple[int, CellOutcome]] = field(default_factory=list)
    spawned: Optional[int] = None

    def __len__(self) -> int:
        return len(self.path)

    @property
    def is_match(self) -> bool:
        return bool(self.path)

    @property
    def projection(self) -> np.ndarray:
        """Value of the deepest selected footprint, the most concrete match."""
        if not self.path:
            raise NoMatchError("empty trace has no projection")
        return self.path[-1][1].projection

    @property
    def archetype(self) -> np.ndarray:
        """Value of the footprint selected in the seed cell, the most abstract match."""
        if not self.path:
            raise NoMatchError("empty trace has no archetype")
        return self.path[0][1].projection

    @property
    def leaf(self) -> tuple[int, int]:
        cell, out = self.path[-1]
        return cell, out.footprint_id


def cluster_projection(t: Trace) -> np.ndarray:
    return t.projection


def cluster_archetype(t: Trace) -> np.ndarray:
    return t.archetype


class Cluster:
    """A tree of Cells over ``dim``-dimensional inputs, rooted at cell 0."""

    def __init__(self, dim: int, policy: ClusterPolicy | None = None):
        self.dim = int(dim)
        self.policy = policy or ClusterPolicy()
        self.cells: list[Cell] = [Cell(self.dim, self.policy.theta_seed)]
        self.parents: list[Optional[tuple[int, int]]] = [None]
        self.depths: list[int] = [1]
        self.children: dict[tuple[int, int], int] = {}

    @property
    def seed(self) -> Cell:
        return self.cells[0]

    def footprint_count(self) -> int:
        return sum(len(c) for c in self.cells)

    def tree_depth(self) -> int:
        return max(self.depths)

    def child_of(self, cell: int, fid: int) -> Optional[int]:
        return self.children.get((cell, fid))

    def _attach(self, cell: int, fid: int) -> int:
        theta = self.policy.child_theta(self.cells[cell].theta)
        idx = len(self.cells)
        self.cells.append(Cell(self.dim, theta))
        self.parents.append((cell, fid))
        self.depths.append(self.depths[cell] + 1)
        self.children[(cell, fid)] = idx
        return idx

    def process(self, x, mask=None, learn: bool = True) -> Trace:
        """Descend from the seed along the best-matching branch.

        Descent stops at a cell that creates a footprint, at a footprint with
        no child cell, or at an empty child cell (query mode). In learn mode a
        footprint that has just reached ``spawn_count`` gets an empty child.
        """
        x = as_vector(x)
        if x.size != self.dim:
            raise DimensionError(f"cluster has dimension {self.dim}, input {x.size}")
        m = as_mask(mask, self.dim)
        trace = Trace()
        cell = 0
        while True:
            out = self.cells[cell].process(x, m, learn)
            if not out.is_match:
                break
            trace.path.append((cell, out))
            if out.created:
                break
            nxt = self.children.get((cell, out.footprint_id))
            if nxt is None:
                break
            cell = nxt
        if learn and trace.path:
            cell, out = trace.path[-1]
            if (not out.created
                    and self.cells[cell].counts[out.footprint_id] == self.policy.spawn_count
                    and (cell, out.footprint_id) not in self.children
                    and self.depths[cell] < self.policy.max_depth
                    and self.cells[cell].theta < self.policy.theta_max):
                trace.spawned = self._attach(cell, out.footprint_id)
        return trace

    def query(self, x, mask=None) -> Trace:
        return self.process(x, mask, learn=False)

    def cell_hashes(self) -> list[str]:
        return [c.state_hash() for c in self.cells]

    def state_hash(self) -> str:
        h = hashlib.sha256()
        for parent, digest in zip(self.parents, self.cell_hashes()):
            h.update(repr(parent).encode())
            h.update(digest.encode())
        return h.hexdigest()

    def check_invariants(self) -> None:
        """Raise ``AssertionError`` if the tree structure is inconsistent."""
        for idx, parent in enumerate(self.parents):
            if parent is None:
                assert idx == 0
                continue
            pcell, fid = parent
            assert self.children[(pcell, fid)] == idx
            assert fid < len(self.cells[pcell])
            assert self.cells[idx].theta > self.cells[pcell].theta
            assert self.depths[idx] == self.depths[pcell] + 1
        for c in self.cells:
            assert c.dim == self.dim

    def export_dot(self) -> str:
        return cluster_export_dot(self)

    def __repr__(self) -> str:
        return (f"Cluster(dim={self.dim}, cells={len(self.cells)}, "
                f"footprints={self.footprint_count()}, depth={self.tree_depth()})")


def cluster_export_dot(c: Cluster, name: str = "cluster") -> str:
    """Graphviz digraph: one node per cell (threshold, footprint count), edges labelled by parent footprint."""
    lines = [f"digraph {name} {{"]
    for idx, cell in enumerate(c.cells):
        label = f"cell {idx}\\ntheta={cell.theta:.4g}\\nfootprints={len(cell)}"
        lines.append(f'  c{idx} [label="{label}"];')
    for (pcell, fid), child in sorted(c.children.items(), key=lambda kv: kv[1]):
        lines.append(f'  c{pcell} -> c{child} [label="fp {fid}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
