"""Metaclusters: trees of Clusters over named input channels.

Leaf clusters read raw channel vectors. Every other cluster reads the
concatenated archetypes of its children. A channel missing from the input is
zero-filled and masked out all the way up, which lets the top cluster match
on what was observed and project what was not. ``complete`` walks that top
projection back down to the missing channel's leaf cluster.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .cluster import Cluster, ClusterPolicy, Trace
from .codecs import codec_from_dict
from .core import SegmentLayout, as_vector, binarize
from .errors import ArgumentError, DimensionError, LookupFailure, NoMatchError


@dataclass(frozen=True)
class ChannelSpec:
    name: str
    dim: int
    codec: object = None

    def to_dict(self) -> dict:
        return {"name": self.name, "dim": self.dim,
                "codec": None if self.codec is None else self.codec.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "ChannelSpec":
        codec = codec_from_dict(d["codec"]) if d.get("codec") else None
        return cls(d["name"], int(d["dim"]), codec)


@dataclass(frozen=True)
class NodeSpec:
    name: str
    children: tuple[str, ...]
    policy: ClusterPolicy = ClusterPolicy()

    def to_dict(self) -> dict:
        return {"name": self.name, "children": list(self.children), "policy": self.policy.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "NodeSpec":
        return cls(d["name"], tuple(d["children"]), ClusterPolicy.from_dict(d["policy"]))


@dataclass(frozen=True)
class MetaclusterSpec:
    """Channels plus the cluster nodes wired over them.

    Leaf nodes list only channels as children, inner nodes list only nodes.
    Every channel and every non-root node has exactly one parent, so the
    graph is a tree with a single root.
    """
    channels: tuple[ChannelSpec, ...]
    nodes: tuple[NodeSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "channels", tuple(self.channels))
        object.__setattr__(self, "nodes", tuple(self.nodes))
        ch = [c.name for c in self.channels]
        nd = [n.name for n in self.nodes]
        if not ch or not nd:
            raise ArgumentError("a metacluster needs at least one channel and one node")
        if len(set(ch + nd)) != len(ch) + len(nd):
            raise ArgumentError("channel and node names must be unique")
        for c in self.channels:
            if c.dim < 1:
                raise ArgumentError(f"channel {c.name!r} must have positive dimension")
            if c.codec is not None and c.codec.dim != c.dim:
                raise ArgumentError(f"channel {c.name!r} codec produces {c.codec.dim} dims, not {c.dim}")
        parent: dict[str, str] = {}
        for n in self.nodes:
            if not n.children:
                raise ArgumentError(f"node {n.name!r} has no children")
            kinds = {c in ch for c in n.children}
            for c in n.children:
                if c not in ch and c not in nd:
                    raise LookupFailure(f"node {n.name!r} refers to unknown child {c!r}")
                if c in parent:
                    raise ArgumentError(f"{c!r} feeds both {parent[c]!r} and {n.name!r}")
                parent[c] = n.name
            if len(kinds) > 1:
                raise ArgumentError(f"node {n.name!r} mixes channels and nodes as children")
        missing = [c for c in ch if c not in parent]
        if missing:
            raise ArgumentError(f"channels {missing} feed no node")
        roots = [n for n in nd if n not in parent]
        if len(roots) != 1:
            raise ArgumentError(f"expected exactly one root node, found {roots}")
        # Every node must reach the root; otherwise there is a cycle.
        for n in nd:
            seen = set()
            while n in parent:
                if n in seen:
                    raise ArgumentError("node graph contains a cycle")
                seen.add(n)
                n = parent[n]

    @property
    def channel_names(self) -> list[str]:
        return [c.name for c in self.channels]

    def to_dict(self) -> dict:
        return {"channels": [c.to_dict() for c in self.channels],
                "nodes": [n.to_dict() for n in self.nodes]}

    @classmethod
    def from_dict(cls, d: dict) -> "MetaclusterSpec":
        return cls(tuple(ChannelSpec.from_dict(c) for c in d["channels"]),
                   tuple(NodeSpec.from_dict(n) for n in d["nodes"]))


@dataclass
class MCResult:
    traces: dict[str, Trace]
    node_inputs: dict[str, tuple[np.ndarray, np.ndarray]]
    leaf_projections: dict[str, np.ndarray]
    channel_order: list[str]
    channel_dims: dict[str, int]
    root: str
    completions: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def top_projection(self) -> Optional[np.ndarray]:
        t = self.traces.get(self.root)
        return t.projection if t is not None and t.is_match else None

    @property
    def root_input(self) -> np.ndarray:
        return self.node_inputs[self.root][0]

    @property
    def root_mask(self) -> np.ndarray:
        return self.node_inputs[self.root][1]

    @property
    def mc_projection(self) -> np.ndarray:
        return mc_projection(self)


def mc_projection(result: MCResult) -> np.ndarray:
    """Leaf projections concatenated in declared channel order.

    An absent channel contributes its completion when one was computed, and
    zeros otherwise.
    """
    parts = []
    for ch in result.channel_order:
        if ch in result.leaf_projections:
            parts.append(result.leaf_projections[ch])
        elif ch in result.completions:
            parts.append(result.completions[ch])
        else:
            parts.append(np.zeros(result.channel_dims[ch]))
    return np.concatenate(parts)


class Metacluster:
    def __init__(self, spec: MetaclusterSpec, archetype_tau: float | None = None):
        if archetype_tau is not None and not 0.0 <= archetype_tau <= 1.0:
            raise ArgumentError(f"archetype_tau must lie in [0, 1], got {archetype_tau}")
        self.spec = spec
        self.archetype_tau = archetype_tau
        self.channel_dims = {c.name: c.dim for c in spec.channels}
        self.codecs = {c.name: c.codec for c in spec.channels}
        self.parent: dict[str, str] = {}
        for n in spec.nodes:
            for c in n.children:
                self.parent[c] = n.name
        self.root = next(n.name for n in spec.nodes if n.name not in self.parent)
        self.order = self._topological(spec)
        self.layouts: dict[str, SegmentLayout] = {}
        self.clusters: dict[str, Cluster] = {}
        by_name = {n.name: n for n in spec.nodes}
        for name in self.order:
            node = by_name[name]
            self.layouts[name] = SegmentLayout(
                (c, self.channel_dims[c] if c in self.channel_dims else self.layouts[c].total)
                for c in node.children)
            self.clusters[name] = Cluster(self.layouts[name].total, node.policy)
        self.children = {n.name: n.children for n in spec.nodes}

    @staticmethod
    def _topological(spec: MetaclusterSpec) -> list[str]:
        by_name = {n.name: n for n in spec.nodes}
        order: list[str] = []

        def visit(name):
            for c in by_name[name].children:
                if c in by_name and c not in order:
                    visit(c)
            order.append(name)

        for n in spec.nodes:
            if n.name not in order:
                visit(n.name)
        return order

    @property
    def channel_names(self) -> list[str]:
        return self.spec.channel_names

    @property
    def root_dim(self) -> int:
        return self.layouts[self.root].total

    def leaf_of(self, channel: str) -> str:
        if channel not in self.channel_dims:
            raise LookupFailure(f"unknown channel {channel!r}")
        return self.parent[channel]

    def _archetype(self, trace: Trace) -> np.ndarray:
        a = trace.archetype
        return binarize(a, self.archetype_tau) if self.archetype_tau is not None else a

    def _check_inputs(self, inputs: Mapping[str, object]) -> dict[str, np.ndarray]:
        checked = {}
        for name, v in inputs.items():
            if name not in self.channel_dims:
                raise LookupFailure(f"unknown channel {name!r}")
            v = as_vector(v, name=name)
            if v.size != self.channel_dims[name]:
                raise DimensionError(
                    f"channel {name!r} expects {self.channel_dims[name]} dims, got {v.size}")
            checked[name] = v
        if not checked:
            raise ArgumentError("at least one channel must be present")
        return checked

    def process(self, inputs: Mapping[str, object], learn: bool = True) -> MCResult:
        """Bottom-up pass; clusters whose whole input is masked out are skipped."""
        inputs = self._check_inputs(inputs)
        contrib: dict[str, tuple[np.ndarray, np.ndarray]] = {}
        for ch, d in self.channel_dims.items():
            if ch in inputs:
                contrib[ch] = (inputs[ch], np.ones(d, dtype=bool))
            else:
                contrib[ch] = (np.zeros(d), np.zeros(d, dtype=bool))
        traces: dict[str, Trace] = {}
        node_inputs = {}
        for name in self.order:
            kids = self.children[name]
            x = np.concatenate([contrib[c][0] for c in kids])
            m = np.concatenate([contrib[c][1] for c in kids])
            node_inputs[name] = (x, m)
            d = x.size
            if m.any():
                t = self.clusters[name].process(x, m, learn)
                traces[name] = t
                if t.is_match:
                    contrib[name] = (self._archetype(t), np.ones(d, dtype=bool))
                    continue
            contrib[name] = (np.zeros(d), np.zeros(d, dtype=bool))
        leaf_proj = {}
        for ch in self.channel_names:
            leaf = self.parent[ch]
            t = traces.get(leaf)
            if ch in inputs and t is not None and t.is_match:
                leaf_proj[ch] = t.projection[self.layouts[leaf].slice(ch)].copy()
        return MCResult(traces, node_inputs, leaf_proj, self.channel_names,
                        dict(self.channel_dims), self.root)

    def query(self, inputs: Mapping[str, object]) -> MCResult:
        return self.process(inputs, learn=False)

    def path_to(self, channel: str) -> list[str]:
        """Node names from the root down to the leaf holding ``channel``."""
        node = self.leaf_of(channel)
        path = [node]
        while node in self.parent:
            node = self.parent[node]
            path.append(node)
        return path[::-1]

    def descend(self, node: str, value, channel: str) -> np.ndarray:
        """Push a vector in ``node``'s input space down to ``channel``.

        At each step the child's segment is queried against the child cluster
        and its projection becomes the next value.
        """
        path = self.path_to(channel)
        if node not in path:
            raise ArgumentError(f"node {node!r} is not above channel {channel!r}")
        value = as_vector(value)
        for parent, child in zip(path[path.index(node):], path[path.index(node) + 1:]):
            seg = value[self.layouts[parent].slice(child)]
            if self.archetype_tau is not None:
                seg = binarize(seg, self.archetype_tau)
            t = self.clusters[child].query(seg)
            if not t.is_match:
                raise NoMatchError(f"cluster {child!r} holds no footprints")
            value = t.projection
        leaf = path[-1]
        return value[self.layouts[leaf].slice(channel)].copy()

    def complete(self, inputs: Mapping[str, object], target: str,
                 result: MCResult | None = None) -> np.ndarray:
        """Fill in the ``target`` channel from the observed ones, without learning."""
        if target not in self.channel_dims:
            raise LookupFailure(f"unknown channel {target!r}")
        if target in inputs:
            raise ArgumentError(f"target channel {target!r} must be absent from the inputs")
        if result is None:
            result = self.process(inputs, learn=False)
        top = result.traces.get(self.root)
        if top is None or not top.is_match:
            raise NoMatchError("the root cluster matched nothing")
        out = self.descend(self.root, top.projection, target)
        result.completions[target] = out
        return out

    def complete_all(self, inputs: Mapping[str, object]) -> MCResult:
        """Query pass that also completes every absent channel it can."""
        result = self.process(inputs, learn=False)
        for ch in self.channel_names:
            if ch not in inputs:
                try:
                    self.complete(inputs, ch, result)
                except NoMatchError:
                    pass
        return result

    def state_hash(self) -> str:
        h = hashlib.sha256()
        for name in self.order:
            h.update(name.encode())
            h.update(self.clusters[name].state_hash().encode())
        return h.hexdigest()


def mc_process(mc: Metacluster, inputs, learn: bool = True) -> MCResult:
    return mc.process(inputs, learn)


def mc_complete(mc: Metacluster, inputs, target: str) -> np.ndarray:
    return mc.complete(inputs, target)


def simple_spec(channels: Sequence[ChannelSpec], leaf_policies: Mapping[str, ClusterPolicy] | ClusterPolicy,
                top_policy: ClusterPolicy, top: str = "top") -> MetaclusterSpec:
    """One leaf cluster per channel under a single top cluster."""
    nodes = []
    for c in channels:
        pol = leaf_policies if isinstance(leaf_policies, ClusterPolicy) else leaf_policies[c.name]
        nodes.append(NodeSpec(f"{c.name}_cluster", (c.name,), pol))
    nodes.append(NodeSpec(top, tuple(n.name for n in nodes), top_policy))
    return MetaclusterSpec(tuple(channels), tuple(nodes))
