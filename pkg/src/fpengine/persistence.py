"""Versioned canonical-JSON model files (``*.fpe.json``).

Every real number is written as a decimal string with 17 significant digits,
which round-trips any binary64 value exactly. Keys are sorted and whitespace
is fixed, so equal models serialise to equal bytes.
"""
from __future__ import annotations

import hashlib
import json
import os
from typing import Any

import numpy as np

from .cluster import Cluster, ClusterPolicy
from .codecs import codec_from_dict
from .cognition import EPISODIC, REACTIVE, SyntheticCognition
from .episodic import DeclarativeMemory
from .errors import EngineError, FormatError, ValidationError, VersionError
from .memory import Cell
from .metacluster import Metacluster, MetaclusterSpec

MAGIC = "FPENG"
VERSION = 1
EXTENSION = ".fpe.json"


def fmt_real(x: float) -> str:
    return format(float(x), ".17g")


def parse_real(s, field: str) -> float:
    if not isinstance(s, str):
        raise ValidationError(field, f"expected a decimal string, got {type(s).__name__}")
    try:
        return float(s)
    except ValueError:
        raise ValidationError(field, f"not a decimal number: {s!r}") from None


def _vec(v) -> list[str]:
    return [fmt_real(x) for x in np.asarray(v, dtype=np.float64)]


def _unvec(items, field: str, dim: int | None = None) -> np.ndarray:
    if not isinstance(items, list):
        raise ValidationError(field, "expected a list")
    v = np.array([parse_real(s, field) for s in items], dtype=np.float64)
    if dim is not None and v.size != dim:
        raise ValidationError(field, f"length {v.size}, expected {dim}")
    if v.size and (not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0):
        raise ValidationError(field, "values must lie in [0, 1]")
    return v


def _int(x, field: str, minimum: int | None = None) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        raise ValidationError(field, f"expected an integer, got {x!r}")
    if minimum is not None and x < minimum:
        raise ValidationError(field, f"must be >= {minimum}, got {x}")
    return x


# --- cells and clusters -------------------------------------------------------

def _cell_state(cell: Cell) -> dict:
    return {"theta": fmt_real(cell.theta), "dim": cell.dim,
            "footprints": [{"id": i, "count": int(c), "value": _vec(v)}
                           for i, (v, c) in enumerate(zip(cell.values, cell.counts))]}


def _cell_from(d: dict, field: str) -> Cell:
    dim = _int(d.get("dim"), f"{field}.dim", 1)
    theta = parse_real(d.get("theta"), f"{field}.theta")
    if not 0.0 <= theta <= 1.0:
        raise ValidationError(f"{field}.theta", f"must lie in [0, 1], got {theta}")
    cell = Cell(dim, theta)
    for i, fp in enumerate(d.get("footprints", [])):
        f = f"{field}.footprints[{i}]"
        if _int(fp.get("id"), f"{f}.id") != i:
            raise ValidationError(f"{f}.id", f"ids must run 0..n-1 in order, got {fp.get('id')}")
        count = _int(fp.get("count"), f"{f}.count", 1)
        cell._append(_unvec(fp.get("value"), f"{f}.value", dim), count)
    return cell


def _policy_from(d: dict, field: str) -> ClusterPolicy:
    try:
        return ClusterPolicy(parse_real(d["theta_seed"], f"{field}.theta_seed"),
                             parse_real(d["theta_step"], f"{field}.theta_step"),
                             parse_real(d["theta_max"], f"{field}.theta_max"),
                             _int(d["spawn_count"], f"{field}.spawn_count"),
                             _int(d["max_depth"], f"{field}.max_depth"))
    except KeyError as e:
        raise ValidationError(field, f"missing key {e}") from None
    except (ValueError, EngineError) as e:
        if isinstance(e, ValidationError):
            raise
        raise ValidationError(field, str(e)) from None


def _policy_dict(p: ClusterPolicy) -> dict:
    return {"theta_seed": fmt_real(p.theta_seed), "theta_step": fmt_real(p.theta_step),
            "theta_max": fmt_real(p.theta_max), "spawn_count": p.spawn_count,
            "max_depth": p.max_depth}


def _cluster_state(c: Cluster) -> dict:
    return {"dim": c.dim, "policy": _policy_dict(c.policy),
            "cells": [{"parent": None if p is None else list(p), **_cell_state(cell)}
                      for p, cell in zip(c.parents, c.cells)]}


def _cluster_from(d: dict, field: str) -> Cluster:
    dim = _int(d.get("dim"), f"{field}.dim", 1)
    policy = _policy_from(d.get("policy", {}), f"{field}.policy")
    c = Cluster(dim, policy)
    cells = d.get("cells")
    if not isinstance(cells, list) or not cells:
        raise ValidationError(f"{field}.cells", "a cluster needs at least its seed cell")
    c.cells, c.parents, c.depths, c.children = [], [], [], {}
    for i, cd in enumerate(cells):
        f = f"{field}.cells[{i}]"
        cell = _cell_from(cd, f)
        if cell.dim != dim:
            raise ValidationError(f"{f}.dim", f"{cell.dim} differs from cluster dimension {dim}")
        parent = cd.get("parent")
        if i == 0:
            if parent is not None:
                raise ValidationError(f"{f}.parent", "the seed cell has no parent")
            depth = 1
        else:
            if not (isinstance(parent, list) and len(parent) == 2):
                raise ValidationError(f"{f}.parent", "expected [cell, footprint]")
            pc, fid = _int(parent[0], f"{f}.parent[0]", 0), _int(parent[1], f"{f}.parent[1]", 0)
            if pc >= i or fid >= len(c.cells[pc]):
                raise ValidationError(f"{f}.parent", f"refers to unknown footprint {parent}")
            if (pc, fid) in c.children:
                raise ValidationError(f"{f}.parent", f"footprint {parent} already has a child")
            if not cell.theta > c.cells[pc].theta:
                raise ValidationError(f"{f}.theta", "a child threshold must exceed its parent's")
            depth = c.depths[pc] + 1
            if depth > policy.max_depth:
                raise ValidationError(f"{f}.parent", f"depth {depth} exceeds max_depth")
            c.children[(pc, fid)] = i
            parent = (pc, fid)
        c.cells.append(cell)
        c.parents.append(parent)
        c.depths.append(depth)
    return c


# --- metaclusters, declarative memory, cognition --------------------------------

def _spec_dict(spec: MetaclusterSpec) -> dict:
    d = spec.to_dict()
    for n in d["nodes"]:
        n["policy"] = _policy_dict(ClusterPolicy(**n["policy"]))
    for ch in d["channels"]:
        if ch["codec"] and "threshold" in ch["codec"]:
            ch["codec"]["threshold"] = fmt_real(ch["codec"]["threshold"])
    return d


def _spec_from(d: dict, field: str) -> MetaclusterSpec:
    try:
        d = json.loads(json.dumps(d))
        for i, n in enumerate(d["nodes"]):
            n["policy"] = _policy_from(n["policy"], f"{field}.nodes[{i}].policy").to_dict()
        for i, ch in enumerate(d["channels"]):
            if ch.get("codec") and "threshold" in ch["codec"]:
                ch["codec"]["threshold"] = parse_real(ch["codec"]["threshold"],
                                                      f"{field}.channels[{i}].codec.threshold")
        return MetaclusterSpec.from_dict(d)
    except ValidationError:
        raise
    except (KeyError, TypeError, ValueError, EngineError) as e:
        raise ValidationError(field, str(e)) from None


def _mc_state(mc: Metacluster) -> dict:
    return {"spec": _spec_dict(mc.spec),
            "archetype_tau": None if mc.archetype_tau is None else fmt_real(mc.archetype_tau),
            "clusters": {name: _cluster_state(c) for name, c in mc.clusters.items()}}


def _mc_from(d: dict, field: str) -> Metacluster:
    spec = _spec_from(d.get("spec", {}), f"{field}.spec")
    tau = d.get("archetype_tau")
    tau = None if tau is None else parse_real(tau, f"{field}.archetype_tau")
    if tau is not None and not 0.0 <= tau <= 1.0:
        raise ValidationError(f"{field}.archetype_tau", "must lie in [0, 1]")
    mc = Metacluster(spec, tau)
    clusters = d.get("clusters", {})
    if set(clusters) != set(mc.clusters):
        raise ValidationError(f"{field}.clusters", f"expected nodes {sorted(mc.clusters)}")
    for name in mc.clusters:
        c = _cluster_from(clusters[name], f"{field}.clusters.{name}")
        if c.dim != mc.layouts[name].total:
            raise ValidationError(f"{field}.clusters.{name}.dim",
                                  f"{c.dim} does not match layout total {mc.layouts[name].total}")
        if c.policy != mc.clusters[name].policy:
            raise ValidationError(f"{field}.clusters.{name}.policy", "differs from the policy declared for this node")
        mc.clusters[name] = c
    return mc


def _dm_state(dm: DeclarativeMemory) -> dict:
    return {"n": dm.n, "frame_dim": dm.frame_dim,
            "buffer": [_vec(f) for f in dm.buffer.frames],
            "cluster": _cluster_state(dm.cluster)}


def _dm_from(d: dict, field: str) -> DeclarativeMemory:
    n = _int(d.get("n"), f"{field}.n", 2)
    fdim = _int(d.get("frame_dim"), f"{field}.frame_dim", 1)
    dm = DeclarativeMemory(fdim, n)
    c = _cluster_from(d.get("cluster", {}), f"{field}.cluster")
    if c.dim != n * fdim:
        raise ValidationError(f"{field}.cluster.dim", f"expected {n * fdim}, got {c.dim}")
    dm.cluster = c
    buf = d.get("buffer", [])
    if not isinstance(buf, list) or len(buf) > n:
        raise ValidationError(f"{field}.buffer", f"holds more than {n} frames")
    for i, f in enumerate(buf):
        dm.buffer.push(_unvec(f, f"{field}.buffer[{i}]", fdim))
    return dm


def _sc_state(sc: SyntheticCognition) -> dict:
    return {"motor": sc.motor, "mode": sc.mode,
            "motoperceptive": _mc_state(sc.motoperceptive),
            "declarative": None if sc.declarative is None else _dm_state(sc.declarative),
            "procedural": None,
            "history": [{"value": _vec(v), "mask": [bool(b) for b in m]} for v, m in sc.history]}


def _sc_from(d: dict, field: str) -> SyntheticCognition:
    mc = _mc_from(d.get("motoperceptive", {}), f"{field}.motoperceptive")
    dm = d.get("declarative")
    dm = None if dm is None else _dm_from(dm, f"{field}.declarative")
    if d.get("procedural") is not None:
        raise ValidationError(f"{field}.procedural", "reserved; must be null")
    mode = d.get("mode")
    if mode not in (REACTIVE, EPISODIC):
        raise ValidationError(f"{field}.mode", f"unknown mode {mode!r}")
    try:
        sc = SyntheticCognition(mc, d.get("motor"), dm, mode)
    except EngineError as e:
        raise ValidationError(field, str(e)) from None
    hist = d.get("history", [])
    if len(hist) > sc.history.maxlen:
        raise ValidationError(f"{field}.history", "longer than the episode context")
    for i, h in enumerate(hist):
        v = _unvec(h.get("value"), f"{field}.history[{i}].value", mc.root_dim)
        m = np.array(h.get("mask"), dtype=bool)
        if m.shape != (mc.root_dim,):
            raise ValidationError(f"{field}.history[{i}].mask", "wrong length")
        sc.history.append((v, m))
    return sc


_KINDS = {
    Cell: ("cell", _cell_state),
    Cluster: ("cluster", _cluster_state),
    Metacluster: ("metacluster", _mc_state),
    DeclarativeMemory: ("declarative", _dm_state),
    SyntheticCognition: ("cognition", _sc_state),
}
_LOADERS = {"cell": _cell_from, "cluster": _cluster_from, "metacluster": _mc_from,
            "declarative": _dm_from, "cognition": _sc_from}


def _config(kind: str, state: dict) -> dict:
    """Echo of the construction parameters, for readers of the file."""
    if kind == "cell":
        return {"theta": state["theta"], "dim": state["dim"]}
    if kind == "cluster":
        return {"policy": state["policy"], "dim": state["dim"]}
    if kind == "metacluster":
        return {"spec": state["spec"], "archetype_tau": state["archetype_tau"]}
    if kind == "declarative":
        return {"n": state["n"], "frame_dim": state["frame_dim"],
                "policy": state["cluster"]["policy"]}
    return {"motor": state["motor"], "mode": state["mode"],
            "motoperceptive": _config("metacluster", state["motoperceptive"]),
            "declarative": None if state["declarative"] is None
            else _config("declarative", state["declarative"])}


def to_document(model: Any, codec=None) -> dict:
    """Wrap ``model`` in the versioned envelope.

    ``codec`` optionally records how the model's input space maps to raw
    signals (used to render footprints of single-channel models).
    """
    for cls, (kind, fn) in _KINDS.items():
        if isinstance(model, cls):
            state = fn(model)
            config = _config(kind, state)
            if codec is not None:
                cd = codec.to_dict()
                if "threshold" in cd:
                    cd["threshold"] = fmt_real(cd["threshold"])
                config["codec"] = cd
            return {"magic": MAGIC, "version": VERSION, "kind": kind,
                    "config": config, "payload": state}
    raise TypeError(f"cannot serialise {type(model).__name__}")


def canonical_bytes(doc: Any) -> bytes:
    return (json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)
            + "\n").encode("utf-8")


def dumps_model(model: Any, codec=None) -> bytes:
    return canonical_bytes(to_document(model, codec))


def _document(data: bytes) -> dict:
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise FormatError(f"not a well-formed model file: {e}") from None
    if not isinstance(doc, dict) or doc.get("magic") != MAGIC:
        raise FormatError("bad magic: not an FPENG model file")
    version = doc.get("version")
    if version != VERSION:
        raise VersionError(f"unsupported model file version {version!r} (this build reads {VERSION})")
    kind = doc.get("kind")
    if kind not in _LOADERS:
        raise FormatError(f"unknown model kind {kind!r}")
    payload = doc.get("payload")
    if not isinstance(payload, dict):
        raise FormatError("missing payload")
    return doc


def loads_model(data: bytes) -> Any:
    doc = _document(data)
    kind, payload = doc["kind"], doc["payload"]
    try:
        return _LOADERS[kind](payload, kind)
    except (AttributeError, TypeError, KeyError) as e:
        raise ValidationError(kind, f"malformed payload ({e})") from None


def save_model(model: Any, path, codec=None) -> None:
    data = dumps_model(model, codec)
    path = os.fspath(path)
    try:
        with open(path, "wb") as f:
            f.write(data)
    except OSError as e:
        raise OSError(e.errno, f"cannot write model file: {e.strerror}", path) from e


def _read(path) -> bytes:
    path = os.fspath(path)
    try:
        with open(path, "rb") as f:
            return f.read()
    except OSError as e:
        raise OSError(e.errno, f"cannot read model file: {e.strerror}", path) from e


def load_model(path) -> Any:
    return loads_model(_read(path))


def load_codec(path):
    """The codec recorded alongside a model, or ``None``."""
    cd = _document(_read(path))["config"].get("codec")
    if cd is None:
        return None
    cd = dict(cd)
    if "threshold" in cd:
        cd["threshold"] = parse_real(cd["threshold"], "config.codec.threshold")
    try:
        return codec_from_dict(cd)
    except (KeyError, ValueError, EngineError) as e:
        raise ValidationError("config.codec", str(e)) from None


def model_hash(model: Any) -> str:
    """SHA-256 of the canonical serialisation."""
    return hashlib.sha256(dumps_model(model)).hexdigest()
