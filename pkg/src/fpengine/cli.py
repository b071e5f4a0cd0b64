"""Command-line interface: train, render, export-dot, stats, complete and demos.

Exit status: 0 success, 2 bad arguments, 3 I/O, 4 format, 5 validation,
6 no match, 7 lookup.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .cluster import Cluster, ClusterPolicy
from .codecs import (CategoricalCodecSpec, ImageCodecSpec, codec_from_dict, decode_categorical,
                     decode_image, encode_categorical, encode_image)
from .cognition import EPISODIC, REACTIVE, SyntheticCognition
from .corpora import (MOTOR, MOTORS, build_agent, episodic_corpus, flip_bits, run_sequence,
                      sensorimotor_corpus, train_episodic)
from .errors import (ArgumentError, FormatError, LookupFailure, NoMatchError,
                     ValidationError)
from .formats import load_idx, read_pgm, write_pgm
from .memory import Cell
from .metacluster import Metacluster
from .persistence import load_codec, load_model, save_model

log = logging.getLogger("fpengine")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_FORMAT = 4
EXIT_VALIDATION = 5
EXIT_NOMATCH = 6
EXIT_LOOKUP = 7

MODEL_FILE = "model.fpe.json"


@dataclass
class RunConfig:
    """Everything a run needs; loaded from JSON, then overridden by flags."""
    model: str = "cluster"
    theta: float = 0.0
    policy: ClusterPolicy = field(default_factory=lambda: ClusterPolicy(0.35, 0.15, 1.0, 50, 8))
    image: ImageCodecSpec = field(default_factory=lambda: ImageCodecSpec(28, 28, 0.5))
    dataset: Optional[str] = None
    labels: Optional[str] = None
    classes: Optional[list[int]] = None
    limit: Optional[int] = 10000
    seed: int = 0
    out: str = "fpe_out"
    episode_length: int = 3
    patterns: int = 8
    passes: int = 3
    noise: float = 0.1
    noise_trials: int = 20

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        cfg = cls()
        for key, value in d.items():
            if key == "policy":
                cfg.policy = ClusterPolicy(**value)
            elif key == "image":
                cfg.image = codec_from_dict({"kind": "image", **value})
            elif hasattr(cfg, key):
                setattr(cfg, key, value)
            else:
                raise ArgumentError(f"unknown config key {key!r}")
        return cfg

    def to_dict(self) -> dict:
        return {"model": self.model, "theta": self.theta, "policy": self.policy.to_dict(),
                "image": {"width": self.image.width, "height": self.image.height,
                          "threshold": self.image.threshold},
                "dataset": self.dataset, "labels": self.labels, "classes": self.classes,
                "limit": self.limit, "seed": self.seed, "out": self.out,
                "episode_length": self.episode_length, "patterns": self.patterns,
                "passes": self.passes, "noise": self.noise, "noise_trials": self.noise_trials}


def _out_path(cfg: RunConfig, name: str) -> str:
    os.makedirs(cfg.out, exist_ok=True)
    return os.path.join(cfg.out, name)


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def load_samples(cfg: RunConfig) -> np.ndarray:
    if cfg.dataset is None:
        raise ArgumentError("no dataset given (use --dataset or the config's 'dataset')")
    images = load_idx(cfg.dataset)
    if images.ndim != 2:
        raise FormatError(f"{cfg.dataset} is not an IDX image file")
    if images.shape[1] != cfg.image.dim:
        raise FormatError(f"{cfg.dataset} holds {images.shape[1]}-pixel images, "
                          f"config expects {cfg.image.width}x{cfg.image.height}")
    if cfg.classes is not None:
        if cfg.labels is None:
            raise ArgumentError("filtering by class needs a label file")
        labels = load_idx(cfg.labels)
        if labels.ndim != 1 or labels.size != len(images):
            raise FormatError("label file does not pair with the image file")
        images = images[np.isin(labels, cfg.classes)]
    if cfg.limit is not None:
        images = images[:cfg.limit]
    return images


def cluster_stats(c: Cluster) -> dict:
    return {"cells": [{"index": i, "theta": cell.theta, "depth": c.depths[i],
                       "parent": None if c.parents[i] is None else list(c.parents[i]),
                       "footprints": len(cell), "counts": [int(n) for n in cell.counts]}
                      for i, cell in enumerate(c.cells)],
            "tree_depth": c.tree_depth(), "footprints": c.footprint_count()}


def model_stats(model) -> dict:
    if isinstance(model, Cell):
        return {"kind": "cell", "theta": model.theta, "footprints": len(model),
                "counts": [int(n) for n in model.counts]}
    if isinstance(model, Cluster):
        return {"kind": "cluster", **cluster_stats(model)}
    if isinstance(model, Metacluster):
        return {"kind": "metacluster",
                "nodes": {name: cluster_stats(c) for name, c in model.clusters.items()}}
    if isinstance(model, SyntheticCognition):
        return {"kind": "cognition", "mode": model.mode,
                "motoperceptive": model_stats(model.motoperceptive)["nodes"],
                "declarative": None if model.declarative is None
                else cluster_stats(model.declarative.cluster)}
    return {"kind": "declarative", "n": model.n, "episodes": cluster_stats(model.cluster)}


def cmd_train(cfg: RunConfig) -> dict:
    samples = load_samples(cfg)
    if cfg.model == "cell":
        model = Cell(cfg.image.dim, cfg.theta)
        step = lambda x: model.process(x, None, True)
    elif cfg.model == "cluster":
        model = Cluster(cfg.image.dim, cfg.policy)
        step = lambda x: model.process(x, None, True)
    else:
        raise ArgumentError(f"train supports 'cell' and 'cluster' models, not {cfg.model!r}")
    start = time.perf_counter()
    for px in samples:
        step(encode_image(px, cfg.image))
    elapsed = time.perf_counter() - start
    model_path = _out_path(cfg, MODEL_FILE)
    save_model(model, model_path, codec=cfg.image)
    report = {"samples": int(len(samples)), "wall_time_s": elapsed, "model": model_path,
              **model_stats(model)}
    if isinstance(model, Cell):
        report["tree_depth"] = 1
    _write_json(_out_path(cfg, "stats.json"), report)
    return report


def parse_selector(sel: str) -> tuple[Optional[str], int, Optional[int]]:
    """``[node/]cell:footprint`` or ``[node/]cell:*`` (``seed`` means ``0:*``)."""
    node = None
    if "/" in sel:
        node, sel = sel.split("/", 1)
    if sel == "seed":
        return node, 0, None
    try:
        cell, fp = sel.split(":")
        return node, int(cell), None if fp == "*" else int(fp)
    except ValueError:
        raise LookupFailure(f"bad selector {sel!r}; expected CELL:FOOTPRINT or CELL:*") from None


def _render_target(model, codec, node: Optional[str]):
    if isinstance(model, SyntheticCognition):
        model = model.motoperceptive
    if isinstance(model, Metacluster):
        if node is None:
            raise LookupFailure("selector must name a node for metacluster models (NODE/CELL:FP)")
        if node not in model.clusters:
            raise LookupFailure(f"unknown node {node!r}")
        kids = model.children[node]
        if len(kids) != 1 or not isinstance(model.codecs.get(kids[0]), ImageCodecSpec):
            raise LookupFailure(f"node {node!r} does not read a single image channel")
        return model.clusters[node], model.codecs[kids[0]]
    if node is not None:
        raise LookupFailure(f"selector names node {node!r}, but the model has no nodes")
    if not isinstance(codec, ImageCodecSpec):
        raise LookupFailure("model file records no image codec to render with")
    return model, codec


def cmd_render(model_path: str, selector: str, cfg: RunConfig, file: Optional[str] = None) -> list[str]:
    model = load_model(model_path)
    node, cell_idx, fid = parse_selector(selector)
    target, codec = _render_target(model, load_codec(model_path), node)
    if isinstance(target, Cell):
        cells = [target]
    else:
        cells = target.cells
    if not 0 <= cell_idx < len(cells):
        raise LookupFailure(f"no cell {cell_idx} (model has {len(cells)})")
    cell = cells[cell_idx]
    ids = range(len(cell)) if fid is None else [fid]
    written = []
    for i in ids:
        if not 0 <= i < len(cell):
            raise LookupFailure(f"cell {cell_idx} has no footprint {i} (it has {len(cell)})")
        name = _out_path(cfg, os.path.basename(file) if (file and fid is not None)
                         else f"{node + '_' if node else ''}cell{cell_idx}_fp{i}.pgm")
        write_pgm(name, decode_image(cell.values[i], codec), codec.width, codec.height)
        written.append(name)
    return written


def cmd_export_dot(model_path: str, cfg: RunConfig, file: Optional[str] = None) -> list[str]:
    model = load_model(model_path)
    if isinstance(model, SyntheticCognition):
        model = model.motoperceptive
    if isinstance(model, Cell):
        c = Cluster(model.dim, ClusterPolicy(model.theta, 1.0, 1.0, 2, 1))
        c.cells[0] = model
        targets = {"cluster": c}
    elif isinstance(model, Cluster):
        targets = {"cluster": model}
    elif isinstance(model, Metacluster):
        targets = dict(model.clusters)
    else:
        targets = {"episodes": model.cluster}
    written = []
    for name, c in targets.items():
        path = _out_path(cfg, os.path.basename(file) if (file and len(targets) == 1) else f"{name}.dot")
        with open(path, "w", encoding="utf-8") as f:
            f.write(c.export_dot())
        written.append(path)
    return written


def _parse_inputs(items: list[str], mc: Metacluster) -> dict[str, np.ndarray]:
    inputs = {}
    for item in items:
        if "=" not in item:
            raise ArgumentError(f"--input expects CHANNEL=VALUE, got {item!r}")
        ch, value = item.split("=", 1)
        if ch not in mc.channel_dims:
            raise LookupFailure(f"unknown channel {ch!r}")
        codec = mc.codecs.get(ch)
        if isinstance(codec, CategoricalCodecSpec):
            inputs[ch] = encode_categorical(int(value), codec)
        elif isinstance(codec, ImageCodecSpec):
            w, h, px = read_pgm(value)
            if (w, h) != (codec.width, codec.height):
                raise FormatError(f"{value} is {w}x{h}, channel {ch!r} expects {codec.width}x{codec.height}")
            inputs[ch] = encode_image(px, codec)
        else:
            inputs[ch] = np.array([float(t) for t in value.split(",")])
    return inputs


def cmd_complete(model_path: str, items: list[str], target: str) -> dict:
    model = load_model(model_path)
    if isinstance(model, SyntheticCognition):
        model = model.motoperceptive
    if not isinstance(model, Metacluster):
        raise ArgumentError("complete needs a metacluster or cognition model")
    inputs = _parse_inputs(items, model)
    vec = model.complete(inputs, target)
    out = {"target": target, "vector": [float(v) for v in vec]}
    codec = model.codecs.get(target)
    if isinstance(codec, CategoricalCodecSpec):
        sym, conf = decode_categorical(vec, codec)
        out.update(symbol=sym, confidence=conf)
    return out


def cmd_demo_sensorimotor(cfg: RunConfig) -> dict:
    corpus = sensorimotor_corpus(cfg.patterns, cfg.seed)
    mc = Metacluster(corpus.spec())
    for _ in range(cfg.passes):
        for k in range(len(corpus)):
            mc.process(corpus.channels(k), learn=True)
    rng = np.random.default_rng(cfg.seed + 1)
    patterns, correct, noisy_correct, noisy_total, no_match = [], 0, 0, 0, False
    for k in range(len(corpus)):
        try:
            sym, conf = decode_categorical(mc.complete(corpus.sensors(k), MOTOR), corpus.motor_codec)
        except NoMatchError:
            no_match = True
            patterns.append({"pattern": k, "expected": corpus.motors[k], "symbol": None,
                             "confidence": None})
            continue
        correct += sym == corpus.motors[k]
        patterns.append({"pattern": k, "expected": corpus.motors[k], "symbol": sym,
                         "confidence": conf})
        for _ in range(cfg.noise_trials):
            noisy = {ch: flip_bits(v, cfg.noise, rng) for ch, v in corpus.sensors(k).items()}
            s, _ = decode_categorical(mc.complete(noisy, MOTOR), corpus.motor_codec)
            noisy_correct += s == corpus.motors[k]
            noisy_total += 1
    report = {"patterns": patterns, "correct": int(correct), "total": len(corpus),
              "accuracy": correct / len(corpus), "no_match": no_match, "passes": cfg.passes,
              "noise": cfg.noise,
              "noisy_accuracy": noisy_correct / noisy_total if noisy_total else None}
    save_model(mc, _out_path(cfg, "sensorimotor.fpe.json"))
    _write_json(_out_path(cfg, "sensorimotor_report.json"), report)
    return report


def _episodic_run(corpus, n: Optional[int], mode: str, passes: int) -> dict:
    sc = build_agent(corpus, n, mode)
    train_episodic(sc, corpus, passes)
    rows, correct = [], 0
    for seq in corpus.sequences:
        res = run_sequence(sc, corpus, seq)[-1]
        expected = seq[-1][1]
        got = MOTORS[res.decoded_motor[0]]
        correct += got == expected
        rows.append({"context": seq[0][0], "expected": expected, "motor": got,
                     "confidence": res.decoded_motor[1], "mode_used": res.mode_used,
                     "fallback": res.fallback, "vector": [float(v) for v in res.motor]})
    sc.reset_episode()
    return {"n": n, "mode": mode, "correct": correct, "total": len(corpus.sequences),
            "accuracy": correct / len(corpus.sequences), "steps": rows}, sc


def cmd_demo_episodic(cfg: RunConfig) -> dict:
    corpus = episodic_corpus(cfg.seed)
    reactive, _ = _episodic_run(corpus, None, REACTIVE, cfg.passes)
    vectors = [r["vector"] for r in reactive["steps"]]
    reactive["identical_across_contexts"] = all(v == vectors[0] for v in vectors)
    runs = {}
    for n in sorted({2, cfg.episode_length}):
        report, sc = _episodic_run(corpus, n, EPISODIC, cfg.passes)
        runs[f"n={n}"] = report
        if n == cfg.episode_length:
            save_model(sc, _out_path(cfg, "episodic.fpe.json"))
    report = {"reactive": reactive, "episodic": runs, "episode_length": cfg.episode_length,
              "passes": cfg.passes}
    _write_json(_out_path(cfg, "episodic_report.json"), report)
    return report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fpengine", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, model=False):
        sp.add_argument("--config", help="JSON run configuration")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", help="output directory")
        if model:
            sp.add_argument("--model", required=True, help="model file (.fpe.json)")
        return sp

    t = common(sub.add_parser("train", help="stream an IDX dataset through a cell or cluster"))
    t.add_argument("--dataset", help="IDX image file")
    t.add_argument("--labels", help="IDX label file (needed for --classes)")
    t.add_argument("--classes", help="comma-separated labels to keep, e.g. 1")
    t.add_argument("--limit", type=int, help="use at most this many samples (0 = all)")
    t.add_argument("--kind", choices=["cell", "cluster"], help="model kind")
    t.add_argument("--theta", type=float, help="threshold for a single-cell model")

    r = common(sub.add_parser("render", help="write footprints as PGM images"), model=True)
    r.add_argument("--select", default="seed", help="[NODE/]CELL:FOOTPRINT, [NODE/]CELL:* or seed")
    r.add_argument("--file", help="file name (inside --out) for a single footprint")

    d = common(sub.add_parser("export-dot", help="write cluster trees as Graphviz DOT"), model=True)
    d.add_argument("--file", help="file name (inside --out) when the model holds one tree")

    common(sub.add_parser("stats", help="print model statistics as JSON"), model=True)

    c = common(sub.add_parser("complete", help="fill in a missing channel"), model=True)
    c.add_argument("--input", action="append", default=[], help="CHANNEL=VALUE (symbol or PGM path)")
    c.add_argument("--target", required=True)

    s = common(sub.add_parser("demo-sensorimotor", help="image+sound -> motor completion demo"))
    s.add_argument("--patterns", type=int)
    s.add_argument("--passes", type=int)
    s.add_argument("--noise", type=float)

    e = common(sub.add_parser("demo-episodic", help="reactive vs episodic context demo"))
    e.add_argument("--episode-length", type=int)
    e.add_argument("--passes", type=int)
    return p


def _config_from(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as f:
            cfg = RunConfig.from_dict(json.load(f))
    for flag, key in [("seed", "seed"), ("out", "out"), ("dataset", "dataset"), ("labels", "labels"),
                      ("kind", "model"), ("theta", "theta"), ("patterns", "patterns"),
                      ("passes", "passes"), ("noise", "noise"), ("episode_length", "episode_length")]:
        value = getattr(args, flag, None)
        if value is not None:
            setattr(cfg, key, value)
    if getattr(args, "classes", None):
        cfg.classes = [int(t) for t in args.classes.split(",")]
    if getattr(args, "limit", None) is not None:
        cfg.limit = args.limit or None
    return cfg


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _config_from(args)
        status = EXIT_OK
        if args.command == "train":
            result = cmd_train(cfg)
        elif args.command == "render":
            result = {"written": cmd_render(args.model, args.select, cfg, args.file)}
        elif args.command == "export-dot":
            result = {"written": cmd_export_dot(args.model, cfg, args.file)}
        elif args.command == "stats":
            result = model_stats(load_model(args.model))
            if args.out:
                _write_json(_out_path(cfg, "stats.json"), result)
        elif args.command == "complete":
            result = cmd_complete(args.model, args.input, args.target)
        elif args.command == "demo-sensorimotor":
            result = cmd_demo_sensorimotor(cfg)
            if result["no_match"]:
                status = EXIT_NOMATCH
        else:
            result = cmd_demo_episodic(cfg)
        json.dump(result, sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
        return status
    except NoMatchError as e:
        log.error("no match: %s", e)
        return EXIT_NOMATCH
    except ValidationError as e:
        log.error("validation error: %s", e)
        return EXIT_VALIDATION
    except FormatError as e:
        log.error("format error: %s", e)
        return EXIT_FORMAT
    except LookupFailure as e:
        log.error("lookup error: %s", e)
        return EXIT_LOOKUP
    except OSError as e:
        log.error("I/O error: %s", e)
        return EXIT_IO
    except (ArgumentError, ValueError, TypeError) as e:
        log.error("bad argument: %s", e)
        return EXIT_USAGE


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
