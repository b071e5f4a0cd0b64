"""Seeded synthetic corpora and the agent topologies that consume them.

The sensorimotor corpus pairs K random binary images with K sound symbols
and K motor symbols (pattern k: image k, sound k -> motor k). The episodic
corpus has two sequences that reach the same state ``x`` through different
contexts and must answer it with different motor symbols.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cluster import ClusterPolicy
from .codecs import (CategoricalCodecSpec, ImageCodecSpec, encode_categorical,
                     encode_image)
from .cognition import EPISODIC, REACTIVE, SyntheticCognition
from .episodic import DeclarativeMemory
from .metacluster import ChannelSpec, Metacluster, MetaclusterSpec, simple_spec

IMAGE, SOUND, MOTOR = "image", "sound", "motor"

LEAF_POLICY = ClusterPolicy(theta_seed=0.6, theta_step=0.1, theta_max=1.0, spawn_count=10, max_depth=3)
TOP_POLICY = ClusterPolicy(theta_seed=0.95, theta_step=0.02, theta_max=1.0, spawn_count=10, max_depth=2)
EPISODE_POLICY = ClusterPolicy(theta_seed=0.95, theta_step=0.02, theta_max=1.0, spawn_count=50, max_depth=2)


def random_images(count: int, side: int, density: float, rng: np.random.Generator) -> np.ndarray:
    """``count`` distinct random black/white images as uint8 rows."""
    while True:
        imgs = (rng.random((count, side * side)) < density).astype(np.uint8) * 255
        if len({row.tobytes() for row in imgs}) == count and imgs.any(axis=1).all():
            return imgs


@dataclass
class SensorimotorCorpus:
    image_codec: ImageCodecSpec
    sound_codec: CategoricalCodecSpec
    motor_codec: CategoricalCodecSpec
    images: np.ndarray
    sounds: list[int]
    motors: list[int]

    def __len__(self) -> int:
        return len(self.images)

    def sensors(self, k: int) -> dict[str, np.ndarray]:
        return {IMAGE: encode_image(self.images[k], self.image_codec),
                SOUND: encode_categorical(self.sounds[k], self.sound_codec)}

    def channels(self, k: int) -> dict[str, np.ndarray]:
        return {**self.sensors(k), MOTOR: encode_categorical(self.motors[k], self.motor_codec)}

    def spec(self, leaf_policy: ClusterPolicy = LEAF_POLICY,
             top_policy: ClusterPolicy = TOP_POLICY) -> MetaclusterSpec:
        chans = (ChannelSpec(IMAGE, self.image_codec.dim, self.image_codec),
                 ChannelSpec(SOUND, self.sound_codec.dim, self.sound_codec),
                 ChannelSpec(MOTOR, self.motor_codec.dim, self.motor_codec))
        return simple_spec(chans, leaf_policy, top_policy)


def sensorimotor_corpus(k: int = 8, seed: int = 0, side: int = 16, density: float = 0.2,
                        block: int = 8) -> SensorimotorCorpus:
    rng = np.random.default_rng(seed)
    return SensorimotorCorpus(
        ImageCodecSpec(side, side, 0.5),
        CategoricalCodecSpec(k, block),
        CategoricalCodecSpec(k, block),
        random_images(k, side, density, rng),
        list(range(k)),
        list(range(k)),
    )


def flip_bits(v: np.ndarray, fraction: float, rng: np.random.Generator) -> np.ndarray:
    """Copy of binary ``v`` with ``round(fraction * len(v))`` distinct positions flipped."""
    out = v.copy()
    idx = rng.choice(v.size, size=int(round(fraction * v.size)), replace=False)
    out[idx] = 1.0 - out[idx]
    return out


def train_sensorimotor(corpus: SensorimotorCorpus, passes: int = 3,
                       archetype_tau: float | None = None) -> Metacluster:
    mc = Metacluster(corpus.spec(), archetype_tau)
    for _ in range(passes):
        for k in range(len(corpus)):
            mc.process(corpus.channels(k), learn=True)
    return mc


# --- episodic two-context corpus ---------------------------------------------

STATES = ("a", "c", "y", "x")
MOTORS = ("idle", "b", "d")


@dataclass
class EpisodicCorpus:
    """Sequences of (state, motor) steps over a shared image/sound/motor embodiment.

    Sequence one is a, y, x answered idle, idle, b; sequence two is c, y, x
    answered idle, idle, d. Only the first step tells them apart.
    """
    base: SensorimotorCorpus
    sequences: list[list[tuple[str, str]]] = field(default_factory=lambda: [
        [("a", "idle"), ("y", "idle"), ("x", "b")],
        [("c", "idle"), ("y", "idle"), ("x", "d")],
    ])

    def sensors(self, state: str) -> dict[str, np.ndarray]:
        return self.base.sensors(STATES.index(state))

    def channels(self, state: str, motor: str) -> dict[str, np.ndarray]:
        return {**self.sensors(state),
                MOTOR: encode_categorical(MOTORS.index(motor), self.base.motor_codec)}

    def spec(self) -> MetaclusterSpec:
        return self.base.spec()


def episodic_corpus(seed: int = 0, side: int = 16, density: float = 0.2, block: int = 8) -> EpisodicCorpus:
    rng = np.random.default_rng(seed)
    base = SensorimotorCorpus(
        ImageCodecSpec(side, side, 0.5),
        CategoricalCodecSpec(len(STATES), block),
        CategoricalCodecSpec(len(MOTORS), block),
        random_images(len(STATES), side, density, rng),
        list(range(len(STATES))),
        [],
    )
    return EpisodicCorpus(base)


def build_agent(corpus: EpisodicCorpus, n: int | None, mode: str = REACTIVE,
                episode_policy: ClusterPolicy = EPISODE_POLICY) -> SyntheticCognition:
    mc = Metacluster(corpus.spec())
    dm = None if n is None else DeclarativeMemory(mc.root_dim, n, episode_policy)
    return SyntheticCognition(mc, MOTOR, dm, mode)


def train_episodic(sc: SyntheticCognition, corpus: EpisodicCorpus, passes: int = 3) -> None:
    for _ in range(passes):
        for seq in corpus.sequences:
            sc.reset_episode()
            for state, motor in seq:
                sc.train_step(corpus.channels(state, motor))
    sc.reset_episode()


def run_sequence(sc: SyntheticCognition, corpus: EpisodicCorpus, seq) -> list:
    """Step through ``seq`` from a clean history; returns one StepResult per step."""
    sc.reset_episode()
    return [sc.step(corpus.sensors(state)) for state, _ in seq]


__all__ = ["IMAGE", "SOUND", "MOTOR", "EPISODIC", "REACTIVE", "sensorimotor_corpus",
           "episodic_corpus", "build_agent", "train_episodic", "train_sensorimotor",
           "run_sequence", "flip_bits"]
