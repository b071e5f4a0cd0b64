"""Synthetic cognition: a motoperceptive metacluster plus optional declarative memory.

In reactive mode the motor output depends only on the current sensors. In
episodic mode the declarative memory sees the last ``n - 1`` root frames and
the current one (motor masked), and the motor segment of the best-matching
episode is pushed down to the motor leaf cluster.
"""
from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .codecs import CategoricalCodecSpec, decode_categorical
from .episodic import DeclarativeMemory
from .errors import ArgumentError, LookupFailure
from .metacluster import MCResult, Metacluster

REACTIVE = "reactive"
EPISODIC = "episodic"


@dataclass
class StepResult:
    motor: np.ndarray
    decoded_motor: Optional[tuple[int, float]]
    mode_used: str
    fallback: bool = False
    traces: dict = field(default_factory=dict)


class SyntheticCognition:
    def __init__(self, motoperceptive: Metacluster, motor: str,
                 declarative: DeclarativeMemory | None = None, mode: str = REACTIVE):
        if motor not in motoperceptive.channel_dims:
            raise LookupFailure(f"motor channel {motor!r} is not a metacluster channel")
        if len(motoperceptive.channel_dims) < 2:
            raise ArgumentError("need at least one sensor channel besides the motor channel")
        if mode not in (REACTIVE, EPISODIC):
            raise ArgumentError(f"unknown mode {mode!r}")
        if mode == EPISODIC and declarative is None:
            raise ArgumentError("episodic mode needs a declarative memory")
        if declarative is not None and declarative.frame_dim != motoperceptive.root_dim:
            raise ArgumentError(
                f"declarative frames have {declarative.frame_dim} dims, "
                f"motoperceptive root input has {motoperceptive.root_dim}")
        self.motoperceptive = motoperceptive
        self.motor = motor
        self.declarative = declarative
        self.mode = mode
        hist = declarative.n - 1 if declarative is not None else 1
        # Root frames (value, mask) of recent steps, used by episodic stepping.
        self.history: deque[tuple[np.ndarray, np.ndarray]] = deque(maxlen=hist)

    @property
    def sensors(self) -> list[str]:
        return [c for c in self.motoperceptive.channel_names if c != self.motor]

    def train_step(self, channels: Mapping[str, object]) -> dict:
        """Learn one demonstration with every channel, motor included, present."""
        missing = [c for c in self.motoperceptive.channel_names if c not in channels]
        if missing:
            raise ArgumentError(f"training needs every channel; missing {missing}")
        res = self.motoperceptive.process(channels, learn=True)
        diag = {"traces": res.traces, "episode": None}
        if self.declarative is not None:
            diag["episode"] = self.declarative.observe(res.root_input, learn=True)
        return diag

    def reset_episode(self) -> None:
        """Forget recent frames in both the declarative buffer and the step history."""
        self.history.clear()
        if self.declarative is not None:
            self.declarative.reset()

    def _decode(self, motor: np.ndarray):
        codec = self.motoperceptive.codecs.get(self.motor)
        if isinstance(codec, CategoricalCodecSpec):
            return decode_categorical(motor, codec)
        return None

    def step(self, sensors: Mapping[str, object]) -> StepResult:
        """Produce a motor vector for ``sensors`` without learning anything."""
        if self.motor in sensors:
            raise ArgumentError("the motor channel must not be supplied to step()")
        mc = self.motoperceptive
        res: MCResult = mc.process(sensors, learn=False)
        fallback = False
        mode_used = self.mode
        traces = {"motoperceptive": res.traces}
        if self.mode == EPISODIC and len(self.history) < self.history.maxlen:
            mode_used, fallback = REACTIVE, True
        if mode_used == REACTIVE:
            motor = mc.complete(sensors, self.motor, res)
        else:
            dm = self.declarative
            frames = [f for f, _ in self.history] + [res.root_input]
            masks = [m for _, m in self.history] + [res.root_mask]
            t = dm.query_episode(frames, masks)
            traces["episode"] = t
            current = t.projection[dm.layout.slice(f"slot{dm.n - 1}")]
            motor = mc.descend(mc.root, current, self.motor)
        if self.declarative is not None:
            done = mc.process({**sensors, self.motor: motor}, learn=False)
            self.history.append((done.root_input.copy(), done.root_mask.copy()))
        return StepResult(motor, self._decode(motor), mode_used, fallback, traces)

    def state_hash(self) -> str:
        h = hashlib.sha256(self.motoperceptive.state_hash().encode())
        if self.declarative is not None:
            h.update(self.declarative.state_hash().encode())
        return h.hexdigest()


def sc_train_step(sc: SyntheticCognition, channels) -> dict:
    return sc.train_step(channels)


def sc_step(sc: SyntheticCognition, sensors) -> StepResult:
    return sc.step(sensors)
