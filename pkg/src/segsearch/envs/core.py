"""Shared environment plumbing.

Environments are deterministic state machines: identical (position, action)
always yields an identical outcome. They expose the agent-facing state space
directly (already normalized where needed) and report wall contact and
per-step reward through StepResult.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class StepResult:
    position: np.ndarray
    collided: bool
    reward: float = 0.0
