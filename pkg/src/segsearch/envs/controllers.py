"""Low-level goal-seeking controllers.

A controller maps (state, target, history) to an action plus updated
history; separate indicators decide success (within tolerance of the
target) and giving up (collision or timeout, depending on the controller).
The give-up indicator always fires in finite time because the traversal
loop enforces the step budget.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ControlState:
    steps: int = 0
    integral: float = 0.0


class StraightLineController:
    """Kinematic controller: walk straight at the target, stop on contact."""

    fail_on_collision = True
    single_shot = False

    def __init__(self, max_step: float = 0.15, tolerance: float = 0.08):
        self.max_step = max_step
        self.tolerance = tolerance

    def reset(self) -> ControlState:
        return ControlState()

    def act(self, cs: ControlState, position: np.ndarray, target: np.ndarray) -> np.ndarray:
        cs.steps += 1
        disp = target - position
        norm = float(np.linalg.norm(disp))
        if norm > self.max_step:
            disp = disp * (self.max_step / norm)
        return disp

    def success(self, position: np.ndarray, target: np.ndarray) -> bool:
        return float(np.linalg.norm(target - position)) <= self.tolerance


class JumpController(StraightLineController):
    """Single-action controller for jump-mode mazes: one ray toward the target."""

    single_shot = True

    def __init__(self, tolerance: float = 1e-6):
        super().__init__(max_step=np.inf, tolerance=tolerance)

    def act(self, cs: ControlState, position: np.ndarray, target: np.ndarray) -> np.ndarray:
        cs.steps += 1
        return target - position


class PIDController:
    """Phase-space PID for the mountain car; errors in (position, velocity).

    The state and target are in normalized (x, 10v) coordinates; gains were
    hand-tuned on single-hill point-to-point transfers. Gives up only on
    timeout: wall bumps are recoverable.
    """

    fail_on_collision = False
    single_shot = False

    def __init__(
        self,
        kp: float = 3.0,
        kd: float = 12.0,
        ki: float = 0.0,
        clamp: float = 1.0,
        tolerance: float = 0.05,
        vel_scale: float = 10.0,
    ):
        self.kp, self.kd, self.ki = kp, kd, ki
        self.clamp = clamp
        self.tolerance = tolerance
        self.vel_scale = vel_scale

    def reset(self) -> ControlState:
        return ControlState()

    def act(self, cs: ControlState, position: np.ndarray, target: np.ndarray) -> np.ndarray:
        cs.steps += 1
        e_x = float(target[0] - position[0])
        e_v = float(target[1] - position[1]) / self.vel_scale
        cs.integral += e_x
        force = self.kp * e_x + self.kd * e_v + self.ki * cs.integral
        return np.array([max(-self.clamp, min(self.clamp, force))])

    def success(self, position: np.ndarray, target: np.ndarray) -> bool:
        return (
            abs(target[0] - position[0]) <= self.tolerance
            and abs(target[1] - position[1]) <= self.tolerance
        )
