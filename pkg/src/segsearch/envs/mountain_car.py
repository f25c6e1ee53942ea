"""Reset-free continuous mountain car and its multi-hill extensions.

Classic dynamics: v' = v + 0.0015 * force - 0.0025 * cos(3x), x' = x + v',
velocity clipped to +-0.07. The agent-facing state is (x, 10 v) so Euclidean
balls are meaningful in both axes. Variant 0 is the classic single-slope
track with a hard left wall and a position-threshold goal; variants 1..3
remove the wall trick by tiling the cos(3x) terrain over 1, 3, or 5 hills
and granting reward only inside a small (position, velocity) ball at the top
of the middle hill: the car must be at the summit and nearly at rest. There
is no reset; reward is collected on every step spent inside the goal ball,
minus a quadratic action cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import StepResult

FORCE_SCALE = 0.0015
GRAVITY = 0.0025
MAX_SPEED = 0.07
VEL_SCALE = 10.0  # state is (x, VEL_SCALE * v)

_PERIOD = 2.0 * math.pi / 3.0
_VALLEY0 = -math.pi / 6.0
_HILL0 = math.pi / 6.0


@dataclass(frozen=True)
class MountainCarSpec:
    variant: int  # 0 = classic, 1..3 = 1/3/5 hills with goal radius
    n_hills: int
    goal_center: tuple[float, float]  # (x, v)
    goal_radius: float  # in normalized (x, 10v) units; <= 0 means threshold goal
    x_min: float
    x_max: float
    start_x: float
    action_cost: float = 0.1
    reward_spike: float = 100.0


def make_mountain_car(variant: int, goal_radius: float = 0.07) -> "MountainCar":
    if variant == 0:
        spec = MountainCarSpec(
            variant=0,
            n_hills=1,
            goal_center=(0.45, 0.0),
            goal_radius=-1.0,  # classic position threshold
            x_min=-1.2,
            x_max=0.6,
            start_x=-0.5,
        )
    elif variant in (1, 2, 3):
        n_hills = {1: 1, 2: 3, 3: 5}[variant]
        hills = [_HILL0 + k * _PERIOD for k in range(n_hills)]
        goal_x = hills[n_hills // 2]
        last_valley = _VALLEY0 + n_hills * _PERIOD
        spec = MountainCarSpec(
            variant=variant,
            n_hills=n_hills,
            goal_center=(goal_x, 0.0),
            goal_radius=goal_radius,
            x_min=_VALLEY0 - 1.0,
            x_max=last_valley + 1.0,
            start_x=_VALLEY0,
        )
    else:
        raise ValueError(f"unknown mountain car variant: {variant}")
    return MountainCar(spec)


class MountainCar:
    def __init__(self, spec: MountainCarSpec):
        self.spec = spec
        self.dim = 2
        self.max_step = np.inf  # phase-space hop per physics step is bounded by dynamics

    def start_state(self) -> np.ndarray:
        return np.array([self.spec.start_x, 0.0])

    def goal_state(self) -> np.ndarray:
        gx, gv = self.spec.goal_center
        return np.array([gx, VEL_SCALE * gv])

    def contains(self, point: np.ndarray) -> bool:
        return (
            self.spec.x_min <= point[0] <= self.spec.x_max
            and abs(point[1]) <= VEL_SCALE * MAX_SPEED
        )

    def step(self, position: np.ndarray, force) -> StepResult:
        f = float(np.clip(np.asarray(force).reshape(-1)[0], -1.0, 1.0))
        x, v = float(position[0]), float(position[1]) / VEL_SCALE
        v = v + FORCE_SCALE * f - GRAVITY * math.cos(3.0 * x)
        v = max(-MAX_SPEED, min(MAX_SPEED, v))
        x = x + v
        collided = False
        if x < self.spec.x_min:
            x, v, collided = self.spec.x_min, 0.0, True
        elif x > self.spec.x_max:
            x, v, collided = self.spec.x_max, 0.0, True
        reward = -self.spec.action_cost * f * f
        if self.spec.goal_radius > 0.0:
            gx, gv = self.spec.goal_center
            dist = math.hypot(x - gx, VEL_SCALE * (v - gv))
            if dist <= self.spec.goal_radius:
                reward += self.spec.reward_spike
        else:
            if x >= self.spec.goal_center[0]:
                reward += self.spec.reward_spike
        return StepResult(np.array([x, VEL_SCALE * v]), collided, reward)

    @staticmethod
    def energy(position: np.ndarray) -> float:
        """Mechanical energy in dynamics units: v^2/2 + (gravity/3) sin(3x)."""
        x, v = float(position[0]), float(position[1]) / VEL_SCALE
        return 0.5 * v * v + (GRAVITY / 3.0) * math.sin(3.0 * x)
