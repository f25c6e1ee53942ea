from .core import StepResult
from .maze2d import Maze2D, generate_maze_2d
from .capsule import CapsuleMaze, generate_capsule_maze
from .maze_common import MazeSpec, load_maze_spec, maze_distances, save_maze_spec
from .mountain_car import MountainCar, MountainCarSpec, make_mountain_car
from .controllers import JumpController, PIDController, StraightLineController

__all__ = [
    "StepResult",
    "Maze2D",
    "generate_maze_2d",
    "CapsuleMaze",
    "generate_capsule_maze",
    "MazeSpec",
    "load_maze_spec",
    "save_maze_spec",
    "maze_distances",
    "MountainCar",
    "MountainCarSpec",
    "make_mountain_car",
    "JumpController",
    "PIDController",
    "StraightLineController",
]
