"""Differentiable 2D ball contact simulation with several contact models."""

from .autodiff import Tape, TapeError, TapeVar
from .contact import (
    MODEL_NAMES,
    PBD,
    Compliant,
    ImpulseConvex,
    ImpulseDirect,
    ImpulseLCP,
    model_from_name,
    step,
)
from .dynamics import BallState, HalfPlane, Scene, Vec2
from .optimize import OptConfig, default_config, gradient_descent, gradient_report
from .tasks import (
    TASK_NAMES,
    SimulationUnstable,
    TaskSpec,
    build_task,
    default_model,
    simulate,
    task1_analytic,
    task3_optimal_control,
    task3_oracle,
)

__version__ = "0.1.0"

__all__ = [
    "Tape", "TapeError", "TapeVar",
    "MODEL_NAMES", "PBD", "Compliant", "ImpulseConvex", "ImpulseDirect", "ImpulseLCP",
    "model_from_name", "step",
    "BallState", "HalfPlane", "Scene", "Vec2",
    "OptConfig", "default_config", "gradient_descent", "gradient_report",
    "TASK_NAMES", "SimulationUnstable", "TaskSpec", "build_task", "default_model",
    "simulate", "task1_analytic", "task3_optimal_control", "task3_oracle",
]
