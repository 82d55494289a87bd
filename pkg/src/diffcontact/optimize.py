"""Gradient descent over task parameters and a finite-difference gradient oracle."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

from .contact import ContactModel, uses_toi
from .dynamics import Vec2
from .tasks import (
    SimResult,
    SimulationUnstable,
    TaskSpec,
    get_param,
    loss_and_grad,
    param_label,
    set_param,
    simulate,
    task1_analytic,
    task3_oracle,
    trajectory_mode,
)

log = logging.getLogger(__name__)

INITIAL_VELOCITY = "initial-velocity"
CONTROL_SEQUENCE = "control-sequence"


@dataclass(frozen=True)
class OptConfig:
    learning_rate: float
    iterations: int
    parameter_set: str
    checkpoint_every: int = 100

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning rate must be nonnegative")
        if self.iterations < 0:
            raise ValueError("iterations must be nonnegative")
        if self.parameter_set not in (INITIAL_VELOCITY, CONTROL_SEQUENCE):
            raise ValueError(f"unknown parameter set {self.parameter_set!r}")


def default_config(task: TaskSpec, **overrides) -> OptConfig:
    if task.name == "task3":
        cfg = dict(learning_rate=10.0, iterations=1000, parameter_set=CONTROL_SEQUENCE)
    else:
        cfg = dict(learning_rate=0.01, iterations=1000, parameter_set=INITIAL_VELOCITY)
    cfg.update(overrides)
    return OptConfig(**cfg)


def parameter_keys(task: TaskSpec, parameter_set: str) -> list[tuple]:
    if parameter_set == INITIAL_VELOCITY:
        b = task.loss.ball
        return [("vel", b, 0), ("vel", b, 1)]
    return [("u", n, a) for n in range(task.steps_N) for a in (0, 1)]


def _read(task: TaskSpec, parameter_set: str) -> list[float]:
    if parameter_set == INITIAL_VELOCITY:
        return list(task.scene.balls[task.loss.ball].vel.values())
    return [c for u in task.controls for c in u.values()]


def _write(task: TaskSpec, parameter_set: str, theta: Sequence[float]) -> TaskSpec:
    if parameter_set == INITIAL_VELOCITY:
        return task.with_ball(task.loss.ball, vel=Vec2(theta[0], theta[1]))
    return task.with_controls(Vec2(theta[2 * n], theta[2 * n + 1]) for n in range(task.steps_N))


@dataclass
class IterRecord:
    iter: int
    loss: float
    params: Optional[tuple[float, ...]] = None


@dataclass
class LearningCurve:
    task: str
    model: str
    config: OptConfig
    records: list[IterRecord] = field(default_factory=list)
    unstable: bool = False
    unstable_at: Optional[int] = None
    message: str = ""
    final_task: Optional[TaskSpec] = None
    initial_result: Optional[SimResult] = None
    final_result: Optional[SimResult] = None

    @property
    def losses(self) -> list[float]:
        return [r.loss for r in self.records]

    @property
    def initial_loss(self) -> float:
        return self.records[0].loss

    @property
    def final_loss(self) -> float:
        return self.records[-1].loss

    @property
    def final_params(self) -> list[float]:
        return _read(self.final_task, self.config.parameter_set)


def gradient_descent(task: TaskSpec, model: ContactModel, config: OptConfig) -> LearningCurve:
    """Plain gradient descent; the loss at each iterate is recorded before its update.

    The curve holds ``iterations + 1`` records: the losses at iterates
    0..iterations.  A non-finite loss or gradient ends the curve early and
    sets ``unstable``.
    """
    keys = parameter_keys(task, config.parameter_set)
    theta = _read(task, config.parameter_set)
    curve = LearningCurve(task.name, model.name, config)
    keep_all = config.parameter_set == INITIAL_VELOCITY
    current = task
    for it in range(config.iterations + 1):
        current = _write(task, config.parameter_set, theta)
        try:
            loss, grad, res = loss_and_grad(current, model, keys)
        except SimulationUnstable as exc:
            curve.unstable, curve.unstable_at, curve.message = True, it, str(exc)
            log.warning("%s/%s: %s", task.name, model.name, exc)
            break
        if not all(math.isfinite(g) for g in grad):
            curve.unstable, curve.unstable_at = True, it
            curve.message = f"non-finite gradient at iteration {it}"
            break
        snap = keep_all or it % config.checkpoint_every == 0 or it == config.iterations
        curve.records.append(IterRecord(it, loss, tuple(theta) if snap else None))
        if it == 0:
            curve.initial_result = res
        curve.final_result = res
        curve.final_task = current
        if it == config.iterations:
            break
        lr = config.learning_rate
        theta = [t - lr * g for t, g in zip(theta, grad)]
    if curve.final_task is None:
        curve.final_task = current
    return curve


# --- finite differences ------------------------------------------------------------


def finite_difference(
    f: Callable[[list[float]], float], params: Sequence[float], h: float = 1e-5
) -> list[float]:
    """Central differences, one coordinate at a time."""
    if not h > 0:
        raise ValueError("h must be positive")
    params = list(params)
    out = []
    for i in range(len(params)):
        up = params.copy()
        dn = params.copy()
        up[i] += h
        dn[i] -= h
        out.append((f(up) - f(dn)) / (2.0 * h))
    return out


def _signature(model: ContactModel, res: SimResult):
    # time-of-impact trajectories stay smooth when a contact slides across a
    # step boundary, only the sequence of contacts matters; a penalty force
    # switching on at a step boundary leaves a kink, as does a late impulse
    if uses_toi(model):
        return tuple(res.bounce_sequence())
    return res.signature(with_steps=True)


@dataclass
class FDEntry:
    key: tuple
    value: Optional[float]
    skipped: bool = False
    reason: str = ""


def task_finite_difference(
    task: TaskSpec, model: ContactModel, keys: Sequence[tuple], h: float = 1e-5
) -> list[FDEntry]:
    """Finite-difference gradient of the float simulation for each key.

    A key is skipped when the contact structure differs between the two
    perturbed runs, i.e. the point sits within h of a discontinuity.
    """
    out = []
    for key in keys:
        x = get_param(task, key)
        up = simulate(set_param(task, key, x + h), model, record_trajectory=False)
        dn = simulate(set_param(task, key, x - h), model, record_trajectory=False)
        if _signature(model, up) != _signature(model, dn):
            log.info("skip %s for %s/%s: contact structure changes within h",
                     param_label(key), task.name, model.name)
            out.append(FDEntry(key, None, True, "contact-structure change within h"))
            continue
        out.append(FDEntry(key, (up.loss_value - dn.loss_value) / (2.0 * h)))
    return out


def relative_error(a: float, b: float, floor: float = 1e-5) -> float:
    """``|a - b| / max(|a|, |b|, floor)``; the floor absorbs finite-difference
    round-off (~1e-9 on these losses) when the true gradient is zero."""
    return abs(a - b) / max(abs(a), abs(b), floor)


# --- gradient reports -------------------------------------------------------------------


QUANTITIES = {
    "task1": [
        (("pos", 0, 1), "dpyN/dpy0"),
        (("vel", 0, 1), "dpyN/dvy0"),
        (("u", 0, 1), "dpyN/duy0"),
    ],
    "task2": [(("vel", 0, 0), "dl/dvx0"), (("vel", 0, 1), "dl/dvy0")],
    "task2-friction": [(("vel", 0, 0), "dl/dvx0"), (("vel", 0, 1), "dl/dvy0")],
    "task3": [
        (("pos", 0, 0), "dl/dpx1"),
        (("pos", 1, 0), "dl/dpx2"),
        (("vel", 0, 0), "dl/dvx1"),
        (("vel", 1, 0), "dl/dvx2"),
        (("u", 0, 0), "dl/dux1"),
    ],
}


def analytic_gradients(task: TaskSpec) -> Optional[dict[str, float]]:
    if task.name == "task1":
        b = task.scene.balls[0]
        _, g = task1_analytic(
            b.pos.values()[1], b.vel.values()[1], task.controls[0].values()[1],
            task.horizon_T, task.dt, b.radius,
        )
        return dict(zip(("dpyN/dpy0", "dpyN/dvy0", "dpyN/duy0"), g))
    if task.name == "task3":
        b1, b2 = task.scene.balls
        k = math.sqrt(2.0)

        def diag(v):
            return sum(v.values()) / k

        o = task3_oracle(
            x0=(diag(b1.pos), diag(b2.pos)),
            v0=(diag(b1.vel), diag(b2.vel)),
            u0=diag(task.controls[0]),
            u_c=diag(task.controls[1]),
            dt=task.dt, r=b1.radius, T=task.horizon_T, epsilon=task.loss.epsilon,
        )
        return {
            "dl/dpx1": o.grad_p0[0].x, "dl/dpx2": o.grad_p0[1].x,
            "dl/dvx1": o.grad_v0[0].x, "dl/dvx2": o.grad_v0[1].x,
            "dl/dux1": o.grad_u0.x,
        }
    return None


@dataclass
class GradRow:
    source: str  # a model name, "analytic" or "finite-difference"
    model: str
    quantity: str
    value: Optional[float]
    note: str = ""


@dataclass
class GradReport:
    task: str
    quantities: list[str]
    rows: list[GradRow] = field(default_factory=list)
    models: list[str] = field(default_factory=list)
    errors: dict[str, str] = field(default_factory=dict)

    def value(self, source: str, quantity: str, model: Optional[str] = None) -> Optional[float]:
        for r in self.rows:
            if r.source == source and r.quantity == quantity and (model is None or r.model == model):
                return r.value
        raise KeyError((source, quantity, model))

    def tape(self, model: str, quantity: str) -> Optional[float]:
        return self.value(model, quantity, model)

    def fd(self, model: str, quantity: str) -> Optional[float]:
        return self.value("finite-difference", quantity, model)

    def analytic(self, quantity: str) -> Optional[float]:
        return self.value("analytic", quantity)

    def has_analytic(self) -> bool:
        return any(r.source == "analytic" for r in self.rows)


def gradient_report(
    task: TaskSpec,
    models: Sequence[ContactModel],
    include_analytic: bool = True,
    h: float = 1e-5,
) -> GradReport:
    spec = QUANTITIES[task.name]
    keys = [k for k, _ in spec]
    names = [q for _, q in spec]
    report = GradReport(task.name, names)
    if include_analytic:
        analytic = analytic_gradients(task)
        if analytic:
            for q in names:
                report.rows.append(GradRow("analytic", "", q, analytic[q]))
    for model in models:
        try:
            _, grad, _ = loss_and_grad(task, model, keys)
            fd = task_finite_difference(task, model, keys, h)
        except (SimulationUnstable, ValueError) as exc:
            report.errors[model.name] = str(exc)
            log.warning("%s/%s: %s", task.name, model.name, exc)
            continue
        report.models.append(model.name)
        for q, g, e in zip(names, grad, fd):
            report.rows.append(GradRow(model.name, model.name, q, g))
            report.rows.append(GradRow("finite-difference", model.name, q, e.value, e.reason))
    return report


def classify(curve: LearningCurve) -> str:
    if curve.final_result is None:
        return "N/A"
    return trajectory_mode(curve.final_result)
