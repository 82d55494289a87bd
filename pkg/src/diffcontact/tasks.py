"""Benchmark tasks, their losses, closed-form oracles, and the unrolled simulator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Any, Optional

from .autodiff import Scalar, Tape, TapeError, sqrt, value_of
from .contact import (
    Compliant,
    ContactModel,
    damping_for_restitution,
    model_from_name,
    step,
)
from .dynamics import (
    BALL_PLANE,
    ZERO,
    BallState,
    HalfPlane,
    Scene,
    Vec2,
    state_is_finite,
)

DT = 1.0 / 480.0

TASK_NAMES = ("task1", "task2", "task2-friction", "task3")

# keys accepted by build_task / default_model; the CLI validates against these
TASK_KEYS = ("gravity", "wall_x", "e", "mu", "N", "radius")
MODEL_KEYS = ("k_n", "k_d", "k_f", "pbd_iterations")


class SimulationUnstable(RuntimeError):
    def __init__(self, step_index: int, reason: str = "non-finite state"):
        super().__init__(f"simulation unstable at step {step_index}: {reason}")
        self.step_index = step_index


@dataclass(frozen=True)
class LossSpec:
    """Terminal cost plus an optional control penalty ``epsilon * |u|^2 * dt``.

    ``terminal`` is ``"final_height"`` (y of ``ball``) or ``"target_distance_sq"``.
    """

    terminal: str
    ball: int = 0
    target: Vec2 = field(default_factory=lambda: Vec2(0.0, 0.0))
    epsilon: float = 0.0

    def __post_init__(self):
        if self.terminal not in ("final_height", "target_distance_sq"):
            raise ValueError(f"unknown terminal loss {self.terminal!r}")
        if self.epsilon < 0:
            raise ValueError("epsilon must be nonnegative")


@dataclass(frozen=True)
class TaskSpec:
    name: str
    scene: Scene
    horizon_T: float
    steps_N: int
    controls: tuple[Vec2, ...]
    loss: LossSpec
    controlled_ball: int = 0
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "controls", tuple(self.controls))
        if len(self.controls) != self.steps_N:
            raise ValueError("one control per step is required")
        if abs(self.dt * self.steps_N - self.horizon_T) > 1e-12:
            raise ValueError("dt * N must equal T")

    @property
    def dt(self) -> float:
        return self.horizon_T / self.steps_N

    def with_ball(self, index: int, *, pos: Vec2 | None = None, vel: Vec2 | None = None):
        balls = list(self.scene.balls)
        b = balls[index]
        balls[index] = replace(b, pos=pos or b.pos, vel=vel or b.vel)
        return replace(self, scene=self.scene.with_balls(balls))

    def with_controls(self, controls) -> "TaskSpec":
        return replace(self, controls=tuple(controls))


# --- parameter addressing -------------------------------------------------------
# A parameter key is (group, index, axis): ("pos", ball, 0|1), ("vel", ball, 0|1)
# or ("u", step, 0|1).


def get_param(task: TaskSpec, key: tuple) -> float:
    group, idx, axis = key
    if group == "u":
        return task.controls[idx].values()[axis]
    ball = task.scene.balls[idx]
    return getattr(ball, group).values()[axis]


def set_param(task: TaskSpec, key: tuple, value: float) -> TaskSpec:
    group, idx, axis = key
    if group == "u":
        controls = list(task.controls)
        c = list(controls[idx].values())
        c[axis] = value
        controls[idx] = Vec2(*c)
        return task.with_controls(controls)
    vec = list(getattr(task.scene.balls[idx], group).values())
    vec[axis] = value
    return task.with_ball(idx, **{group: Vec2(*vec)})


def param_label(key: tuple) -> str:
    group, idx, axis = key
    ax = "xy"[axis]
    if group == "u":
        return f"u{ax}[{idx}]"
    return f"{'p' if group == 'pos' else 'v'}{ax}{idx + 1}"


# --- task factories --------------------------------------------------------------


def make_task1(radius: float = 0.1, N: int = 480, e: float = 1.0) -> TaskSpec:
    """Ball bouncing once on the ground without gravity; loss is the final height."""
    T = 1.0
    ball = BallState(Vec2(-1.0, 1.0), Vec2(2.0, -2.0), radius)
    scene = Scene((ball,), (HalfPlane(Vec2(0.0, 1.0), 0.0),), Vec2(0.0, 0.0), e, 0.0)
    return TaskSpec(
        "task1",
        scene,
        T,
        N,
        tuple(Vec2(0.0, 0.0) for _ in range(N)),
        LossSpec("final_height", ball=0),
        metadata={"radius": radius, "e": e, "N": N, "dt": T / N},
    )


def make_task2(
    frictional: bool = False,
    gravity: float = 9.8,
    wall_x: float = 1.75,
    e: float = 0.92,
    mu: Optional[float] = None,
    N: int = 288,
    radius: float = 0.1,
) -> TaskSpec:
    """Ball bouncing off the ground and a wall towards a target.

    Gravity and the wall position are not given with the original task.  The
    defaults put the wall face at x = 1.75, for which the trajectory bounces
    ground then wall and the optimized velocities land near (10.2, -4.2) and
    (-2.5, -4.3).
    """
    T = 0.6
    if mu is None:
        mu = 0.1 if frictional else 0.0
    ball = BallState(Vec2(-0.5, 1.0), Vec2(5.0, -5.0), radius)
    planes = (
        HalfPlane(Vec2(0.0, 1.0), 0.0),
        HalfPlane(Vec2(-1.0, 0.0), -wall_x),
    )
    scene = Scene((ball,), planes, Vec2(0.0, -gravity), e, mu)
    name = "task2-friction" if frictional else "task2"
    return TaskSpec(
        name,
        scene,
        T,
        N,
        tuple(Vec2(0.0, 0.0) for _ in range(N)),
        LossSpec("target_distance_sq", ball=0, target=Vec2(-2.0, 1.5)),
        metadata={
            "radius": radius, "e": e, "mu": mu, "N": N, "dt": T / N,
            "gravity": gravity, "wall_x": wall_x,
            "derived_defaults": ["gravity", "wall_x"],
        },
    )


def make_task3(radius: float = 0.2, N: int = 480, e: float = 1.0) -> TaskSpec:
    """Push ball 1 into ball 2 so that ball 2 ends near the origin."""
    T = 1.0
    balls = (
        BallState(Vec2(-2.0, -2.0), Vec2(0.0, 0.0), radius),
        BallState(Vec2(-1.0, -1.0), Vec2(0.0, 0.0), radius),
    )
    scene = Scene(balls, (), Vec2(0.0, 0.0), e, 0.0)
    return TaskSpec(
        "task3",
        scene,
        T,
        N,
        tuple(Vec2(3.0, 3.0) for _ in range(N)),
        LossSpec("target_distance_sq", ball=1, target=Vec2(0.0, 0.0), epsilon=0.1),
        controlled_ball=0,
        metadata={"radius": radius, "e": e, "N": N, "dt": T / N, "epsilon": 0.1},
    )


def build_task(name: str, overrides: dict[str, Any] | None = None) -> TaskSpec:
    o = dict(overrides or {})
    unknown = set(o) - set(TASK_KEYS) - set(MODEL_KEYS) - {"lr", "iters", "h", "checkpoint"}
    if unknown:
        raise ValueError(f"unknown task parameters: {sorted(unknown)}")
    kw = {}
    if "N" in o:
        kw["N"] = int(o["N"])
    if "radius" in o:
        kw["radius"] = float(o["radius"])
    if "e" in o:
        kw["e"] = float(o["e"])
    if name == "task1":
        return make_task1(**kw)
    if name in ("task2", "task2-friction"):
        for k in ("gravity", "wall_x", "mu"):
            if k in o:
                kw[k] = float(o[k])
        return make_task2(frictional=(name == "task2-friction"), **kw)
    if name == "task3":
        return make_task3(**kw)
    raise ValueError(f"unknown task {name!r}; expected one of {TASK_NAMES}")


def default_model(name: str, task: TaskSpec, overrides: dict[str, Any] | None = None) -> ContactModel:
    """Model with task-appropriate defaults.

    Compliant damping follows the restitution coefficient of the task through
    the damped-oscillator map unless ``k_d`` is given.
    """
    o = dict(overrides or {})
    if name == "compliant":
        k_n = float(o.get("k_n", 1.0e4))
        if "k_d" in o:
            k_d = float(o["k_d"])
        else:
            m_eff = _contact_mass(task)
            k_d = damping_for_restitution(task.scene.restitution_e, k_n, m_eff)
        return Compliant(k_n=k_n, k_d=k_d, k_f=float(o.get("k_f", 100.0)))
    return model_from_name(name, **o)


def _contact_mass(task: TaskSpec) -> float:
    balls = task.scene.balls
    if len(balls) >= 2:
        m1, m2 = balls[0].mass, balls[1].mass
        return m1 * m2 / (m1 + m2)
    return balls[0].mass


# --- simulation --------------------------------------------------------------------


@dataclass
class SimInputs:
    pos: list[Vec2]
    vel: list[Vec2]
    controls: list[Vec2]

    def lookup(self, key: tuple) -> Scalar:
        group, idx, axis = key
        vec = {"pos": self.pos, "vel": self.vel, "u": self.controls}[group][idx]
        return vec.x if axis == 0 else vec.y


@dataclass
class ContactRecord:
    step: int
    kind: str
    first: int
    second: int
    alpha: Optional[float] = None


@dataclass
class SimResult:
    loss: Scalar
    inputs: SimInputs
    trajectory: list[list[tuple[float, float]]]
    contacts: list[ContactRecord]
    final: Scene
    tape: Optional[Tape] = None

    @property
    def loss_value(self) -> float:
        return float(value_of(self.loss))

    def signature(self, with_steps: bool = True) -> tuple:
        """Discrete contact structure used to spot discontinuities."""
        if with_steps:
            return tuple((c.step, c.kind, c.first, c.second) for c in self.contacts)
        return tuple((c.kind, c.first, c.second) for c in self.contacts)

    def bounce_sequence(self) -> list[tuple[str, int]]:
        """Distinct contacts in order, merging consecutive steps of the same pair."""
        seq: list[tuple[str, int]] = []
        last = None
        for c in self.contacts:
            key = (c.kind, c.second)
            if last is not None and key == last[0] and c.step <= last[1] + 1:
                last = (key, c.step)
                continue
            seq.append(key)
            last = (key, c.step)
        return seq


def _lift(vec: Vec2, tape: Optional[Tape]) -> Vec2:
    if tape is None:
        return Vec2(*vec.values())
    x, y = vec.values()
    return Vec2(tape.var(x), tape.var(y))


def simulate(
    task: TaskSpec,
    model: ContactModel,
    tape: Optional[Tape] = None,
    record_trajectory: bool = True,
) -> SimResult:
    """Unroll the task for N steps and evaluate its loss.

    With a tape, every initial position, velocity and control entry becomes an
    independent tape input, readable through ``result.inputs``.  Without a tape
    the run is plain float arithmetic.
    """
    scene0 = task.scene
    balls = []
    pos_in, vel_in = [], []
    try:
        for b in scene0.balls:
            p, v = _lift(b.pos, tape), _lift(b.vel, tape)
            pos_in.append(p)
            vel_in.append(v)
            balls.append(BallState(p, v, b.radius, b.mass))
        controls = [_lift(u, tape) for u in task.controls]
    except TapeError as exc:
        raise SimulationUnstable(0, f"non-finite input: {exc}") from exc
    if not state_is_finite(scene0.with_balls(balls)):
        raise SimulationUnstable(0, "non-finite initial state")
    scene = scene0.with_balls(balls)

    dt = task.dt
    eps = task.loss.epsilon
    ctrl = task.controlled_ball
    nballs = len(balls)
    running: Scalar = 0.0
    trajectory = []
    if record_trajectory:
        trajectory.append([b.pos.values() for b in scene.balls])
    contacts: list[ContactRecord] = []

    for n in range(task.steps_N):
        u = controls[n]
        forces = [u if i == ctrl else ZERO for i in range(nballs)]
        try:
            scene, events = step(scene, forces, model, dt)
        except (TapeError, OverflowError, ZeroDivisionError) as exc:
            raise SimulationUnstable(n, str(exc)) from exc
        if not state_is_finite(scene):
            raise SimulationUnstable(n)
        for ev in events:
            a = ev.toi_alpha
            contacts.append(
                ContactRecord(n, ev.kind, ev.first, ev.second,
                              None if a is None else float(value_of(a)))
            )
        if eps > 0.0:
            running = running + (u.x * u.x + u.y * u.y) * (eps * dt)
        if record_trajectory:
            trajectory.append([b.pos.values() for b in scene.balls])

    final_ball = scene.balls[task.loss.ball]
    if task.loss.terminal == "final_height":
        terminal = final_ball.pos.y
    else:
        diff = final_ball.pos - task.loss.target
        terminal = diff.dot(diff)
    loss = terminal + running
    if not math.isfinite(value_of(loss)):
        raise SimulationUnstable(task.steps_N, "non-finite loss")
    return SimResult(loss, SimInputs(pos_in, vel_in, controls), trajectory, contacts, scene, tape)


def loss_and_grad(task: TaskSpec, model: ContactModel, keys) -> tuple[float, list[float], SimResult]:
    tape = Tape()
    res = simulate(task, model, tape)
    grad = tape.backward(res.loss)
    return res.loss_value, [grad[res.inputs.lookup(k)] for k in keys], res


def trajectory_mode(result: SimResult) -> str:
    """"Trajectory 1" if the ball touched the wall (plane 1), else "Trajectory 2"."""
    for c in result.contacts:
        if c.kind == BALL_PLANE and c.second == 1:
            return "Trajectory 1"
    return "Trajectory 2"


# --- closed-form oracles -------------------------------------------------------------


def task1_analytic(
    p_y0: float, v_y0: float, u_y0: float, T: float = 1.0, dt: float = DT, r: float = 0.1
) -> tuple[float, tuple[float, float, float]]:
    """Final height after one elastic ground bounce, and its gradients.

    Returns ``(p_yN, (d/dp_y0, d/dv_y0, d/du_y0))``.
    """
    v1 = v_y0 + u_y0 * dt
    p1 = p_y0 + v_y0 * dt + 0.5 * u_y0 * dt * dt
    if p1 <= r or v1 >= 0.0:
        raise ValueError("parameters do not produce a ground impact after the first step")
    t_hit = dt + (p1 - r) / (-v1)
    if t_hit >= T:
        raise ValueError("no ground impact before T")
    height = -p_y0 - v_y0 * T - u_y0 * (T * dt - 0.5 * dt * dt) + 2.0 * r
    return height, (-1.0, -T, -(T * dt - 0.5 * dt * dt))


@dataclass
class OracleResult:
    loss: float
    grad_p0: tuple[Vec2, Vec2]
    grad_v0: tuple[Vec2, Vec2]
    grad_u0: Vec2
    collision_time_s: float
    grad_1d: dict = field(default_factory=dict)


def task3_loss_1d(x0, v0, u0, u_c=3.0 * math.sqrt(2.0), dt=DT, r=0.2, T=1.0, epsilon=0.1):
    """Two-ball loss reduced to the diagonal, for scalar or tape inputs.

    The first step runs under ``u0``; afterwards ball 1 accelerates at ``u_c``
    until it touches ball 2, the balls swap velocities, and ball 2 coasts to T.
    Only the first step's control penalty is kept, as a linear term.
    """
    x1_0, x2_0 = x0
    v1_0, v2_0 = v0
    v1_dt = v1_0 + u0 * dt
    v2_dt = v2_0
    x1_dt = x1_0 + v1_0 * dt + u0 * (dt * dt / 2.0)
    x2_dt = x2_0 + v2_0 * dt
    dist_dt = x2_dt - x1_dt - 2.0 * r
    a = u_c / 2.0
    b = v1_dt - v2_dt
    c = -dist_dt
    disc = b * b - 4.0 * a * c
    if value_of(disc) < 0.0:
        raise ValueError("balls never collide (negative discriminant)")
    s = (-b + sqrt(disc)) / (2.0 * a) + dt
    v1_s = v1_dt + u_c * (s - dt)
    x2_s = x2_dt + v2_dt * (s - dt)
    x2_T = x2_s + v1_s * (T - s)
    loss = x2_T * x2_T + epsilon * u0 * dt
    return loss, s


def task3_oracle(
    x0=(-2.0 * math.sqrt(2.0), -math.sqrt(2.0)),
    v0=(0.0, 0.0),
    u0=3.0 * math.sqrt(2.0),
    u_c=3.0 * math.sqrt(2.0),
    dt=DT,
    r=0.2,
    T=1.0,
    epsilon=0.1,
) -> OracleResult:
    """Closed-form two-ball loss and its gradients, mapped back to 2D.

    Diagonal gradients are divided by sqrt(2) to give x (= y) components.
    """
    tape = Tape()
    xs = [tape.var(x) for x in x0]
    vs = [tape.var(v) for v in v0]
    u = tape.var(u0)
    loss, s = task3_loss_1d(xs, vs, u, u_c, dt, r, T, epsilon)
    if not (dt < value_of(s) < T):
        raise ValueError(f"collision time {value_of(s)} outside ({dt}, {T})")
    g = tape.backward(loss)
    k = 1.0 / math.sqrt(2.0)
    gx = [g[x] * k for x in xs]
    gv = [g[v] * k for v in vs]
    gu = g[u] * k
    return OracleResult(
        loss=float(value_of(loss)),
        grad_p0=(Vec2(gx[0], gx[0]), Vec2(gx[1], gx[1])),
        grad_v0=(Vec2(gv[0], gv[0]), Vec2(gv[1], gv[1])),
        grad_u0=Vec2(gu, gu),
        collision_time_s=float(value_of(s)),
        grad_1d={"x": [g[x] for x in xs], "v": [g[v] for v in vs], "u": g[u]},
    )


@dataclass
class OptimalControl:
    """Continuous-time optimum of the two-ball task along the diagonal.

    Before the collision at ``s`` the control magnitude is
    ``a + b * (s - t)``; after it the control is zero.
    """

    collision_time: float
    impact_speed: float
    a: float
    b: float
    loss: float

    def magnitude(self, t: float) -> float:
        if t >= self.collision_time:
            return 0.0
        return self.a + self.b * (self.collision_time - t)


def task3_optimal_control(
    p1=(-2.0, -2.0), p2=(-1.0, -1.0), r=0.2, T=1.0, epsilon=0.1
) -> OptimalControl:
    """Minimize |x2(T)|^2 + epsilon * int u^2 over pre-collision controls.

    For a fixed collision time ``s`` and impact speed ``V`` the cheapest
    control moving ball 1 by the gap while reaching speed ``V`` is affine in
    time; ``V`` then enters quadratically and ``s`` is found by a bounded scalar
    search.
    """
    import numpy as np
    from scipy.optimize import minimize_scalar

    x1 = (p1[0] + p1[1]) / math.sqrt(2.0)
    x2 = (p2[0] + p2[1]) / math.sqrt(2.0)
    gap = x2 - x1 - 2.0 * r

    def best(s):
        gram = np.array([[s, s * s / 2.0], [s * s / 2.0, s**3 / 3.0]])
        inv = np.linalg.inv(gram)
        c2 = (T - s) ** 2 + epsilon * inv[0, 0]
        c1 = 2.0 * x2 * (T - s) + 2.0 * epsilon * inv[0, 1] * gap
        c0 = x2 * x2 + epsilon * inv[1, 1] * gap * gap
        V = -c1 / (2.0 * c2)
        return c2 * V * V + c1 * V + c0, V, inv

    res = minimize_scalar(lambda s: best(s)[0], bounds=(1e-3, T - 1e-3),
                          method="bounded", options={"xatol": 1e-12})
    s = float(res.x)
    loss, V, inv = best(s)
    a, b = inv @ np.array([V, gap])
    return OptimalControl(s, float(V), float(a), float(b), float(loss))


__all__ = [
    "DT",
    "TASK_NAMES",
    "TASK_KEYS",
    "MODEL_KEYS",
    "SimulationUnstable",
    "LossSpec",
    "TaskSpec",
    "get_param",
    "set_param",
    "param_label",
    "make_task1",
    "make_task2",
    "make_task3",
    "build_task",
    "default_model",
    "SimInputs",
    "ContactRecord",
    "SimResult",
    "simulate",
    "loss_and_grad",
    "trajectory_mode",
    "task1_analytic",
    "OracleResult",
    "task3_loss_1d",
    "task3_oracle",
    "OptimalControl",
    "task3_optimal_control",
]
