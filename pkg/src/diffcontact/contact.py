"""Contact resolution strategies and the per-step update built on them.

Three velocity-impulse models (direct, LCP, convex maximum dissipation) can
each run with or without time-of-impact handling.  The compliant model turns
penetration into a spring-damper force and the PBD model projects positions
and rederives velocities from the projection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

from .autodiff import Scalar, clamp, maximum, select, value_of
from .dynamics import (
    BALL_BALL,
    BALL_PLANE,
    BallState,
    ContactEvent,
    Scene,
    Vec2,
    compute_toi,
    detect_contacts,
    effective_mass,
    integrate_free,
    relative_normal_velocity,
    relative_tangent_velocity,
)


@dataclass(frozen=True)
class ImpulseDirect:
    use_toi: bool = True

    @property
    def name(self) -> str:
        return "direct" if self.use_toi else "direct-notoi"


@dataclass(frozen=True)
class ImpulseLCP:
    use_toi: bool = True

    @property
    def name(self) -> str:
        return "lcp" if self.use_toi else "lcp-notoi"


@dataclass(frozen=True)
class ImpulseConvex:
    use_toi: bool = True

    @property
    def name(self) -> str:
        return "convex" if self.use_toi else "convex-notoi"


@dataclass(frozen=True)
class Compliant:
    k_n: float = 1.0e4
    k_d: float = 0.0
    k_f: float = 100.0

    def __post_init__(self):
        if not self.k_n > 0:
            raise ValueError("k_n must be positive")
        if self.k_d < 0 or self.k_f < 0:
            raise ValueError("damping coefficients must be nonnegative")

    @property
    def name(self) -> str:
        return "compliant"


@dataclass(frozen=True)
class PBD:
    iterations: int = 1

    def __post_init__(self):
        if self.iterations < 1:
            raise ValueError("PBD needs at least one iteration")

    @property
    def name(self) -> str:
        return "pbd"


ImpulseModel = Union[ImpulseDirect, ImpulseLCP, ImpulseConvex]
ContactModel = Union[ImpulseDirect, ImpulseLCP, ImpulseConvex, Compliant, PBD]

MODEL_NAMES = (
    "lcp",
    "lcp-notoi",
    "convex",
    "convex-notoi",
    "direct",
    "direct-notoi",
    "compliant",
    "pbd",
)


def model_from_name(name: str, **params) -> ContactModel:
    """Build a model from its short name; ``params`` feed compliant/PBD settings."""
    impulse = {"lcp": ImpulseLCP, "convex": ImpulseConvex, "direct": ImpulseDirect}
    base, _, suffix = name.partition("-")
    if base in impulse and suffix in ("", "notoi"):
        return impulse[base](use_toi=(suffix == ""))
    if name == "compliant":
        keys = ("k_n", "k_d", "k_f")
        return Compliant(**{k: float(params[k]) for k in keys if k in params})
    if name == "pbd":
        return PBD(int(params.get("pbd_iterations", 1)))
    raise ValueError(f"unknown contact model {name!r}; expected one of {MODEL_NAMES}")


def uses_toi(model: ContactModel) -> bool:
    return getattr(model, "use_toi", False)


@dataclass
class ContactImpulse:
    lambda_n: Scalar
    lambda_t: Scalar = 0.0
    applied_at_alpha: Scalar = 1.0


# --- impulse models ---------------------------------------------------------


def impulse_direct(event: ContactEvent, scene: Scene) -> ContactImpulse:
    """Restitution impulse computed directly; frictionless only."""
    if scene.friction_mu > 0.0:
        raise ValueError("the direct velocity impulse supports frictionless contact only")
    vn = relative_normal_velocity(event, scene)
    m = effective_mass(event, scene)
    lam = select(vn < 0.0, (1.0 + scene.restitution_e) * m * (-vn), 0.0)
    return ContactImpulse(lam)


def impulse_lcp(event: ContactEvent, scene: Scene) -> ContactImpulse:
    """Closed-form solution of the single-contact complementarity problem.

    0 <= lambda_n  _|_  vn_plus + e * vn >= 0 with vn_plus = vn + lambda_n / m_eff.
    """
    vn = relative_normal_velocity(event, scene)
    m = effective_mass(event, scene)
    lam = maximum(0.0, -(1.0 + scene.restitution_e) * m * vn)
    lam_t = 0.0
    if scene.friction_mu > 0.0:
        lam_t = coulomb_friction_impulse(event, scene, lam)
    return ContactImpulse(lam, lam_t)


def impulse_convex(event: ContactEvent, scene: Scene) -> ContactImpulse:
    """Minimize the mass-weighted distance of the post-contact velocity to a target.

    The target normal velocity is ``-e * vn`` and the target tangential
    velocity is zero.  Without friction the feasible set is lambda_n >= 0 and
    the solution is the clipped unconstrained minimizer; with friction the
    unconstrained minimizer is projected onto the cone |lambda_t| <= mu lambda_n.
    """
    vn = relative_normal_velocity(event, scene)
    m = effective_mass(event, scene)
    lam_free = -(1.0 + scene.restitution_e) * m * vn
    mu = scene.friction_mu
    if mu == 0.0:
        return ContactImpulse(maximum(0.0, lam_free))
    lam_t_free = -m * relative_tangent_velocity(event, scene)
    a, b = value_of(lam_free), value_of(lam_t_free)
    if abs(b) <= mu * a:
        return ContactImpulse(lam_free, lam_t_free)
    if mu * abs(b) <= -a:
        return ContactImpulse(0.0, 0.0)
    # projection onto the cone boundary ray (1, mu * sign(b)); the metric is
    # isotropic because both directions share the effective mass
    sign = 1.0 if b > 0.0 else -1.0
    lam_n = (lam_free + mu * sign * lam_t_free) / (1.0 + mu * mu)
    return ContactImpulse(lam_n, mu * sign * lam_n)


def coulomb_friction_impulse(
    event: ContactEvent, scene: Scene, lambda_n: Scalar
) -> Scalar:
    """Stopping impulse clipped to the Coulomb cone."""
    mu = scene.friction_mu
    if mu == 0.0:
        return 0.0
    m = effective_mass(event, scene)
    bound = mu * lambda_n
    return clamp(-m * relative_tangent_velocity(event, scene), -bound, bound)


_IMPULSE = {
    ImpulseDirect: impulse_direct,
    ImpulseLCP: impulse_lcp,
    ImpulseConvex: impulse_convex,
}


def solve_impulse(model: ImpulseModel, event: ContactEvent, scene: Scene) -> ContactImpulse:
    return _IMPULSE[type(model)](event, scene)


def _velocity_jumps(event: ContactEvent, scene: Scene, impulse: ContactImpulse):
    n = event.normal
    j = n * impulse.lambda_n
    if value_of(impulse.lambda_t) != 0.0:
        j = j + n.perp() * impulse.lambda_t
    a = scene.balls[event.first]
    dv1 = j / a.mass
    if event.kind == BALL_PLANE:
        return dv1, None
    b = scene.balls[event.second]
    return dv1, -j / b.mass


def _kick(ball: BallState, dv: Vec2, shift: Scalar) -> BallState:
    pos = ball.pos if shift is None else ball.pos + dv * shift
    return BallState(pos, ball.vel + dv, ball.radius, ball.mass)


def apply_impulse_with_toi(
    prev: Scene,
    tentative: Scene,
    event: ContactEvent,
    impulse: ContactImpulse,
    dt: float,
) -> Scene:
    """Move to the impact point, apply the jump, finish the step.

    Written as a correction of the tentative end state: moving along the
    step chord for alpha*dt and then with the jumped chord velocity for
    (1 - alpha)*dt lands at ``tentative.pos + dv * (1 - alpha) * dt``.
    """
    dv1, dv2 = _velocity_jumps(event, tentative, impulse)
    rest = (1.0 - impulse.applied_at_alpha) * dt
    balls = list(tentative.balls)
    balls[event.first] = _kick(balls[event.first], dv1, rest)
    if dv2 is not None:
        balls[event.second] = _kick(balls[event.second], dv2, rest)
    return tentative.with_balls(balls)


def apply_impulse_no_toi(
    tentative: Scene, event: ContactEvent, impulse: ContactImpulse
) -> Scene:
    """Velocity jump at the end of the full step; positions are left alone."""
    dv1, dv2 = _velocity_jumps(event, tentative, impulse)
    balls = list(tentative.balls)
    balls[event.first] = _kick(balls[event.first], dv1, None)
    if dv2 is not None:
        balls[event.second] = _kick(balls[event.second], dv2, None)
    return tentative.with_balls(balls)


def _impact_scene(prev: Scene, tentative: Scene, event: ContactEvent, alpha: Scalar) -> Scene:
    """State at the impact instant; also refreshes a ball-ball normal in place."""
    balls = list(tentative.balls)
    for i in (event.indices if event.kind == BALL_BALL else (event.first,)):
        b0, b1 = prev.balls[i], tentative.balls[i]
        pos = b0.pos + (b1.pos - b0.pos) * alpha
        vel = b0.vel + (b1.vel - b0.vel) * alpha
        balls[i] = BallState(pos, vel, b0.radius, b0.mass)
    if event.kind == BALL_BALL and not event.degenerate:
        a, b = balls[event.first], balls[event.second]
        event.normal = (a.pos - b.pos) / (a.radius + b.radius)
    return tentative.with_balls(balls)


# --- compliant model ----------------------------------------------------------


def compliant_force(event: ContactEvent, scene: Scene, model: Compliant) -> Vec2:
    """Spring-damper force on ball ``first``; never pulls the bodies together."""
    vn = relative_normal_velocity(event, scene)
    fn = maximum(0.0, model.k_n * event.penetration_d - model.k_d * vn)
    force = event.normal * fn
    mu = scene.friction_mu
    if mu > 0.0 and value_of(fn) > 0.0:
        vt = relative_tangent_velocity(event, scene)
        bound = mu * fn
        ft = -clamp(model.k_f * vt, -bound, bound)
        force = force + event.normal.perp() * ft
    return force


def damping_for_restitution(e: float, k_n: float, m_eff: float = 1.0) -> float:
    """Damping giving restitution ``e`` for a linear spring-damper contact."""
    if e >= 1.0:
        return 0.0
    if e <= 0.0:
        return 2.0 * math.sqrt(k_n * m_eff)
    ln_e = math.log(e)
    zeta = -ln_e / math.sqrt(math.pi**2 + ln_e**2)
    return 2.0 * zeta * math.sqrt(k_n * m_eff)


# --- position-based dynamics ---------------------------------------------------


def pbd_resolve(
    prev: Scene,
    tentative: Scene,
    events: Sequence[ContactEvent],
    dt: float,
    iterations: int = 1,
) -> Scene:
    """Project overlapping bodies apart, rederive velocities, then restitute.

    Velocities become ``v_tentative + (p_projected - p_tentative) / dt``, which
    is the position-difference update for the step.  The restitution pass
    sets each approaching contact's normal velocity to ``-e`` times its
    pre-projection value.
    """
    if not events:
        return tentative
    balls = tentative.balls
    pos = [b.pos for b in balls]
    approach = [relative_normal_velocity(ev, tentative) for ev in events]
    normals = [ev.normal for ev in events]
    mu = tentative.friction_mu

    for it in range(iterations):
        for k, ev in enumerate(events):
            i = ev.first
            ri = balls[i].radius
            if ev.kind == BALL_PLANE:
                plane = tentative.planes[ev.second]
                n = plane.normal
                d = plane.offset + ri - n.dot(pos[i])
                if value_of(d) <= 0.0:
                    continue
                pos[i] = pos[i] + n * d
                if it == 0 and mu > 0.0:
                    t = n.perp()
                    slide = t.dot(pos[i] - prev.balls[i].pos)
                    pos[i] = pos[i] - t * clamp(slide, -mu * d, mu * d)
                continue
            j = ev.second
            mi, mj = balls[i].mass, balls[j].mass
            wi, wj = mj / (mi + mj), mi / (mi + mj)
            delta = pos[i] - pos[j]
            dist = delta.norm()
            d = ri + balls[j].radius - dist
            if value_of(d) <= 0.0:
                continue
            n = delta / dist
            normals[k] = n
            pos[i] = pos[i] + n * (d * wi)
            pos[j] = pos[j] - n * (d * wj)
            if it == 0 and mu > 0.0:
                t = n.perp()
                slide = t.dot((pos[i] - prev.balls[i].pos) - (pos[j] - prev.balls[j].pos))
                corr = clamp(slide, -mu * d, mu * d)
                pos[i] = pos[i] - t * (corr * wi)
                pos[j] = pos[j] + t * (corr * wj)

    inv_dt = 1.0 / dt
    vel = [b.vel + (p - b.pos) * inv_dt for b, p in zip(balls, pos)]

    e = tentative.restitution_e
    for k, ev in enumerate(events):
        vn_pre = approach[k]
        if not value_of(vn_pre) < 0.0:
            continue
        n = normals[k]
        i = ev.first
        if ev.kind == BALL_PLANE:
            jump = -e * vn_pre - n.dot(vel[i])
            vel[i] = vel[i] + n * jump
            continue
        j = ev.second
        mi, mj = balls[i].mass, balls[j].mass
        jump = -e * vn_pre - n.dot(vel[i] - vel[j])
        vel[i] = vel[i] + n * (jump * (mj / (mi + mj)))
        vel[j] = vel[j] - n * (jump * (mi / (mi + mj)))

    return tentative.with_balls(
        [BallState(p, v, b.radius, b.mass) for p, v, b in zip(pos, vel, balls)]
    )


# --- step ---------------------------------------------------------------------


def _contact_forces(scene: Scene, events, model: Compliant, n: int) -> list:
    out = [None] * n
    for ev in events:
        f = compliant_force(ev, scene, model)
        out[ev.first] = f if out[ev.first] is None else out[ev.first] + f
        if ev.kind == BALL_BALL:
            j = ev.second
            out[j] = -f if out[j] is None else out[j] - f
    return out


def _step_compliant(scene: Scene, forces, model: Compliant, dt: float):
    """Velocity-Verlet step: contact force at the start drives the position
    update, the velocity uses the mean of start and end contact forces."""
    g = scene.gravity
    n = len(scene.balls)
    f0 = _contact_forces(scene, detect_contacts(scene, scene), model, n)
    total = [u if f is None else u + f for u, f in zip(forces, f0)]
    tentative = scene.with_balls(
        [integrate_free(b, f, dt, g) for b, f in zip(scene.balls, total)]
    )
    events = detect_contacts(scene, tentative)
    f1 = _contact_forces(tentative, events, model, n)
    balls = list(tentative.balls)
    half = 0.5 * dt
    for i, (a, b) in enumerate(zip(f0, f1)):
        if a is None and b is None:
            continue
        if a is None:
            jump = b
        elif b is None:
            jump = -a
        else:
            jump = b - a
        ball = balls[i]
        balls[i] = BallState(ball.pos, ball.vel + jump * (half / ball.mass), ball.radius, ball.mass)
    return tentative.with_balls(balls), events


def step(
    scene: Scene, forces: Sequence[Vec2], model: ContactModel, dt: float
) -> tuple[Scene, list[ContactEvent]]:
    """Advance one step under external ``forces`` (one per ball)."""
    g = scene.gravity
    if isinstance(model, Compliant):
        return _step_compliant(scene, forces, model, dt)
    tentative = scene.with_balls(
        [integrate_free(b, f, dt, g) for b, f in zip(scene.balls, forces)]
    )
    events = detect_contacts(scene, tentative)
    if not events:
        return tentative, events

    if isinstance(model, PBD):
        return pbd_resolve(scene, tentative, events, dt, model.iterations), events

    for ev in events:
        if model.use_toi:
            alpha = compute_toi(ev, scene, tentative, dt)
            impact = _impact_scene(scene, tentative, ev, alpha)
            imp = solve_impulse(model, ev, impact)
            imp.applied_at_alpha = alpha
            tentative = apply_impulse_with_toi(scene, tentative, ev, imp, dt)
        else:
            imp = solve_impulse(model, ev, tentative)
            tentative = apply_impulse_no_toi(tentative, ev, imp)
    return tentative, events


__all__ = [
    "ImpulseDirect",
    "ImpulseLCP",
    "ImpulseConvex",
    "Compliant",
    "PBD",
    "ContactModel",
    "ContactImpulse",
    "MODEL_NAMES",
    "model_from_name",
    "uses_toi",
    "impulse_direct",
    "impulse_lcp",
    "impulse_convex",
    "coulomb_friction_impulse",
    "solve_impulse",
    "apply_impulse_with_toi",
    "apply_impulse_no_toi",
    "compliant_force",
    "damping_for_restitution",
    "pbd_resolve",
    "step",
]
