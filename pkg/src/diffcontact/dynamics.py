"""2D ball dynamics: free-flight integration, contact detection and time of impact.

All arithmetic goes through :mod:`diffcontact.autodiff` scalars, so a state
whose components are tape variables stays differentiable end to end, and a
state made of floats runs the same code without a tape.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

from .autodiff import Scalar, sqrt, value_of

log = logging.getLogger(__name__)

BALL_PLANE = "ball-plane"
BALL_BALL = "ball-ball"


class Vec2:
    __slots__ = ("x", "y")

    def __init__(self, x: Scalar = 0.0, y: Scalar = 0.0):
        self.x = x
        self.y = y

    def __add__(self, o: "Vec2") -> "Vec2":
        return Vec2(self.x + o.x, self.y + o.y)

    def __sub__(self, o: "Vec2") -> "Vec2":
        return Vec2(self.x - o.x, self.y - o.y)

    def __mul__(self, s: Scalar) -> "Vec2":
        return Vec2(self.x * s, self.y * s)

    __rmul__ = __mul__

    def __truediv__(self, s: Scalar) -> "Vec2":
        return Vec2(self.x / s, self.y / s)

    def __neg__(self) -> "Vec2":
        return Vec2(-self.x, -self.y)

    def __iter__(self):
        yield self.x
        yield self.y

    def __repr__(self) -> str:
        return f"Vec2({value_of(self.x)!r}, {value_of(self.y)!r})"

    def __eq__(self, o) -> bool:
        if not isinstance(o, Vec2):
            return NotImplemented
        return self.values() == o.values()

    def __hash__(self):
        return hash(self.values())

    def dot(self, o: "Vec2") -> Scalar:
        return self.x * o.x + self.y * o.y

    def norm(self) -> Scalar:
        return sqrt(self.x * self.x + self.y * self.y)

    def perp(self) -> "Vec2":
        """Counter-clockwise tangent."""
        return Vec2(-self.y, self.x)

    def values(self) -> tuple[float, float]:
        return (float(value_of(self.x)), float(value_of(self.y)))


ZERO = Vec2(0.0, 0.0)


@dataclass(frozen=True)
class BallState:
    pos: Vec2
    vel: Vec2
    radius: float
    mass: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"radius must be positive, got {self.radius}")
        if not self.mass > 0:
            raise ValueError(f"mass must be positive, got {self.mass}")


@dataclass(frozen=True)
class HalfPlane:
    """The set ``normal . q >= offset``; the boundary is ``normal . q == offset``."""

    normal: Vec2
    offset: float

    def __post_init__(self):
        nx, ny = self.normal.values()
        if abs(math.hypot(nx, ny) - 1.0) > 1e-12:
            raise ValueError("half-plane normal must be a unit vector")


@dataclass(frozen=True)
class Scene:
    balls: tuple[BallState, ...]
    planes: tuple[HalfPlane, ...] = ()
    gravity: Vec2 = field(default_factory=lambda: Vec2(0.0, 0.0))
    restitution_e: float = 1.0
    friction_mu: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "balls", tuple(self.balls))
        object.__setattr__(self, "planes", tuple(self.planes))
        if not 0.0 <= self.restitution_e <= 1.0:
            raise ValueError(f"restitution must lie in [0, 1], got {self.restitution_e}")
        if self.friction_mu < 0.0:
            raise ValueError(f"friction must be nonnegative, got {self.friction_mu}")

    def with_balls(self, balls: Sequence[BallState]) -> "Scene":
        return replace(self, balls=tuple(balls))


@dataclass
class ContactEvent:
    """A contact found in a tentative state.

    ``first`` is a ball index; ``second`` is a plane index for ball-plane
    contacts and a ball index for ball-ball contacts.  ``normal`` points from
    the other surface into ball ``first``.
    """

    kind: str
    first: int
    second: int
    normal: Vec2
    penetration_d: Scalar
    toi_alpha: Optional[Scalar] = None
    degenerate: bool = False

    @property
    def indices(self) -> tuple[int, int]:
        return (self.first, self.second)


def integrate_free(
    state: BallState, force: Vec2, dt: float, gravity: Vec2 = ZERO
) -> BallState:
    """Exact constant-acceleration update over one step."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    acc = force / state.mass + gravity if state.mass != 1.0 else force + gravity
    half_dt = 0.5 * dt
    pos = Vec2(
        state.pos.x + (state.vel.x + acc.x * half_dt) * dt,
        state.pos.y + (state.vel.y + acc.y * half_dt) * dt,
    )
    vel = Vec2(state.vel.x + acc.x * dt, state.vel.y + acc.y * dt)
    return BallState(pos, vel, state.radius, state.mass)


def plane_signed_distance(ball: BallState, plane: HalfPlane) -> Scalar:
    return plane.normal.dot(ball.pos) - plane.offset - ball.radius


def ball_signed_distance(a: BallState, b: BallState) -> Scalar:
    return (a.pos - b.pos).norm() - (a.radius + b.radius)


def detect_contacts(scene: Scene, tentative: Scene) -> list[ContactEvent]:
    """All ball-plane and ball-ball pairs overlapping in ``tentative``.

    The overlap test runs on plain values; penetration depth and normal are
    then rebuilt in tracked arithmetic for the pairs that do overlap.
    """
    events: list[ContactEvent] = []
    balls = tentative.balls
    for i, ball in enumerate(balls):
        px, py = value_of(ball.pos.x), value_of(ball.pos.y)
        for k, plane in enumerate(tentative.planes):
            nx, ny = plane.normal.values()
            if nx * px + ny * py - plane.offset - ball.radius < 0.0:
                d = -plane_signed_distance(ball, plane)
                events.append(ContactEvent(BALL_PLANE, i, k, plane.normal, d))
    for i in range(len(balls)):
        a = balls[i]
        for j in range(i + 1, len(balls)):
            b = balls[j]
            dx = value_of(a.pos.x) - value_of(b.pos.x)
            dy = value_of(a.pos.y) - value_of(b.pos.y)
            if math.hypot(dx, dy) - a.radius - b.radius < 0.0:
                delta = a.pos - b.pos
                dist = delta.norm()
                normal = delta / dist
                d = (a.radius + b.radius) - dist
                events.append(ContactEvent(BALL_BALL, i, j, normal, d))
    return events


def compute_toi(
    event: ContactEvent, prev: Scene, tentative: Scene, dt: float
) -> Scalar:
    """Fraction of the step at which the pair first touches.

    Motion inside the step follows the chord from ``prev`` to ``tentative``,
    which reproduces the integrator's end-of-step position exactly.  When the
    pair already overlaps at step start or no root lies in [0, 1] the event is
    marked degenerate and 0.0 is returned.
    """
    a0 = prev.balls[event.first]
    a1 = tentative.balls[event.first]
    if event.kind == BALL_PLANE:
        plane = prev.planes[event.second]
        s0 = plane_signed_distance(a0, plane)
        s1 = plane_signed_distance(a1, plane)
        gap = value_of(s0) - value_of(s1)
        if value_of(s0) < 0.0 or gap <= 0.0:
            return _degenerate(event, "plane contact overlapping at step start")
        alpha = s0 / (s0 - s1)
    else:
        b0 = prev.balls[event.second]
        b1 = tentative.balls[event.second]
        start = a0.pos - b0.pos
        chord = (a1.pos - b1.pos) - start
        reach = a0.radius + b0.radius
        qa = chord.dot(chord)
        qb = 2.0 * start.dot(chord)
        qc = start.dot(start) - reach * reach
        disc = value_of(qb) * value_of(qb) - 4.0 * value_of(qa) * value_of(qc)
        if value_of(qc) < 0.0 or disc < 0.0 or value_of(qb) >= 0.0:
            return _degenerate(event, "no ball-ball root in the step")
        if disc == 0.0:
            return _degenerate(event, "grazing ball-ball contact")
        # smaller root, in the cancellation-free form
        alpha = (2.0 * qc) / (-qb + sqrt(qb * qb - 4.0 * qa * qc))
    av = value_of(alpha)
    if not 0.0 <= av <= 1.0:
        return _degenerate(event, f"root {av!r} outside [0, 1]")
    event.toi_alpha = alpha
    return alpha


def _degenerate(event: ContactEvent, why: str) -> float:
    log.debug("degenerate time of impact for %s %s: %s", event.kind, event.indices, why)
    event.degenerate = True
    event.toi_alpha = 0.0
    return 0.0


def relative_normal_velocity(event: ContactEvent, scene: Scene) -> Scalar:
    """Normal velocity of ball ``first`` relative to the other body (< 0 approaching)."""
    v = scene.balls[event.first].vel
    if event.kind == BALL_BALL:
        v = v - scene.balls[event.second].vel
    return event.normal.dot(v)


def relative_tangent_velocity(event: ContactEvent, scene: Scene) -> Scalar:
    v = scene.balls[event.first].vel
    if event.kind == BALL_BALL:
        v = v - scene.balls[event.second].vel
    return event.normal.perp().dot(v)


def effective_mass(event: ContactEvent, scene: Scene) -> float:
    m1 = scene.balls[event.first].mass
    if event.kind == BALL_PLANE:
        return m1
    m2 = scene.balls[event.second].mass
    return m1 * m2 / (m1 + m2)


def state_is_finite(scene: Scene) -> bool:
    for b in scene.balls:
        for c in (b.pos.x, b.pos.y, b.vel.x, b.vel.y):
            if not math.isfinite(value_of(c)):
                return False
    return True
