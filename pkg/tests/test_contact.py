import math

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from diffcontact.autodiff import Tape, value_of
from diffcontact.contact import (
    MODEL_NAMES,
    PBD,
    Compliant,
    ContactImpulse,
    ImpulseLCP,
    apply_impulse_no_toi,
    apply_impulse_with_toi,
    compliant_force,
    coulomb_friction_impulse,
    damping_for_restitution,
    impulse_convex,
    impulse_direct,
    impulse_lcp,
    model_from_name,
    pbd_resolve,
    step,
    uses_toi,
)
from diffcontact.dynamics import (
    BALL_BALL,
    BALL_PLANE,
    BallState,
    ContactEvent,
    HalfPlane,
    Scene,
    Vec2,
    detect_contacts,
    integrate_free,
    plane_signed_distance,
    relative_normal_velocity,
)

GROUND = HalfPlane(Vec2(0.0, 1.0), 0.0)
DT = 1.0 / 480.0
IMPULSES = (impulse_direct, impulse_lcp, impulse_convex)


def plane_event(vy, vx=0.0, e=1.0, mu=0.0, m=1.0, r=0.1):
    scene = Scene((BallState(Vec2(0.0, r - 0.001), Vec2(vx, vy), r, m),), (GROUND,), Vec2(), e, mu)
    (ev,) = detect_contacts(scene, scene)
    return ev, scene


def pair_scene(v1, v2, m1=1.0, m2=1.0, e=1.0, mu=0.0, r=0.2, sep=0.39, angle=0.3):
    n = Vec2(math.cos(angle), math.sin(angle))
    a = BallState(Vec2(0.0, 0.0), Vec2(*v1), r, m1)
    b = BallState(n * sep, Vec2(*v2), r, m2)
    return Scene((a, b), (), Vec2(), e, mu)


def momentum(scene):
    px = sum(b.mass * value_of(b.vel.x) for b in scene.balls)
    py = sum(b.mass * value_of(b.vel.y) for b in scene.balls)
    return px, py


def energy(scene):
    return sum(0.5 * b.mass * (value_of(b.vel.x) ** 2 + value_of(b.vel.y) ** 2) for b in scene.balls)


class TestModels:
    def test_names_round_trip(self):
        for name in MODEL_NAMES:
            assert model_from_name(name).name == name
        assert uses_toi(model_from_name("lcp")) and not uses_toi(model_from_name("lcp-notoi"))
        assert not uses_toi(Compliant()) and not uses_toi(PBD())

    def test_params(self):
        assert model_from_name("compliant", k_n=100.0).k_n == 100.0
        assert model_from_name("pbd", pbd_iterations=3).iterations == 3
        with pytest.raises(ValueError):
            model_from_name("nope")
        with pytest.raises(ValueError):
            Compliant(k_n=0.0)
        with pytest.raises(ValueError):
            PBD(0)


class TestImpulses:
    def test_elastic_plane(self):
        ev, s = plane_event(-2.0)
        imp = impulse_direct(ev, s)
        assert imp.lambda_n == 4.0
        out = apply_impulse_no_toi(s, ev, imp)
        assert value_of(out.balls[0].vel.y) == 2.0

    def test_restitution_092(self):
        ev, s = plane_event(-5.0, e=0.92)
        for f in IMPULSES:
            out = apply_impulse_no_toi(s, ev, f(ev, s))
            assert value_of(out.balls[0].vel.y) == pytest.approx(4.6, abs=1e-12)

    def test_head_on_exchange(self):
        s = Scene((BallState(Vec2(0.0, 0.0), Vec2(1.0, 0.0), 0.2),
                   BallState(Vec2(0.39, 0.0), Vec2(0.0, 0.0), 0.2)))
        (ev,) = detect_contacts(s, s)
        for f in IMPULSES:
            out = apply_impulse_no_toi(s, ev, f(ev, s))
            assert out.balls[0].vel.values() == pytest.approx((0.0, 0.0), abs=1e-15)
            assert out.balls[1].vel.values() == pytest.approx((1.0, 0.0), abs=1e-15)

    def test_separating_is_zero(self):
        ev, s = plane_event(1.0)
        for f in IMPULSES:
            assert value_of(f(ev, s).lambda_n) == 0.0
        # slack stays positive
        vn = relative_normal_velocity(ev, s)
        assert vn + s.restitution_e * vn > 0

    def test_direct_rejects_friction(self):
        ev, s = plane_event(-2.0, vx=1.0, mu=0.1)
        with pytest.raises(ValueError):
            impulse_direct(ev, s)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(-20.0, 20.0), st.floats(0.0, 1.0), st.floats(0.1, 10.0), st.floats(0.1, 10.0))
    def test_single_contact_equivalence(self, vn, e, m1, m2):
        s = Scene((BallState(Vec2(0.0, 0.0), Vec2(vn, 0.0), 0.2, m1),
                   BallState(Vec2(0.39, 0.0), Vec2(0.0, 0.0), 0.2, m2)), (), Vec2(), e)
        ev = ContactEvent(BALL_BALL, 0, 1, Vec2(-1.0, 0.0), 0.01)
        lams = [value_of(f(ev, s).lambda_n) for f in IMPULSES]
        assert lams[0] == lams[1] == lams[2]

    @settings(max_examples=300, deadline=None)
    @given(st.floats(-20.0, 20.0), st.floats(0.0, 1.0), st.floats(0.1, 10.0))
    def test_complementarity(self, vn, e, m):
        ev, s = plane_event(vn, e=e, m=m)
        lam = value_of(impulse_lcp(ev, s).lambda_n)
        slack = vn + lam / m + e * vn
        assert lam >= 0.0
        assert slack >= -1e-10 * max(1.0, abs(vn))
        assert abs(lam * slack) <= 1e-10 * max(1.0, lam * abs(vn))

    def test_complementarity_tight(self):
        # residual on representative task values, absolute 1e-10
        for vn, e in ((-2.0, 1.0), (-5.0, 0.92), (-4.3, 0.92), (0.7, 0.92)):
            ev, s = plane_event(vn, e=e)
            lam = value_of(impulse_lcp(ev, s).lambda_n)
            slack = vn + lam + e * vn
            assert lam >= 0 and slack >= -1e-10 and abs(lam * slack) <= 1e-10

    def test_gradient_through_gate(self):
        tape = Tape()
        vy = tape.var(-2.0)
        s = Scene((BallState(Vec2(0.0, 0.09), Vec2(0.0, vy), 0.1),), (GROUND,))
        (ev,) = detect_contacts(s, s)
        for f in IMPULSES:
            lam = f(ev, s).lambda_n
            assert tape.backward(lam)[vy] == -2.0


class TestFriction:
    def test_examples(self):
        # ground tangent is (-1, 0): vx = -10 is a tangential velocity of +10
        ev, s = plane_event(-2.0, vx=-10.0, mu=0.1)
        assert coulomb_friction_impulse(ev, s, 4.0) == pytest.approx(-0.4)
        ev, s = plane_event(-2.0, vx=0.0, mu=0.1)
        assert value_of(coulomb_friction_impulse(ev, s, 4.0)) == 0.0
        ev, s = plane_event(-2.0, vx=3.0, mu=0.0)
        assert coulomb_friction_impulse(ev, s, 4.0) == 0.0

    def test_lcp_sign_convention(self):
        # the ground tangent is -x, so a ball moving +x gets +lambda_t along it
        ev, s = plane_event(-2.0, vx=10.0, mu=0.1)
        imp = impulse_lcp(ev, s)
        out = apply_impulse_no_toi(s, ev, imp)
        assert value_of(out.balls[0].vel.x) == pytest.approx(10.0 - 0.4)

    @settings(max_examples=300, deadline=None)
    @given(st.floats(-10.0, 10.0), st.floats(-10.0, 0.0), st.floats(0.0, 1.0), st.floats(0.0, 2.0))
    def test_cone(self, vx, vy, e, mu):
        ev, s = plane_event(vy, vx=vx, e=e, mu=mu)
        for f in (impulse_lcp, impulse_convex):
            imp = f(ev, s)
            ln, lt = value_of(imp.lambda_n), value_of(imp.lambda_t)
            assert ln >= 0.0
            assert abs(lt) <= mu * ln + 1e-12

    def test_convex_sticks_inside_cone(self):
        ev, s = plane_event(-5.0, vx=0.1, mu=0.5)
        imp = impulse_convex(ev, s)
        out = apply_impulse_no_toi(s, ev, imp)
        assert value_of(out.balls[0].vel.x) == pytest.approx(0.0, abs=1e-15)

    def test_convex_is_cone_projection(self):
        # compare with a brute-force minimization over the cone
        ev, s = plane_event(-2.0, vx=5.0, e=0.5, mu=0.2)
        imp = impulse_convex(ev, s)
        free = (3.0, -(-5.0))  # unconstrained (lambda_n, lambda_t) along (n, perp)
        best, arg = math.inf, None
        for i in range(4001):
            ln = i * 1e-3
            for sgn in (-1.0, 1.0):
                lt = sgn * 0.2 * ln
                d = (ln - free[0]) ** 2 + (lt - free[1]) ** 2
                if d < best:
                    best, arg = d, (ln, lt)
        assert value_of(imp.lambda_n) == pytest.approx(arg[0], abs=1e-3)
        assert value_of(imp.lambda_t) == pytest.approx(arg[1], abs=1e-3)


class TestApplication:
    def setup_method(self):
        r = 0.1
        self.prev = Scene((BallState(Vec2(0.0, r + 0.001), Vec2(1.0, -1.0), r),), (GROUND,))
        self.tent = self.prev.with_balls([integrate_free(self.prev.balls[0], Vec2(), DT)])
        (self.ev,) = detect_contacts(self.prev, self.tent)

    def test_alpha_extremes(self):
        imp = ContactImpulse(2.0, 0.0, 1.0)
        at_end = apply_impulse_with_toi(self.prev, self.tent, self.ev, imp, DT)
        plain = apply_impulse_no_toi(self.tent, self.ev, imp)
        assert at_end.balls[0].pos.values() == plain.balls[0].pos.values()
        imp0 = ContactImpulse(2.0, 0.0, 0.0)
        at_start = apply_impulse_with_toi(self.prev, self.tent, self.ev, imp0, DT)
        # impulse first, then a full step of free flight
        kicked = BallState(self.prev.balls[0].pos, Vec2(1.0, 1.0), 0.1)
        expect = integrate_free(kicked, Vec2(), DT)
        assert at_start.balls[0].pos.values() == pytest.approx(expect.pos.values(), abs=1e-15)

    def test_toi_lands_on_reflection(self):
        out, _ = step(self.prev, [Vec2()], ImpulseLCP(), DT)
        # mirror image of the free-flight end point
        free_y = value_of(self.tent.balls[0].pos.y)
        assert value_of(out.balls[0].pos.y) == pytest.approx(2 * 0.1 - free_y, abs=1e-14)
        assert value_of(out.balls[0].vel.y) == pytest.approx(1.0)

    def test_no_contact_equals_free_flight(self):
        s = Scene((BallState(Vec2(0.0, 1.0), Vec2(1.0, -1.0), 0.1),), (GROUND,))
        for name in MODEL_NAMES:
            out, events = step(s, [Vec2(0.5, 0.0)], model_from_name(name), DT)
            free = integrate_free(s.balls[0], Vec2(0.5, 0.0), DT)
            assert events == []
            assert out.balls[0].pos.values() == free.pos.values()
            assert out.balls[0].vel.values() == free.vel.values()


def closing_pair(model, m1, m2, e, angle):
    r = 0.2
    n = Vec2(math.cos(angle), math.sin(angle))
    if model.name == "compliant":
        sep = 2 * r - 0.001
    else:
        sep = 2 * r + 0.0005
    a = BallState(Vec2(0.0, 0.0), n * 1.0 + Vec2(0.1, -0.2), r, m1)
    b = BallState(n * sep, n * -0.5, r, m2)
    return Scene((a, b), (), Vec2(), e)


@pytest.mark.parametrize("name", MODEL_NAMES)
@settings(max_examples=40, deadline=None)
@given(m1=st.floats(0.2, 5.0), m2=st.floats(0.2, 5.0), e=st.floats(0.0, 1.0),
       angle=st.floats(0.0, 2 * math.pi))
def test_momentum_conserved(name, m1, m2, e, angle):
    model = model_from_name(name)
    s = closing_pair(model, m1, m2, e, angle)
    out, events = step(s, [Vec2(), Vec2()], model, DT)
    assume(events)
    p0, p1 = momentum(s), momentum(out)
    assert abs(p0[0] - p1[0]) <= 1e-10 and abs(p0[1] - p1[1]) <= 1e-10


@pytest.mark.parametrize("name", ["lcp", "convex", "direct", "lcp-notoi", "convex-notoi", "direct-notoi"])
@settings(max_examples=40, deadline=None)
@given(m1=st.floats(0.2, 5.0), m2=st.floats(0.2, 5.0), e=st.floats(0.0, 1.0),
       angle=st.floats(0.0, 2 * math.pi))
def test_energy(name, m1, m2, e, angle):
    model = model_from_name(name)
    s = closing_pair(model, m1, m2, e, angle)
    out, events = step(s, [Vec2(), Vec2()], model, DT)
    assume(events)
    if e == 1.0:
        assert abs(energy(out) - energy(s)) <= 1e-10
    else:
        assert energy(out) <= energy(s) + 1e-10


class TestCompliant:
    def test_hooke(self):
        ev = ContactEvent(BALL_PLANE, 0, 0, Vec2(0.0, 1.0), 0.01)
        s = Scene((BallState(Vec2(0.0, 0.09), Vec2(0.0, 0.0), 0.1),), (GROUND,))
        f = compliant_force(ev, s, Compliant(k_n=1000.0))
        assert f.values() == pytest.approx((0.0, 10.0))

    def test_no_force_without_penetration(self):
        ev = ContactEvent(BALL_PLANE, 0, 0, Vec2(0.0, 1.0), 0.0)
        s = Scene((BallState(Vec2(0.0, 0.1), Vec2(0.0, -1.0), 0.1),), (GROUND,))
        assert compliant_force(ev, s, Compliant(k_n=1000.0)).values() == (0.0, 0.0)

    def test_no_suction(self):
        ev = ContactEvent(BALL_PLANE, 0, 0, Vec2(0.0, 1.0), 0.001)
        s = Scene((BallState(Vec2(0.0, 0.099), Vec2(0.0, 5.0), 0.1),), (GROUND,))
        f = compliant_force(ev, s, Compliant(k_n=1000.0, k_d=100.0))
        assert f.values() == (0.0, 0.0)

    def test_damping_map(self):
        assert damping_for_restitution(1.0, 1e4) == 0.0
        k_d = damping_for_restitution(0.92, 1e4, 1.0)
        zeta = k_d / (2 * math.sqrt(1e4))
        # damped half-period restitution
        e = math.exp(-zeta * math.pi / math.sqrt(1 - zeta**2))
        assert e == pytest.approx(0.92, rel=1e-12)

    def test_bounce_restitution(self):
        # drop onto the ground and measure the rebound speed
        k_n, e = 1e5, 0.8
        model = Compliant(k_n=k_n, k_d=damping_for_restitution(e, k_n))
        dt = 1e-4
        s = Scene((BallState(Vec2(0.0, 0.1005), Vec2(0.0, -1.0), 0.1),), (GROUND,))
        for _ in range(2000):
            s, _ = step(s, [Vec2()], model, dt)
        assert value_of(s.balls[0].vel.y) == pytest.approx(e, rel=0.02)

    def test_elastic_energy(self):
        model = Compliant(k_n=1e4)
        s = Scene((BallState(Vec2(0.0, 0.101), Vec2(0.0, -2.0), 0.1),), (GROUND,))
        for _ in range(200):
            s, _ = step(s, [Vec2()], model, DT)
        assert value_of(s.balls[0].vel.y) == pytest.approx(2.0, rel=1e-2)


class TestPBD:
    def test_projection_to_surface(self):
        r = 0.1
        prev = Scene((BallState(Vec2(0.0, 0.105), Vec2(0.3, -3.0), r),), (GROUND,))
        tent = prev.with_balls([integrate_free(prev.balls[0], Vec2(), DT)])
        events = detect_contacts(prev, tent)
        out = pbd_resolve(prev, tent, events, DT, 1)
        assert abs(plane_signed_distance(out.balls[0], GROUND)) < 1e-10

    def test_ball_ball_projection(self):
        s = pair_scene((1.0, 0.0), (0.0, 0.0), m1=1.0, m2=3.0, sep=0.39)
        tent = s
        events = detect_contacts(s, tent)
        out = pbd_resolve(s, tent, events, DT, 1)
        a, b = out.balls
        gap = (a.pos - b.pos).norm() - 0.4
        assert abs(gap) <= 1e-8
        # the lighter ball moves three times as far
        da = (a.pos - s.balls[0].pos).norm()
        db = (b.pos - s.balls[1].pos).norm()
        assert da == pytest.approx(3 * db, rel=1e-10)

    def test_restitution_pass(self):
        r = 0.1
        prev = Scene((BallState(Vec2(0.0, 0.101), Vec2(0.0, -2.0), r),), (GROUND,), Vec2(), 0.5)
        tent = prev.with_balls([integrate_free(prev.balls[0], Vec2(), DT)])
        events = detect_contacts(prev, tent)
        out = pbd_resolve(prev, tent, events, DT, 1)
        assert value_of(out.balls[0].vel.y) == pytest.approx(1.0, abs=1e-12)

    def test_friction_clamped(self):
        r, mu = 0.1, 0.1
        prev = Scene((BallState(Vec2(0.0, 0.101), Vec2(5.0, -2.0), r),), (GROUND,), Vec2(), 1.0, mu)
        tent = prev.with_balls([integrate_free(prev.balls[0], Vec2(), DT)])
        (ev,) = detect_contacts(prev, tent)
        d = value_of(ev.penetration_d)
        out = pbd_resolve(prev, tent, [ev], DT, 1)
        shift = value_of(tent.balls[0].pos.x) - value_of(out.balls[0].pos.x)
        assert shift == pytest.approx(mu * d, rel=1e-9)
