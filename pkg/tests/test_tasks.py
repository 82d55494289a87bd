import math

import pytest

from diffcontact.autodiff import Tape
from diffcontact.contact import MODEL_NAMES, Compliant, ImpulseLCP, damping_for_restitution
from diffcontact.dynamics import Vec2
from diffcontact.tasks import (
    DT,
    SimulationUnstable,
    build_task,
    default_model,
    get_param,
    loss_and_grad,
    make_task1,
    make_task2,
    make_task3,
    param_label,
    set_param,
    simulate,
    task1_analytic,
    task3_loss_1d,
    task3_optimal_control,
    task3_oracle,
    trajectory_mode,
)

SQ2 = math.sqrt(2.0)
TOI_MODELS = ("lcp", "convex", "direct")


class TestFactories:
    def test_task1(self):
        t = make_task1()
        b = t.scene.balls[0]
        assert b.pos.values() == (-1.0, 1.0) and b.vel.values() == (2.0, -2.0)
        assert t.steps_N == 480 and t.dt == DT and t.scene.gravity.values() == (0.0, 0.0)
        assert t.scene.restitution_e == 1.0

    def test_task2(self):
        t = make_task2()
        assert t.loss.target.values() == (-2.0, 1.5)
        assert t.steps_N == 288 == round(0.6 * 480)
        assert t.dt == pytest.approx(DT, rel=1e-15)
        assert t.scene.gravity.values() == (0.0, -9.8)
        assert t.scene.restitution_e == 0.92
        assert make_task2(frictional=True).scene.friction_mu == 0.1
        assert t.metadata["derived_defaults"] == ["gravity", "wall_x"]

    def test_task2_initial_bounces_ground_then_wall(self):
        res = simulate(make_task2(), ImpulseLCP())
        assert res.bounce_sequence()[:2] == [("ball-plane", 0), ("ball-plane", 1)]
        assert trajectory_mode(res) == "Trajectory 1"

    def test_task3(self):
        t = make_task3()
        b1, b2 = t.scene.balls
        gap = (b2.pos - b1.pos).norm() - b1.radius - b2.radius
        assert gap == pytest.approx(1.0142, abs=1e-4)
        assert all(u.values() == (3.0, 3.0) for u in t.controls)
        assert t.loss.ball == 1 and t.loss.epsilon == 0.1
        assert t.scene.planes == ()

    def test_overrides(self):
        t = build_task("task2", {"gravity": 5.0, "wall_x": 2.0, "N": 144})
        assert t.scene.gravity.values() == (0.0, -5.0)
        assert t.scene.planes[1].offset == -2.0
        assert t.steps_N == 144 and t.horizon_T == 0.6
        with pytest.raises(ValueError):
            build_task("task2", {"bogus": 1})
        with pytest.raises(ValueError):
            build_task("task9")

    def test_default_model(self):
        t2 = make_task2()
        m = default_model("compliant", t2)
        assert m.k_n == 1e4 and m.k_d == pytest.approx(damping_for_restitution(0.92, 1e4, 1.0))
        m3 = default_model("compliant", make_task3())
        assert m3.k_d == 0.0
        assert default_model("compliant", t2, {"k_d": 3.0}).k_d == 3.0
        assert default_model("pbd", t2, {"pbd_iterations": 4}).iterations == 4

    def test_params(self):
        t = make_task3()
        key = ("u", 5, 1)
        assert get_param(t, key) == 3.0
        t2 = set_param(t, key, 7.0)
        assert get_param(t2, key) == 7.0 and get_param(t, key) == 3.0
        assert param_label(("vel", 1, 0)) == "vx2" and param_label(key) == "uy[5]"


class TestTask1:
    @pytest.mark.parametrize("name", TOI_MODELS)
    def test_matches_closed_form(self, name):
        t = make_task1()
        res = simulate(t, default_model(name, t))
        # reflection of the free-flight height about y = r
        free = 1.0 - 2.0 * 1.0
        assert res.loss_value == pytest.approx(2 * 0.1 - free, abs=1e-12)
        h, g = task1_analytic(1.0, -2.0, 0.0)
        assert h == pytest.approx(res.loss_value, abs=1e-12)
        assert g == (-1.0, -1.0, -(DT - 0.5 * DT * DT))

    def test_analytic_rejects_no_impact(self):
        with pytest.raises(ValueError):
            task1_analytic(1.0, 2.0, 0.0)
        with pytest.raises(ValueError):
            task1_analytic(5.0, -1.0, 0.0)

    @pytest.mark.parametrize("name", TOI_MODELS)
    def test_gradients_independent_of_radius(self, name):
        keys = [("pos", 0, 1), ("vel", 0, 1), ("u", 0, 1)]
        grads = []
        for r in (0.1, 0.2, 0.5):
            t = make_task1(radius=r)
            _, g, _ = loss_and_grad(t, default_model(name, t), keys)
            grads.append(g)
        for g in grads[1:]:
            for a, b in zip(g, grads[0]):
                assert abs(a - b) <= 1e-6

    def test_deterministic(self):
        t = make_task1()
        for name in MODEL_NAMES:
            m = default_model(name, t)
            a = loss_and_grad(t, m, [("vel", 0, 1)])
            b = loss_and_grad(t, m, [("vel", 0, 1)])
            assert a[0] == b[0] and a[1] == b[1]
            assert a[2].trajectory == b[2].trajectory


class TestTask3Oracle:
    def test_reference_values(self):
        o = task3_oracle()
        assert o.grad_p0[0].x == pytest.approx(-0.39866853, abs=1e-6)
        assert o.grad_p0[1].x == pytest.approx(-0.3212531, abs=1e-6)
        assert o.grad_v0[0].x == pytest.approx(-0.49779078, abs=1e-6)
        assert o.grad_v0[1].x == pytest.approx(-0.22213092, abs=1e-6)
        assert o.grad_u0.x == pytest.approx(-0.0008888851, abs=1e-8)
        assert o.grad_p0[0].x == o.grad_p0[0].y

    def test_three_way_agreement(self):
        # tape through the oracle expression, central differences, and an
        # independent hand derivation of the collision-time sensitivities
        o = task3_oracle()
        x0, v0, u0 = [-2 * SQ2, -SQ2], [0.0, 0.0], 3 * SQ2
        h = 1e-6

        def f(x1, x2, v1, v2, u):
            return task3_loss_1d((x1, x2), (v1, v2), u)[0]

        base = [x0[0], x0[1], v0[0], v0[1], u0]
        fd = []
        for i in range(5):
            up, dn = list(base), list(base)
            up[i] += h
            dn[i] -= h
            fd.append((f(*up) - f(*dn)) / (2 * h))
        tape_vals = o.grad_1d["x"] + o.grad_1d["v"] + [o.grad_1d["u"]]
        for a, b in zip(tape_vals, fd):
            assert abs(a - b) <= 1e-6 * max(1.0, abs(a))

        # hand derivation: x2T = x2 + v2 s + (v1 + u_c (s - dt))(T - s) with
        # s solving the first-contact condition; l = x2T^2 + eps u0 dt
        u_c, dt, T, eps = 3 * SQ2, DT, 1.0, 0.1
        loss, s = task3_loss_1d(x0, v0, u0)
        v1s = u0 * dt + u_c * (s - dt)
        x2T = x0[1] + v1s * (T - s)
        assert loss == pytest.approx(x2T**2 + eps * u0 * dt, rel=1e-14)
        # the gap closes at s with closing speed v1s, so ds/dx1 = -1 / v1s
        ds_dx1 = -1.0 / v1s
        dx2T_dx1 = (u_c * (T - s) - v1s) * ds_dx1
        assert 2 * x2T * dx2T_dx1 == pytest.approx(o.grad_1d["x"][0], rel=1e-9)

    def test_no_collision_raises(self):
        with pytest.raises(ValueError):
            task3_oracle(v0=(-50.0, 0.0), u0=-50.0, u_c=-1.0)

    def test_symmetry_of_simulated_gradients(self):
        t = make_task3()
        keys = [("pos", 0, 0), ("pos", 0, 1), ("pos", 1, 0), ("pos", 1, 1),
                ("vel", 0, 0), ("vel", 0, 1), ("vel", 1, 0), ("vel", 1, 1),
                ("u", 0, 0), ("u", 0, 1)]
        for name in MODEL_NAMES:
            _, g, _ = loss_and_grad(t, default_model(name, t), keys)
            for i in range(0, len(g), 2):
                assert abs(g[i] - g[i + 1]) <= 1e-10, (name, keys[i])

    @pytest.mark.parametrize("name", TOI_MODELS)
    def test_simulated_loss_near_oracle(self, name):
        t = make_task3()
        res = simulate(t, default_model(name, t))
        o = task3_oracle()
        # the oracle keeps only the first step's control penalty; add the rest
        running = 0.1 * 18.0 * DT * (t.steps_N - 1) + 0.1 * 18.0 * DT - 0.1 * 3 * SQ2 * DT
        assert res.loss_value == pytest.approx(o.loss + running, rel=2e-3)


class TestOptimalControl:
    def test_loss(self):
        oc = task3_optimal_control()
        assert round(oc.loss, 4) == 1.3965
        assert 0.0 < oc.collision_time < 1.0

    def test_profile_is_consistent(self):
        # integrate the affine control numerically and rebuild the loss
        oc = task3_optimal_control()
        s, n = oc.collision_time, 200000
        h = s / n
        x, v, cost = 0.0, 0.0, 0.0
        for i in range(n):
            u = oc.magnitude((i + 0.5) * h)
            x += v * h + 0.5 * u * h * h
            v += u * h
            cost += u * u * h
        gap = SQ2 - 0.4
        assert x == pytest.approx(gap, rel=1e-6)
        assert v == pytest.approx(oc.impact_speed, rel=1e-6)
        x2T = -SQ2 + v * (1.0 - s)
        assert x2T**2 + 0.1 * cost == pytest.approx(oc.loss, rel=1e-6)
        assert oc.magnitude(s + 0.01) == 0.0
        # linear decrease before the collision
        assert oc.magnitude(0.0) > oc.magnitude(s / 2) > oc.magnitude(s * 0.999)

    def test_local_optimality(self):
        oc = task3_optimal_control()
        base = oc.loss
        # perturbing the impact speed at fixed s raises the loss
        s = oc.collision_time
        gap = SQ2 - 0.4
        for dv in (-0.05, 0.05):
            V = oc.impact_speed + dv
            # cheapest control reaching (gap, V) at s: affine, cost from its Gram matrix
            a_mat = [[s, s * s / 2], [s * s / 2, s**3 / 3]]
            det = a_mat[0][0] * a_mat[1][1] - a_mat[0][1] ** 2
            inv = [[a_mat[1][1] / det, -a_mat[0][1] / det], [-a_mat[1][0] / det, a_mat[0][0] / det]]
            w = [V, gap]
            cost = sum(w[i] * inv[i][j] * w[j] for i in range(2) for j in range(2))
            loss = (-SQ2 + V * (1 - s)) ** 2 + 0.1 * cost
            assert loss > base


class TestSimulate:
    def test_unstable_input(self):
        t = make_task2().with_ball(0, vel=Vec2(math.inf, 0.0))
        with pytest.raises(SimulationUnstable):
            loss_and_grad(t, ImpulseLCP(), [("vel", 0, 0)])
        with pytest.raises(SimulationUnstable):
            simulate(t, ImpulseLCP())

    def test_tape_inputs_cover_everything(self):
        t = make_task3()
        tape = Tape()
        res = simulate(t, ImpulseLCP(), tape)
        assert len(res.inputs.controls) == 480
        g = tape.backward(res.loss)
        assert g[res.inputs.lookup(("u", 400, 0))] != 0.0

    def test_trajectory_recorded(self):
        t = make_task1()
        res = simulate(t, ImpulseLCP())
        assert len(res.trajectory) == t.steps_N + 1
        assert res.trajectory[0] == [(-1.0, 1.0)]
        assert simulate(t, ImpulseLCP(), record_trajectory=False).trajectory == []

    def test_compliant_stiff_has_small_overlap(self):
        t = make_task3()
        res = simulate(t, Compliant(k_n=1e5))
        n_steps = len({c.step for c in res.contacts})
        assert 0 < n_steps < 10
