"""Tests for flows, trajectories, numeric symmetry checks and rectifying charts."""

import json
import math

import numpy as np
import pytest

import nullforms
from numerics import (
    ChartSingularError,
    ControlSchedule,
    DivisionNearZeroError,
    FlowBlowUpError,
    NotCommutingError,
    NotIndependentError,
    TooShortError,
    Trajectory,
    build_chart,
    chart_invariant,
    constraint_residual,
    flat_derivative,
    flow_batch,
    flow_pushforward_residual,
    integrate_flow,
    simulate,
)
from symmetry import SymmetryBasis
from vectorfield import ControlSystem, FeedbackTransform, VectorField, apply_feedback

ROTATION = VectorField('y', '-x', -1)
HEADING = VectorField('cos(w)', 'sin(w)', 1)

NULL_FORMS = [
    ('E', nullforms.sigma_e()),
    ('H', nullforms.sigma_h()),
    ('P', nullforms.sigma_p()),
]


class TestFlow:

    def test_constant_field(self):
        q, jac = integrate_flow(VectorField(1, 0, 0), (0.0, 0.0, 0.0), 2.0)
        np.testing.assert_allclose(q, (2.0, 0.0, 0.0), atol=1e-12)
        np.testing.assert_allclose(jac, np.eye(3), atol=1e-12)

    def test_rotation(self):
        q, jac = integrate_flow(ROTATION, (1.0, 0.0, 0.0), math.pi / 2)
        np.testing.assert_allclose(q, (0.0, -1.0, -math.pi / 2), atol=1e-8)
        expected = np.array([[0.0, 1.0, 0.0], [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        np.testing.assert_allclose(jac, expected, atol=1e-8)

    def test_linear_growth(self):
        q, jac = integrate_flow(VectorField(0, 0, 'w'), (0.0, 0.0, 1.0), 1.0)
        np.testing.assert_allclose(q, (0.0, 0.0, math.e), atol=1e-8)
        np.testing.assert_allclose(jac, np.diag([1.0, 1.0, math.e]), atol=1e-8)

    def test_zero_time(self):
        q, jac = integrate_flow(ROTATION, (0.3, 0.2, 0.1), 0.0)
        assert q == (0.3, 0.2, 0.1)
        np.testing.assert_array_equal(jac, np.eye(3))

    def test_rk4_order(self):
        exact = np.array([math.sin(2.0), 1.0 - math.cos(2.0), 2.0])
        errors = [np.linalg.norm(np.array(integrate_flow(HEADING, (0.0, 0.0, 0.0), 2.0, step=h)[0]) - exact)
                  for h in (0.25, 0.125)]
        assert 8.0 <= errors[0] / errors[1] <= 32.0

    @pytest.mark.parametrize('v', [ROTATION, HEADING, VectorField('1/2*y', 'sin(w)', 'cos(w)')])
    def test_group_law(self, v, np_rng):
        step = 1e-2
        for _ in range(3):
            p = tuple(np_rng.uniform(-1, 1, size=3))
            s, t = np_rng.uniform(0.1, 0.5, size=2)
            q, _ = integrate_flow(v, p, s, step)
            q, _ = integrate_flow(v, q, t, step)
            r, _ = integrate_flow(v, p, s + t, step)
            np.testing.assert_allclose(q, r, atol=10 * step ** 4)

    def test_jacobian_matches_finite_differences(self, np_rng):
        v = VectorField('y*cos(w)', 'x - w^2', '1/2*sin(w) + x*y')
        h = 1e-5
        for _ in range(3):
            p = np_rng.uniform(-0.5, 0.5, size=3)
            _, jac = integrate_flow(v, p, 0.5)
            numeric = np.empty((3, 3))
            for j in range(3):
                e = np.zeros(3)
                e[j] = h
                up, _ = integrate_flow(v, p + e, 0.5)
                down, _ = integrate_flow(v, p - e, 0.5)
                numeric[:, j] = (np.array(up) - np.array(down)) / (2 * h)
            np.testing.assert_allclose(jac, numeric, atol=1e-6)

    def test_batch_matches_single_points(self):
        points = np.array([[0.0, 0.0, 0.0], [1.0, -1.0, 0.5], [0.2, 0.3, -0.4]])
        times = np.array([0.5, -0.25, 1.0])
        states, jacs = flow_batch(ROTATION, points, times)
        for p, t, q, jac in zip(points, times, states, jacs):
            single, single_jac = integrate_flow(ROTATION, p, t)
            np.testing.assert_allclose(q, single, atol=1e-10)
            np.testing.assert_allclose(jac, single_jac, atol=1e-10)

    def test_blow_up(self):
        with pytest.raises(FlowBlowUpError):
            integrate_flow(VectorField(0, 0, 'w^2'), (0.0, 0.0, 1.0), 2.0)

    def test_step_must_be_positive(self):
        with pytest.raises(ValueError):
            integrate_flow(ROTATION, (0.0, 0.0, 0.0), 1.0, step=0)


class TestFlatDerivative:

    def test_values(self):
        w = np.array([0.0, 0.5, -0.5])
        np.testing.assert_allclose(flat_derivative(0, w), [0.0, math.exp(-4), math.exp(-4)])
        np.testing.assert_allclose(flat_derivative(1, w), [0.0, 16 * math.exp(-4), -16 * math.exp(-4)])

    @pytest.mark.parametrize('k', [1, 2, 3])
    def test_matches_finite_differences(self, k):
        w = np.array([0.4, 0.7, -0.9])
        h = 1e-6
        numeric = (flat_derivative(k - 1, w + h, 2) - flat_derivative(k - 1, w - h, 2)) / (2 * h)
        np.testing.assert_allclose(flat_derivative(k, w, 2), numeric, rtol=1e-5)

    def test_vanishes_near_zero(self):
        assert not np.any(flat_derivative(8, np.array([0.0, 1e-3, -1e-3])))


class TestSchedules:

    def test_parse_constant(self):
        u = ControlSchedule.parse('1')
        assert u(0.0) == 1.0 and u(100.0) == 1.0

    def test_parse_pieces(self):
        u = ControlSchedule.parse('0:1,3.14:-1')
        assert u(1.0) == 1.0
        assert u(3.14) == -1.0
        assert u(10.0) == -1.0
        assert str(u) == '0:1,3.14:-1'

    @pytest.mark.parametrize('text', ['1:1', 'a', '0:1,0:2', '0:1,2'])
    def test_invalid(self, text):
        with pytest.raises(ValueError):
            ControlSchedule.parse(text)


class TestSimulate:

    def test_straight_line(self, sigma_e):
        tr = simulate(sigma_e, 0.0, (0.0, 0.0, 0.0), 1.0)
        np.testing.assert_allclose(tr.endpoint, (1.0, 0.0, 0.0), atol=1e-12)
        assert tr.times[0] == 0.0 and tr.times[-1] == 1.0

    def test_dubins_circle(self, sigma_e):
        tr = simulate(sigma_e, ControlSchedule.constant(1.0), (0.0, 0.0, 0.0), 2 * math.pi)
        np.testing.assert_allclose(tr.endpoint, (0.0, 0.0, 2 * math.pi), atol=1e-6)

    def test_parabolic_constant_heading(self, sigma_p):
        tr = simulate(sigma_p, 0.0, (0.0, 0.0, 2.0), 1.0)
        np.testing.assert_allclose(tr.endpoint, (4.0, 2.0, 2.0), atol=1e-12)

    def test_switching_schedule(self, sigma_e):
        tr = simulate(sigma_e, ControlSchedule.parse('0:1,1:-1'), (0.0, 0.0, 0.0), 2.0)
        assert tr.endpoint[2] == pytest.approx(0.0, abs=1e-12)
        assert tr.controls[0] == 1.0 and tr.controls[-1] == -1.0

    def test_csv_output(self, sigma_e):
        text = simulate(sigma_e, 1.0, (0.0, 0.0, 0.0), 0.01, step=0.005).to_csv()
        lines = text.strip().splitlines()
        assert lines[0] == 't,x,y,w,u'
        assert len(lines) == 4

    def test_json_output(self, sigma_e):
        tr = simulate(sigma_e, 1.0, (0.0, 0.0, 0.0), 0.01, step=0.005)
        rows = json.loads(tr.to_json())
        assert len(rows) == 3
        assert set(rows[0]) == {'t', 'x', 'y', 'w', 'u'}
        assert rows[0]['t'] == 0.0 and rows[-1]['t'] == pytest.approx(0.01)
        assert rows[-1]['w'] == pytest.approx(0.01)
        assert [r['u'] for r in rows] == [1.0, 1.0, 1.0]

    def test_trajectory_validation(self):
        with pytest.raises(ValueError):
            Trajectory([0.0, 0.0], np.zeros((2, 3)), [0.0, 0.0])
        with pytest.raises(ValueError):
            Trajectory([0.0, 1.0], np.zeros((3, 3)), [0.0, 0.0])


class TestConstraintResidual:

    @pytest.mark.parametrize('kind,system', NULL_FORMS)
    def test_random_schedules(self, kind, system, np_rng):
        for _ in range(3):
            schedule = ControlSchedule.random(np_rng, 2.0)
            tr = simulate(system, schedule, (0.0, 0.0, 0.0), 2.0)
            assert constraint_residual(tr, kind) < 1e-6

    @pytest.mark.slow
    @pytest.mark.parametrize('kind,system', NULL_FORMS)
    def test_fifty_random_schedules(self, kind, system, np_rng):
        for _ in range(50):
            schedule = ControlSchedule.random(np_rng, 2.0, pieces=int(np_rng.integers(1, 6)))
            tr = simulate(system, schedule, (0.0, 0.0, 0.0), 2.0)
            assert constraint_residual(tr, kind) < 1e-6

    def test_mismatch_is_detected(self, sigma_e):
        tr = simulate(sigma_e, 1.0, (0.0, 0.0, 0.0), 2.0)
        assert constraint_residual(tr, 'H') >= 1.0 - 1e-3

    def test_too_short(self):
        tr = Trajectory([0.0, 1.0], np.zeros((2, 3)), [0.0, 0.0])
        with pytest.raises(TooShortError):
            constraint_residual(tr, 'E')

    def test_unknown_kind(self, sigma_e):
        with pytest.raises(ValueError):
            constraint_residual(simulate(sigma_e, 0.0, (0.0, 0.0, 0.0), 0.01), 'Q')


class TestPushforwardResidual:

    def test_translation_symmetry(self, sigma_e, np_rng):
        for _ in range(3):
            p = tuple(np_rng.uniform(-1, 1, size=3))
            assert flow_pushforward_residual(VectorField(1, 0, 0), sigma_e, p, 0.5) < 1e-8

    def test_rotation_symmetry(self, sigma_e):
        assert flow_pushforward_residual(ROTATION, sigma_e, (1.0, 1.0, 0.0), 1.0) < 1e-6

    def test_non_symmetry(self, sigma_e):
        assert flow_pushforward_residual(VectorField('x', 0, 0), sigma_e, (1.0, 0.0, 0.0), 0.5) > 1e-2

    @pytest.mark.parametrize('kind,system', NULL_FORMS)
    def test_generator_lists(self, kind, system, np_rng):
        for _ in range(5):
            p = tuple(np_rng.uniform(-1, 1, size=3))
            for t in (0.1, 0.5, 1.0):
                for v in nullforms.symmetry_generators(kind):
                    assert flow_pushforward_residual(v, system, p, t) < 1e-6


def with_generators(system, kind):
    fields = {f'v{i + 1}': v for i, v in enumerate(nullforms.symmetry_generators(kind))}
    return ControlSystem(system.f, system.g, system.base, system.name, system.kind, fields)


class TestChart:

    def test_dubins_identity_chart(self, sigma_e):
        chart = build_chart(sigma_e, nullforms.symmetry_generators('E'), (0.0, 0.0, 0.0))
        np.testing.assert_allclose(chart.points, chart.grid, atol=1e-12)
        np.testing.assert_allclose(chart.jacobians, np.broadcast_to(np.eye(3), chart.jacobians.shape), atol=1e-12)
        assert chart.residuals['v1'] < 1e-6
        assert chart.residuals['v2'] < 1e-6
        assert chart.residuals['g_ratio_spread'] < 1e-6
        assert chart.algebra_tag == 'EllipticE2'

    def test_dubins_invariant(self, sigma_e):
        chart = build_chart(sigma_e, nullforms.symmetry_generators('E'), (0.0, 0.0, 0.0))
        value, spread = chart_invariant(sigma_e, chart, 'E')
        assert value == pytest.approx(1.0, abs=1e-12)
        assert spread < 1e-12

    def test_hyperbolic_invariant(self):
        system = nullforms.sigma_h()
        chart = build_chart(system, nullforms.symmetry_generators('H'), (0.0, 0.0, 0.0))
        value, spread = chart_invariant(system, chart, 'H')
        assert value == pytest.approx(1.0, abs=1e-10)
        assert spread < 1e-10

    def test_parabolic_invariant(self, sigma_p):
        chart = build_chart(sigma_p, nullforms.symmetry_generators('P'), (0.0, 0.0, 1.0))
        assert chart.residuals['g_ratio_spread'] < 1e-6
        value, spread = chart_invariant(sigma_p, chart, 'P')
        assert value == pytest.approx(1.0, abs=1e-10)
        assert spread < 1e-10

    def test_parabolic_invariant_at_equilibrium(self, sigma_p0):
        chart = build_chart(sigma_p0, nullforms.symmetry_generators('P'), (0.0, 0.0, 0.0))
        with pytest.raises(DivisionNearZeroError):
            chart_invariant(sigma_p0, chart, 'P')

    def test_scrambled_dubins(self, sigma_e):
        t = FeedbackTransform([[1, 2, 0], [0, 1, 0], [0, 0, 1]], [0, 0, 1], '1 + w^2', 3)
        scrambled = apply_feedback(with_generators(sigma_e, 'E'), t)
        basis = SymmetryBasis(scrambled.fields.values(), source='supplied')
        chart = build_chart(scrambled, basis, scrambled.base)
        assert max(chart.residuals['v1'], chart.residuals['v2'], chart.residuals['g_ratio_spread']) < 1e-6
        value, spread = chart_invariant(scrambled, chart, 'E')
        assert value == pytest.approx(1.0, abs=1e-9)
        assert spread < 1e-5

    def test_scrambled_hyperbolic(self):
        t = FeedbackTransform([[0, 1, 0], [1, 1, 0], [0, 0, -1]], [1, 0, 0], 'x*w', 2)
        scrambled = apply_feedback(with_generators(nullforms.sigma_h(), 'H'), t)
        basis = SymmetryBasis(scrambled.fields.values(), source='supplied')
        chart = build_chart(scrambled, basis, scrambled.base)
        assert chart.residuals['g_ratio_spread'] < 1e-6
        _, spread = chart_invariant(scrambled, chart, 'H')
        assert spread < 1e-5

    def test_scrambled_parabolic(self, sigma_p):
        # w is shifted away from the equilibrium w = 0 of the unscrambled system.
        t = FeedbackTransform([[1, 0, 0], [0, 1, 0], [0, 0, 1]], [2, -1, 3], 'x + w^2', 1)
        scrambled = apply_feedback(with_generators(sigma_p, 'P'), t)
        assert scrambled.base[2] == pytest.approx(4.0)
        basis = SymmetryBasis(scrambled.fields.values(), source='supplied')
        chart = build_chart(scrambled, basis, scrambled.base)
        assert max(chart.residuals['v1'], chart.residuals['v2'], chart.residuals['g_ratio_spread']) < 1e-6
        value, spread = chart_invariant(scrambled, chart, 'P')
        assert value == pytest.approx(1.0, abs=1e-9)
        assert spread < 1e-9

    def test_report(self, sigma_e):
        report = build_chart(sigma_e, nullforms.symmetry_generators('E'), (0.0, 0.0, 0.0), samples=3).report()
        assert report['algebra'] == 'EllipticE2'
        assert report['min_abs_det'] == pytest.approx(1.0)
        assert set(report['residuals']) == {'v1', 'v2', 'g_ratio_spread', 'g_c_min'}
        assert len(report['grid']) == 27
        for row in report['grid']:
            assert (row['x'], row['y'], row['w']) == pytest.approx((row['a'], row['b'], row['c']), abs=1e-12)
            assert row['det'] == pytest.approx(1.0)
        json.dumps(report)

    def test_no_abelian_ideal(self, sigma_e):
        basis = SymmetryBasis([VectorField(1, 0, 0), VectorField(0, 1, 0), VectorField(0, 'x', 0)])
        with pytest.raises(NotCommutingError):
            build_chart(sigma_e, basis, (0.0, 0.0, 0.0))

    def test_ideal_along_g(self, sigma_e):
        basis = SymmetryBasis([VectorField(1, 0, 0), VectorField(0, 0, 1), VectorField('-w', 0, 'x')])
        with pytest.raises(NotIndependentError):
            build_chart(sigma_e, basis, (0.0, 0.0, 0.0))

    def test_singular_chart(self):
        system = ControlSystem([0, 0, 0], ['1 - w', 0, 1], (0.0, 0.0, 0.0))
        basis = SymmetryBasis([VectorField(0, 1, 0), VectorField(0, 0, 1), VectorField(0, '-w', 'y')])
        with pytest.raises(ChartSingularError):
            build_chart(system, basis, (0.0, 0.0, 0.0), box=2.0)
