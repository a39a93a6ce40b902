import math

import numpy as np
import pytest

from bacpole.cartpole import (
    DISTANCE_COST,
    FAILURE_DRIVEN,
    Bounds,
    CartPoleState,
    PhysicsParams,
    accelerations,
    denormalize_delta,
    failure_reason,
    is_failure,
    normalize,
    random_initial_state,
    reinforcement,
    step,
)
from bacpole.errors import ConfigError

PARAMS = PhysicsParams()  # m_c 1.0, m_p 0.1, L 1.0, g 9.8, 10 N, dt 0.02
BOUNDS = Bounds()  # 2.4 m, 12 deg
REST = CartPoleState(0.0, 0.0, 0.0, 0.0)


class TestAccelerations:
    def test_equilibrium(self):
        assert accelerations(REST, 0.0, PARAMS) == (0.0, 0.0)

    def test_unit_force_point_values(self):
        # exact rationals 40/41 and -30/41 for these parameters
        x_ddot, theta_ddot = accelerations(REST, 1.0, PARAMS)
        assert x_ddot == pytest.approx(40.0 / 41.0, abs=1e-12)
        assert theta_ddot == pytest.approx(-30.0 / 41.0, abs=1e-12)
        assert x_ddot == pytest.approx(0.975610, abs=1e-6)
        assert theta_ddot == pytest.approx(-0.731707, abs=1e-6)

    def test_balanced_angle_identity(self):
        # force that zeroes the angular acceleration at a held angle makes
        # the cart accelerate at exactly g * tan(angle)
        g, total = PARAMS.gravity, PARAMS.m_c + PARAMS.m_p
        for theta_b in np.linspace(-BOUNDS.theta_r, BOUNDS.theta_r, 50, endpoint=False)[1:]:
            force = g * total * math.tan(theta_b)
            state = CartPoleState(0.0, 0.0, theta_b, 0.0)
            x_ddot, theta_ddot = accelerations(state, force, PARAMS)
            assert abs(theta_ddot) < 1e-9
            assert abs(x_ddot - g * math.tan(theta_b)) < 1e-9


class TestStep:
    def test_zero_everything_stays(self):
        assert step(REST, 0.0, PARAMS) == REST

    def test_one_euler_step_from_rest(self):
        # positions keep the old (zero) velocities; velocities pick up dt * accel
        nxt = step(REST, 0.1, PARAMS)  # 0.1 * 10 N = 1 N
        assert nxt.x == 0.0
        assert nxt.theta == 0.0
        assert nxt.x_dot == pytest.approx(0.02 * 40.0 / 41.0, abs=1e-15)
        assert nxt.theta_dot == pytest.approx(0.02 * -30.0 / 41.0, abs=1e-15)

    def test_force_clamped_at_scale(self):
        assert step(REST, 3.0, PARAMS) == step(REST, 1.0, PARAMS)
        assert step(REST, -7.5, PARAMS) == step(REST, -1.0, PARAMS)

    def test_inverted_pendulum_diverges(self):
        state = CartPoleState(0.0, 0.0, 0.01, 0.0)
        thetas = [state.theta]
        for _ in range(10):
            state = step(state, 0.0, PARAMS)
            thetas.append(state.theta)
        assert all(b >= a for a, b in zip(thetas, thetas[1:]))
        assert thetas[-1] > thetas[0]

    def test_halved_dt_converges_to_full_step(self):
        state = CartPoleState(0.1, -0.2, 0.05, 0.3)

        def err(dt):
            full = step(state, 0.5, PhysicsParams(dt=dt))
            half = PhysicsParams(dt=dt / 2)
            two = step(step(state, 0.5, half), 0.5, half)
            return np.linalg.norm(full.as_array() - two.as_array())

        # halving-vs-full difference shrinks ~quadratically with dt
        assert err(0.01) < err(0.02) < err(0.04)
        assert err(0.01) < 0.3 * err(0.02)


class TestFailure:
    def test_zero_state_ok(self):
        assert not is_failure(REST, BOUNDS)
        assert failure_reason(REST, BOUNDS) is None

    def test_x_beyond_track(self):
        state = CartPoleState(2.5, 0, 0, 0)
        assert is_failure(state, BOUNDS)
        assert failure_reason(state, BOUNDS) == "failure-x"

    def test_theta_beyond_range(self):
        state = CartPoleState(0, 0, math.radians(12.5), 0)
        assert is_failure(state, BOUNDS)
        assert failure_reason(state, BOUNDS) == "failure-theta"

    def test_boundary_is_not_failure(self):
        assert not is_failure(CartPoleState(2.4, 0, 0, 0), BOUNDS)


class TestReinforcement:
    def test_centered_distance_cost_zero(self):
        assert reinforcement(REST, BOUNDS, DISTANCE_COST) == 0.0

    def test_unit_normalized_corner(self):
        state = CartPoleState(BOUNDS.x_r, 0.0, BOUNDS.theta_r, 0.0)
        assert reinforcement(state, BOUNDS, DISTANCE_COST) == pytest.approx(math.sqrt(2.0), abs=1e-12)

    def test_failure_driven(self):
        assert reinforcement(CartPoleState(1.0, 5.0, 0.1, -3.0), BOUNDS, FAILURE_DRIVEN) == 0.0
        assert reinforcement(CartPoleState(2.5, 0, 0, 0), BOUNDS, FAILURE_DRIVEN) == -1.0

    def test_unknown_mode(self):
        with pytest.raises(ConfigError):
            reinforcement(REST, BOUNDS, "Bogus")


class TestInitialState:
    def test_zero_fraction_is_rest(self):
        state = random_initial_state(np.random.default_rng(0), BOUNDS, 0.0)
        assert state == REST

    def test_seed_determinism(self):
        a = random_initial_state(np.random.default_rng(33), BOUNDS, 0.5)
        b = random_initial_state(np.random.default_rng(33), BOUNDS, 0.5)
        assert a == b

    def test_sampler_bounds_statistically(self):
        rng = np.random.default_rng(99)
        xs, thetas = [], []
        for _ in range(10000):
            s = random_initial_state(rng, BOUNDS, 0.5)
            xs.append(abs(s.x))
            thetas.append(abs(s.theta))
            assert abs(s.x_dot) <= 0.5
            assert abs(s.theta_dot) <= 0.5
        assert max(xs) <= 1.2
        assert max(thetas) <= math.radians(6.0)
        # and the sampler actually uses the range
        assert max(xs) > 1.0
        assert max(thetas) > math.radians(5.0)

    def test_fraction_validated(self):
        with pytest.raises(ConfigError):
            random_initial_state(np.random.default_rng(0), BOUNDS, 1.5)


class TestNormalization:
    def test_normalize_bounds_to_unit(self):
        state = CartPoleState(BOUNDS.x_r, 1.0, BOUNDS.theta_r, -1.0)
        assert np.allclose(normalize(state, BOUNDS), [1.0, 1.0, 1.0, -1.0])

    def test_delta_roundtrip(self):
        rng = np.random.default_rng(12)
        delta = rng.normal(size=4)
        state_a = CartPoleState(0.5, 0.1, 0.05, -0.2)
        state_b = step(state_a, 0.3, PARAMS)
        norm_delta = normalize(state_b, BOUNDS) - normalize(state_a, BOUNDS)
        assert np.allclose(denormalize_delta(norm_delta, BOUNDS), state_b.as_array() - state_a.as_array())
        assert np.allclose(denormalize_delta(normalize(state_a, BOUNDS), BOUNDS), state_a.as_array())
        assert delta.shape == denormalize_delta(delta, BOUNDS).shape
