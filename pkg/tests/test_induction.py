import math

import numpy as np
import pytest

from bacpole.bac import BacAgent, INDIRECT, NoiseParams
from bacpole.errors import ConfigError
from bacpole.ffnet import TrainingHyper, forward
from bacpole.induction import (
    ACTION_BASED,
    ANALYTIC,
    RIParams,
    induction_gain,
    influence_error,
    plan_sensitivity,
    ri_weight_update,
    train_action_step_ri,
)

RI = RIParams()  # k1 = 0.35, k2 = 0.14, plan input 4


def ll_agent(seed=0, plan_dim=1, sigma=0.0):
    return BacAgent.build(
        INDIRECT,
        rng=np.random.default_rng(seed),
        plan_dim=plan_dim,
        noise=NoiseParams(sigma),
        init_scale=0.8,
    )


class TestInfluenceError:
    def test_zero_sensitivity_is_minus_k1(self):
        assert influence_error(np.zeros(1), RI) == pytest.approx(-0.35, abs=1e-15)

    def test_large_sensitivity_vanishes_from_below(self):
        val = influence_error(np.array([100.0]), RI)
        assert -1e-12 < val < 0.0 or val == 0.0

    def test_at_k2_point_value(self):
        assert influence_error(np.array([0.14]), RI) == pytest.approx(-0.35 * math.exp(-1.0), abs=1e-12)
        assert influence_error(np.array([0.14]), RI) == pytest.approx(-0.1287578044100048, abs=1e-12)

    def test_bounded_and_monotone_in_magnitude(self):
        grid = np.linspace(0.0, 2.0, 400)
        values = [influence_error(np.array([d]), RI) for d in grid]
        assert all(-RI.k1 <= v < 0.0 for v in values[:-1])
        assert all(b > a for a, b in zip(values, values[1:]))
        # symmetric in the sign of delta
        assert influence_error(np.array([-0.2]), RI) == influence_error(np.array([0.2]), RI)

    def test_multiple_plan_inputs_average(self):
        ri = RIParams(plan_input_indices=(4, 5))
        assert influence_error(np.zeros(2), ri) == pytest.approx(-0.35, abs=1e-15)


class TestRiWeightUpdate:
    def test_zero_sensitivity_reduces_to_standard_term(self):
        step = ri_weight_update(w_ji=0.1, delta_j=0.7, y_i=0.25, delta_i=0.0, hyper=TrainingHyper(0.5), ri=RI)
        assert step == pytest.approx(0.5 * 0.7 * 0.25, abs=1e-15)

    def test_zero_hidden_delta_zero_increment(self):
        step = ri_weight_update(0.1, delta_j=0.0, y_i=0.9, delta_i=0.2, hyper=TrainingHyper(1.0), ri=RI)
        assert step == 0.0

    def test_published_point_value(self):
        # k1 k2 delta_i delta_j e^{-1} with delta_i = k2, delta_j = 1, Y = 0
        step = ri_weight_update(0.0, delta_j=1.0, y_i=0.0, delta_i=0.14, hyper=TrainingHyper(1.0), ri=RI)
        expected = 0.35 * 0.14 * 0.14 * math.exp(-1.0)
        assert step == pytest.approx(expected, abs=1e-9)
        assert step == pytest.approx(0.0025236529664360947, abs=1e-12)

    def test_momentum_folds_previous_velocity(self):
        hyper = TrainingHyper(1.0, momentum_coeff=0.5)
        step = ri_weight_update(0.0, 1.0, 0.0, 0.0, hyper, RI, velocity=0.4)
        assert step == pytest.approx(0.2, abs=1e-15)


class TestInductionGain:
    def test_flat_peak_shape(self):
        # zero at 0, maximal at k2/sqrt(2), decaying toward zero afterwards
        grid = np.linspace(0.0, 1.5, 20001)
        magnitudes = np.abs([induction_gain(d, RI) for d in grid])
        assert magnitudes[0] == 0.0
        peak = grid[np.argmax(magnitudes)]
        assert peak == pytest.approx(RI.k2 / math.sqrt(2.0), abs=2e-4)
        assert magnitudes[-1] < 1e-6
        # odd in delta: induction pushes away from zero in either direction
        assert induction_gain(-0.1, RI) == -induction_gain(0.1, RI)

    def test_analytic_variant_constants(self):
        ri = RIParams(variant=ANALYTIC)
        d = 0.1
        expected = (2.0 * 0.35 / (1 * 0.14**2)) * d * math.exp(-(d**2) / 0.14**2)
        assert induction_gain(d, ri) == pytest.approx(expected, rel=1e-12)

    def test_params_validated(self):
        with pytest.raises(ConfigError):
            RIParams(k1=0.0)
        with pytest.raises(ConfigError):
            RIParams(plan_input_indices=())
        with pytest.raises(ConfigError):
            RIParams(variant="bogus")


class TestPlanSensitivity:
    def test_zero_critic_gives_zero_delta(self):
        agent = ll_agent(seed=1)
        for f in ("hidden_weights", "hidden_bias", "output_weights", "output_bias"):
            getattr(agent.critic_net, f)[...] = 0.0
        state, plan = np.zeros(4), np.array([0.2])
        cache = forward(agent.action_net, np.concatenate([state, plan]))
        delta, _, _ = plan_sensitivity(agent, state, plan, cache, RI)
        assert np.all(delta == 0.0)

    def test_disconnected_plan_input_gives_zero_delta(self):
        agent = ll_agent(seed=2)
        agent.action_net.hidden_weights[:, 4] = 0.0
        state, plan = np.array([0.1, 0.0, -0.1, 0.2]), np.array([0.25])
        cache = forward(agent.action_net, np.concatenate([state, plan]))
        delta, _, _ = plan_sensitivity(agent, state, plan, cache, RI)
        assert np.all(delta == 0.0)

    def test_matches_finite_difference_composition(self):
        # perturb the plan as seen by the action network only; the critic's
        # own plan input stays fixed
        rng = np.random.default_rng(42)
        for trial in range(50):
            agent = ll_agent(seed=100 + trial)
            state = rng.normal(0.0, 0.5, 4)
            plan = rng.uniform(-0.5, 0.5, 1)
            cache = forward(agent.action_net, np.concatenate([state, plan]))
            delta, _, _ = plan_sensitivity(agent, state, plan, cache, RI)

            def composed(y):
                act = forward(agent.action_net, np.concatenate([state, y])).output
                nxt = state + forward(agent.model.net, np.concatenate([state, act])).output
                return float(forward(agent.critic_net, np.concatenate([nxt, plan])).output[0])

            h = 1e-5
            fd = (composed(plan + h) - composed(plan - h)) / (2 * h)
            scale = max(abs(fd), abs(float(delta[0])), 1e-8)
            assert abs(float(delta[0]) - fd) / scale < 1e-3


class TestRiTrainingStep:
    def test_non_plan_weights_match_standard_update(self):
        # RI must change only hidden -> plan-input connections relative to
        # the standard ascent update for identical caches
        ri_agent, std_agent = ll_agent(seed=5), ll_agent(seed=5)
        state, plan = np.array([0.1, -0.2, 0.05, 0.0]), np.array([0.2])
        u = np.concatenate([state, plan])
        cache_ri = forward(ri_agent.action_net, u)
        cache_std = forward(std_agent.action_net, u)
        train_action_step_ri(ri_agent, cache_ri, state, plan, RI)
        std_agent.update_action(cache_std, std_agent.action_gradient(state, plan, cache_std))

        assert np.array_equal(ri_agent.action_net.hidden_bias, std_agent.action_net.hidden_bias)
        assert np.array_equal(ri_agent.action_net.output_weights, std_agent.action_net.output_weights)
        assert np.array_equal(ri_agent.action_net.output_bias, std_agent.action_net.output_bias)
        assert np.array_equal(
            ri_agent.action_net.hidden_weights[:, :4], std_agent.action_net.hidden_weights[:, :4]
        )
        assert not np.array_equal(
            ri_agent.action_net.hidden_weights[:, 4], std_agent.action_net.hidden_weights[:, 4]
        )

    def test_plan_column_gets_exact_induction_term(self):
        ri_agent, std_agent = ll_agent(seed=6), ll_agent(seed=6)
        state, plan = np.array([0.0, 0.1, -0.05, 0.2]), np.array([-0.15])
        u = np.concatenate([state, plan])
        cache = forward(ri_agent.action_net, u)
        delta, grads, _ = plan_sensitivity(ri_agent, state, plan, cache, RI)
        lr = ri_agent.action_hyper.learning_rate
        expected_extra = lr * induction_gain(float(delta[0]), RI) * grads.hidden_delta

        cache_std = forward(std_agent.action_net, u)
        train_action_step_ri(ri_agent, cache, state, plan, RI)
        std_agent.update_action(cache_std, std_agent.action_gradient(state, plan, cache_std))
        actual_extra = ri_agent.action_net.hidden_weights[:, 4] - std_agent.action_net.hidden_weights[:, 4]
        assert np.allclose(actual_extra, expected_extra, rtol=0, atol=1e-15)

    def test_action_based_variant_runs(self):
        agent = ll_agent(seed=7)
        ri = RIParams(variant=ACTION_BASED)
        state, plan = np.zeros(4), np.array([0.1])
        cache = forward(agent.action_net, np.concatenate([state, plan]))
        delta = train_action_step_ri(agent, cache, state, plan, ri)
        assert delta.shape == (1,)
        assert np.all(np.isfinite(agent.action_net.as_vector()))
