"""Finite-difference verification of every backpropagation pathway.

Central differences with h = 1e-5 over randomized networks: weight
gradients and input gradients of single networks (tolerance 1e-4), the
action-gradient chain through model and critic and the plan-sensitivity
chain through action, model, and critic (tolerance 1e-3, longer float
paths).  Elements where both sides are below 1e-8 in magnitude are
compared absolutely at that floor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bac import BacAgent, NoiseParams, TDParams, action_gradient_direct, action_gradient_indirect
from .ffnet import NetworkConfig, backprop_input_grad, backprop_weight_grad, forward, init_weights
from .induction import RIParams, plan_sensitivity

TINY = 1e-8


@dataclass(frozen=True)
class SuiteResult:
    name: str
    count: int
    max_err: float
    tol: float
    passed: bool


def central_diff(fn, x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    """Central finite differences of a scalar function over a flat vector."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.size):
        bumped = x.copy()
        bumped[i] = x[i] + h
        up = fn(bumped)
        bumped[i] = x[i] - h
        down = fn(bumped)
        grad[i] = (up - down) / (2.0 * h)
    return grad


def grad_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Worst elementwise discrepancy: relative, or absolute below the floor."""
    a = np.asarray(analytic, dtype=float).ravel()
    n = np.asarray(numeric, dtype=float).ravel()
    scale = np.maximum(np.abs(a), np.abs(n))
    err = np.abs(a - n)
    rel = np.where(scale < TINY, np.where(err < TINY, 0.0, 1.0), err / np.maximum(scale, TINY))
    return float(rel.max()) if rel.size else 0.0


def _random_net(rng, n_in, n_hidden, n_out, scale=0.8):
    return init_weights(NetworkConfig(n_in, n_hidden, n_out), rng, scale)


def check_weight_grads(n: int = 60, seed: int = 2024) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        n_in, n_hidden, n_out = rng.integers(2, 7), rng.integers(3, 10), rng.integers(1, 4)
        net = _random_net(rng, n_in, n_hidden, n_out)
        x = rng.normal(0.0, 1.0, n_in)
        e = rng.normal(0.0, 1.0, n_out)
        analytic = backprop_weight_grad(net, forward(net, x), e).as_vector()

        def objective(vec, net=net, x=x, e=e):
            probe = net.copy()
            probe.set_vector(vec)
            return float(e @ forward(probe, x).output)

        numeric = central_diff(objective, net.as_vector())
        worst = max(worst, grad_error(analytic, numeric))
    return SuiteResult("weight-gradients", n, worst, 1e-4, worst < 1e-4)


def check_input_grads(n: int = 60, seed: int = 2025) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        n_in, n_hidden, n_out = rng.integers(2, 7), rng.integers(3, 10), rng.integers(1, 4)
        net = _random_net(rng, n_in, n_hidden, n_out)
        x = rng.normal(0.0, 1.0, n_in)
        e = rng.normal(0.0, 1.0, n_out)
        analytic = backprop_input_grad(net, forward(net, x), e)
        numeric = central_diff(lambda v: float(e @ forward(net, v).output), x)
        worst = max(worst, grad_error(analytic, numeric))
    return SuiteResult("input-gradients", n, worst, 1e-4, worst < 1e-4)


def check_indirect_chain(n: int = 60, seed: int = 2026) -> SuiteResult:
    """d critic(state + model(state, a)) / d a against the chained backprop."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        state_dim, action_dim = rng.integers(2, 6), rng.integers(1, 3)
        critic = _random_net(rng, state_dim, 7, 1)
        model = _random_net(rng, state_dim + action_dim, 7, state_dim)
        action_net = _random_net(rng, state_dim, 7, action_dim)
        state = rng.normal(0.0, 0.5, state_dim)
        cache = forward(action_net, state)
        analytic = action_gradient_indirect(critic, model, state, cache)

        def composed(a, state=state, model=model, critic=critic):
            predicted = state + forward(model, np.concatenate([state, a])).output
            return float(forward(critic, predicted).output[0])

        numeric = central_diff(composed, cache.output)
        worst = max(worst, grad_error(analytic, numeric))
    return SuiteResult("indirect-action-chain", n, worst, 1e-3, worst < 1e-3)


def check_direct_chain(n: int = 60, seed: int = 2027) -> SuiteResult:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        state_dim, action_dim = rng.integers(2, 6), rng.integers(1, 3)
        critic = _random_net(rng, state_dim + action_dim, 7, 1)
        action_net = _random_net(rng, state_dim, 7, action_dim)
        state = rng.normal(0.0, 0.5, state_dim)
        cache = forward(action_net, state)
        analytic = action_gradient_direct(critic, state, cache)
        numeric = central_diff(
            lambda a: float(forward(critic, np.concatenate([state, a])).output[0]), cache.output
        )
        worst = max(worst, grad_error(analytic, numeric))
    return SuiteResult("direct-action-chain", n, worst, 1e-4, worst < 1e-4)


def check_plan_sensitivity(n: int = 60, seed: int = 2028) -> SuiteResult:
    """dp/dY through action, model, and critic against the measured deltas.

    The perturbation enters only through the action network's plan inputs;
    the critic's own plan inputs stay at the unperturbed plan.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n):
        plan_dim = int(rng.integers(1, 3))
        agent = BacAgent.build(
            "Indirect",
            rng=rng,
            state_dim=4,
            plan_dim=plan_dim,
            action_dim=1,
            td=TDParams(),
            noise=NoiseParams(sigma=0.0),
            init_scale=0.8,
        )
        ri = RIParams(plan_input_indices=tuple(range(4, 4 + plan_dim)))
        state = rng.normal(0.0, 0.5, 4)
        plan = rng.uniform(-0.5, 0.5, plan_dim)
        cache = forward(agent.action_net, np.concatenate([state, plan]))
        analytic, _, _ = plan_sensitivity(agent, state, plan, cache, ri)

        def composed(y_probe, agent=agent, state=state, plan=plan):
            act = forward(agent.action_net, np.concatenate([state, y_probe])).output
            predicted = state + forward(agent.model.net, np.concatenate([state, act])).output
            return float(forward(agent.critic_net, np.concatenate([predicted, plan])).output[0])

        numeric = central_diff(composed, plan)
        worst = max(worst, grad_error(analytic, numeric))
    return SuiteResult("plan-sensitivity", n, worst, 1e-3, worst < 1e-3)


def run_all(n: int = 60, seed: int = 2024) -> list[SuiteResult]:
    return [
        check_weight_grads(n, seed),
        check_input_grads(n, seed + 1),
        check_indirect_chain(n, seed + 2),
        check_direct_chain(n, seed + 3),
        check_plan_sensitivity(n, seed + 4),
    ]
