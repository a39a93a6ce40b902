"""Single-level backpropagated-adaptive-critic agents.

The critic estimates p, the discounted sum of future reinforcements, and
trains by TD(0): the weight step is the learning rate times the TD error
times the gradient of p (an output error of one backpropagated through the
critic), plus momentum.  The action network is trained to ascend p; in the
Indirect variant the ascent direction is chained through a learned model
of the plant, in the Direct variant the critic takes the action as input
and supplies the direction itself.

Exploration adds Gaussian noise to the action applied to the plant, but
every learning pass uses the zero-noise activities, so noise changes only
the visited trajectory, never the update rule.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericFault
from .ffnet import (
    ForwardCache,
    NetworkConfig,
    NetworkWeights,
    TrainingHyper,
    apply_update,
    backprop_input_grad,
    backprop_weight_grad,
    forward,
    init_weights,
)

INDIRECT = "Indirect"
DIRECT = "Direct"

_UNIT_ERROR = np.ones(1)


@dataclass(frozen=True)
class TDParams:
    gamma: float = 0.95
    critic_lr: float = 0.02
    action_lr: float = 0.01

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ConfigError(f"gamma must be in (0, 1), got {self.gamma}")


@dataclass(frozen=True)
class NoiseParams:
    sigma: float = 0.05

    def __post_init__(self):
        if self.sigma < 0:
            raise ConfigError(f"sigma must be >= 0, got {self.sigma}")


@dataclass
class ModelTrainer:
    """System-identification net predicting the normalized state change."""

    net: NetworkWeights
    hyper: TrainingHyper
    k_m: float = 1.0  # error scale


def td_error(r_next: float, p_next: float, p_now: float, gamma: float) -> float:
    """One-step TD error: r_next + gamma * p_next - p_now."""
    return r_next + gamma * p_next - p_now


def failed_state_value(r_next: float, gamma: float, mode: str) -> float:
    """Critic bootstrap value assigned to a failed next state.

    "absorbing": the failed configuration persists and keeps paying its own
    reinforcement, r/(1-gamma), which makes failure the worst outcome even
    for pure-cost signals.  "cutoff": zero, nothing follows the failure.
    """
    if mode == "absorbing":
        return r_next / (1.0 - gamma)
    if mode == "cutoff":
        return 0.0
    raise ConfigError(f"unknown terminal mode {mode!r}")


def train_critic_step(critic: NetworkWeights, hyper: TrainingHyper, cache_now: ForwardCache, td_err: float) -> None:
    """TD(0) weight step: lr * td_err * grad(p) + momentum, in place."""
    if not np.isfinite(td_err):
        raise NumericFault("non-finite TD error")
    grad = backprop_weight_grad(critic, cache_now, _UNIT_ERROR)
    apply_update(critic, grad.scaled(td_err), hyper)


def train_model_step(model: ModelTrainer, state: np.ndarray, action: np.ndarray, observed_delta: np.ndarray) -> np.ndarray:
    """One step reducing the prediction error; returns the pre-update error vector."""
    cache = forward(model.net, np.concatenate([state, action]))
    err = np.asarray(observed_delta, dtype=float) - cache.output
    grad = backprop_weight_grad(model.net, cache, model.k_m * err)
    apply_update(model.net, grad, model.hyper)
    return err


def select_action(action_net: NetworkWeights, input_vec: np.ndarray, noise: NoiseParams, rng: np.random.Generator) -> tuple[np.ndarray, ForwardCache]:
    """Noisy action for the plant plus the zero-noise cache for learning."""
    cache = forward(action_net, input_vec)
    noisy = cache.output + rng.normal(0.0, noise.sigma, cache.output.shape)
    return noisy, cache


def action_gradient_indirect(
    critic: NetworkWeights,
    model: NetworkWeights,
    state: np.ndarray,
    clean_action_cache: ForwardCache,
    plan: np.ndarray | None = None,
) -> np.ndarray:
    """Gradient of the next-state critic value with respect to the action outputs.

    Chains an output error of one backward through the critic evaluated at
    the model-predicted next state, then through the model; because the
    predicted next state is state + predicted-change, the critic's input
    gradient doubles as the gradient with respect to the model output.
    When the critic also takes plan inputs they are appended after the
    state and treated as constant.
    """
    plan = np.zeros(0) if plan is None else np.asarray(plan, dtype=float)
    state = np.asarray(state, dtype=float)
    action = clean_action_cache.output
    model_cache = forward(model, np.concatenate([state, action]))
    predicted_next = state + model_cache.output
    critic_cache = forward(critic, np.concatenate([predicted_next, plan]))
    dp_dinput = backprop_input_grad(critic, critic_cache, _UNIT_ERROR)
    dp_dstate = dp_dinput[: state.size]
    dmodel = backprop_input_grad(model, model_cache, dp_dstate)
    return dmodel[state.size :]


def action_gradient_direct(
    critic: NetworkWeights,
    state: np.ndarray,
    clean_action_cache: ForwardCache,
    plan: np.ndarray | None = None,
) -> np.ndarray:
    """Same ascent direction, read off the critic's own action inputs."""
    plan = np.zeros(0) if plan is None else np.asarray(plan, dtype=float)
    state = np.asarray(state, dtype=float)
    action = clean_action_cache.output
    cache = forward(critic, np.concatenate([state, plan, action]))
    grad = backprop_input_grad(critic, cache, _UNIT_ERROR)
    return grad[state.size + plan.size :]


def train_action_step(action_net: NetworkWeights, hyper: TrainingHyper, clean_cache: ForwardCache, action_grad: np.ndarray) -> None:
    """Ascend p: backprop the action gradient as the output error, step +."""
    grad = backprop_weight_grad(action_net, clean_cache, action_grad)
    apply_update(action_net, grad, hyper)


@dataclass
class BacAgent:
    """One BAC: action + critic (+ model for Indirect) and their trainers.

    ``plan_dim`` is 0 for a single-level agent; a low-level agent in a
    hierarchy receives the plan appended to its action and critic inputs.
    The model input never includes the plan.
    """

    variant: str
    state_dim: int
    plan_dim: int
    action_net: NetworkWeights
    action_hyper: TrainingHyper
    critic_net: NetworkWeights
    critic_hyper: TrainingHyper
    model: ModelTrainer | None
    td: TDParams
    noise: NoiseParams
    reward_sign: float
    plan_in_critic: bool = True  # ablation switch; hierarchy needs it on
    plan_scale: float = 1.0  # divisor applied to plans at the net inputs

    @classmethod
    def build(
        cls,
        variant: str,
        rng: np.random.Generator,
        state_dim: int = 4,
        plan_dim: int = 0,
        action_dim: int = 1,
        n_hidden: int = 7,
        td: TDParams | None = None,
        noise: NoiseParams | None = None,
        reward_sign: float = -1.0,
        model_lr: float = 0.05,
        k_m: float = 1.0,
        momentum: float = 0.0,
        init_scale: float = 0.3,
        plan_in_critic: bool = True,
        plan_scale: float = 1.0,
    ) -> "BacAgent":
        if variant not in (INDIRECT, DIRECT):
            raise ConfigError(f"unknown BAC variant {variant!r}")
        td = td or TDParams()
        noise = noise or NoiseParams()
        critic_plan = plan_dim if plan_in_critic else 0
        critic_in = state_dim + critic_plan + (action_dim if variant == DIRECT else 0)
        action_net = init_weights(NetworkConfig(state_dim + plan_dim, n_hidden, action_dim), rng, init_scale)
        critic_net = init_weights(NetworkConfig(critic_in, n_hidden, 1), rng, init_scale)
        model = None
        if variant == INDIRECT:
            model_net = init_weights(NetworkConfig(state_dim + action_dim, n_hidden, state_dim), rng, init_scale)
            model = ModelTrainer(net=model_net, hyper=TrainingHyper(model_lr, momentum), k_m=k_m)
        return cls(
            variant=variant,
            state_dim=state_dim,
            plan_dim=plan_dim,
            action_net=action_net,
            action_hyper=TrainingHyper(td.action_lr, momentum),
            critic_net=critic_net,
            critic_hyper=TrainingHyper(td.critic_lr, momentum),
            model=model,
            td=td,
            noise=noise,
            reward_sign=reward_sign,
            plan_in_critic=plan_in_critic,
            plan_scale=plan_scale,
        )

    # --- input composition -------------------------------------------------

    def action_input(self, state: np.ndarray, plan: np.ndarray | None = None) -> np.ndarray:
        if self.plan_dim == 0:
            return np.asarray(state, dtype=float)
        return np.concatenate([state, np.asarray(plan, dtype=float) / self.plan_scale])

    def _critic_plan(self, plan: np.ndarray | None) -> np.ndarray:
        if self.plan_dim == 0 or not self.plan_in_critic:
            return np.zeros(0)
        return np.asarray(plan, dtype=float) / self.plan_scale

    def critic_input(self, state: np.ndarray, plan: np.ndarray | None, action: np.ndarray | None) -> np.ndarray:
        parts = [np.asarray(state, dtype=float), self._critic_plan(plan)]
        if self.variant == DIRECT:
            parts.append(np.asarray(action, dtype=float))
        return np.concatenate(parts)

    # --- per-step signals ---------------------------------------------------

    def act(self, state: np.ndarray, plan: np.ndarray | None, rng: np.random.Generator) -> tuple[np.ndarray, ForwardCache]:
        return select_action(self.action_net, self.action_input(state, plan), self.noise, rng)

    def value(self, state: np.ndarray, plan: np.ndarray | None, clean_action: np.ndarray | None) -> tuple[float, ForwardCache]:
        cache = forward(self.critic_net, self.critic_input(state, plan, clean_action))
        return float(cache.output[0]), cache

    def action_gradient(self, state: np.ndarray, plan: np.ndarray | None, clean_cache: ForwardCache) -> np.ndarray:
        if self.variant == INDIRECT:
            return action_gradient_indirect(self.critic_net, self.model.net, state, clean_cache, self._critic_plan(plan))
        return action_gradient_direct(self.critic_net, state, clean_cache, self._critic_plan(plan))

    # --- updates ------------------------------------------------------------

    def update_critic(self, cache_now: ForwardCache, td_err: float) -> None:
        train_critic_step(self.critic_net, self.critic_hyper, cache_now, td_err)

    def update_action(self, clean_cache: ForwardCache, action_grad: np.ndarray) -> None:
        train_action_step(self.action_net, self.action_hyper, clean_cache, action_grad)

    def update_model(self, state: np.ndarray, action: np.ndarray, observed_delta: np.ndarray) -> np.ndarray:
        if self.model is None:
            raise ConfigError("Direct BAC has no model network")
        return train_model_step(self.model, state, action, observed_delta)

    def weights_snapshot(self) -> dict[str, np.ndarray]:
        """Flat copies of every net, for freeze-integrity checks."""
        snap = {"action": self.action_net.as_vector(), "critic": self.critic_net.as_vector()}
        if self.model is not None:
            snap["model"] = self.model.net.as_vector()
        return snap
