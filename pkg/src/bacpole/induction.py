"""Response-induction learning for the low-level action network.

When the low level shares the external reinforcement with the high level,
plans degenerate into disturbances to be rejected.  Response induction
counteracts this by augmenting the update of each hidden-to-plan-input
weight so that the plan sensitivity

    delta_i = dp/dY_i

(the backpropagated delta at plan-input unit i of the action network, with
the critic feedback as the output error) is pushed toward a significant
value.  The augmented increment for a hidden-to-plan connection is

    lr * (delta_j * Y_i  +  k1 * k2 * delta_i * delta_j * exp(-delta_i^2 / k2^2))

plus momentum; all other weights get the standard ascent-on-p update.  The
first term IS the standard update for that connection (hidden delta times
input activity), so the induction term is a pure add-on, near zero while
delta_i sits in the flat center of the Gaussian bowl and again as
|delta_i| grows large.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bac import BacAgent
from .errors import ConfigError
from .ffnet import ForwardCache, TrainingHyper, apply_update, backprop

PRINTED = "printed"  # the increment exactly as published
ANALYTIC = "analytic"  # gradient of the influence error, differs in constants
ACTION_BASED = "action_based"  # dy/dY induction; much less effective, kept for ablation
RI_VARIANTS = (PRINTED, ANALYTIC, ACTION_BASED)


@dataclass(frozen=True)
class RIParams:
    k1: float = 0.35
    k2: float = 0.14
    plan_input_indices: tuple[int, ...] = (4,)
    variant: str = PRINTED

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0:
            raise ConfigError("k1 and k2 must be positive")
        if not self.plan_input_indices:
            raise ConfigError("plan_input_indices must be non-empty")
        if self.variant not in RI_VARIANTS:
            raise ConfigError(f"unknown RI variant {self.variant!r}")

    @property
    def n_p(self) -> int:
        return len(self.plan_input_indices)


def influence_error(delta_plan: np.ndarray, ri: RIParams) -> float:
    """-(k1/n_p) * sum_i exp(-delta_i^2 / k2^2); always in [-k1, 0)."""
    d = np.asarray(delta_plan, dtype=float)
    return float(-(ri.k1 / ri.n_p) * np.sum(np.exp(-(d * d) / ri.k2**2)))


def induction_gain(delta_i: float, ri: RIParams) -> float:
    """Per-plan-input factor multiplying delta_j in the induction term."""
    if ri.variant == ANALYTIC:
        return (2.0 * ri.k1 / (ri.n_p * ri.k2**2)) * delta_i * float(np.exp(-(delta_i**2) / ri.k2**2))
    return ri.k1 * ri.k2 * delta_i * float(np.exp(-(delta_i**2) / ri.k2**2))


def ri_weight_update(
    w_ji: float,
    delta_j: float,
    y_i: float,
    delta_i: float,
    hyper: TrainingHyper,
    ri: RIParams,
    velocity: float = 0.0,
) -> float:
    """Increment for one hidden-to-plan-input weight (momentum folded in)."""
    step = hyper.learning_rate * (delta_j * y_i + induction_gain(delta_i, ri) * delta_j)
    return hyper.momentum_coeff * velocity + step


def plan_sensitivity(agent: BacAgent, state: np.ndarray, plan: np.ndarray, clean_cache: ForwardCache, ri: RIParams):
    """(delta_plan, hidden deltas, critic feedback dp/dy) at the current step.

    The critic feedback is the usual ascent direction for the action
    outputs; backpropagating it through the action network produces in one
    pass the weight gradient of the standard update, the hidden deltas,
    and the deltas at every input unit, of which the plan entries are the
    sensitivities.  The action_based variant replaces the critic feedback
    with a unit error at the action output.
    """
    if ri.variant == ACTION_BASED:
        dp_dy = np.ones(agent.action_net.n_out)
    else:
        dp_dy = agent.action_gradient(state, plan, clean_cache)
    grads = backprop(agent.action_net, clean_cache, dp_dy)
    delta_plan = grads.input[list(ri.plan_input_indices)]
    return delta_plan, grads, dp_dy


def train_action_step_ri(agent: BacAgent, clean_cache: ForwardCache, state: np.ndarray, plan: np.ndarray, ri: RIParams) -> np.ndarray:
    """RI-augmented action update; returns the measured delta_plan vector.

    Weights not on hidden-to-plan connections receive exactly the standard
    increment for the same caches; the plan columns of the first layer get
    the extra induction term.  One momentum buffer serves both parts.
    """
    delta_plan, grads, dp_dy = plan_sensitivity(agent, state, plan, clean_cache, ri)
    if ri.variant == ACTION_BASED:
        # ablation variant: deltas for induction come from the unit-error pass,
        # but the base update still ascends p with the standard gradient
        weight_grad = backprop(agent.action_net, clean_cache, agent.action_gradient(state, plan, clean_cache)).weights
    else:
        weight_grad = grads.weights
    for k, i in enumerate(ri.plan_input_indices):
        weight_grad.hidden_weights[:, i] += induction_gain(float(delta_plan[k]), ri) * grads.hidden_delta
    apply_update(agent.action_net, weight_grad, agent.action_hyper)
    return delta_plan


def ri_phase_driver(nets, config, rngs, recorder):
    """Low-level action phase with shared external reinforcement and RI.

    Thin wrapper over the hierarchy phase driver; exists so response
    induction can be launched and reported on its own.  Returns the phase
    report; the per-trial delta series lands in the recorder.
    """
    from .hierarchy import run_ll_action_phase  # deferred: hierarchy imports this module

    return run_ll_action_phase(nets, config, rngs, recorder, ll_mode="RI")
