"""Two-level coordination: plans, the N-step clock, and the phase drivers.

The high level acts once every ``n_ratio`` low-level steps, emitting a plan
that is held constant in between and fed to the low-level action and critic
networks (never to the low-level model).  Training proceeds in phases, each
freezing its network on completion:

    I    low-level model, one-step predictions under random actions
    II   low-level action + critic, random plans (explicit role or RI)
    III  high-level model, N-step predictions under random plans
    IV   high-level action + critic on the environment reinforcement

The Direct variant needs no models, so only the two action phases run (its
phases I and II are the Indirect II and IV).  A phase ends when its sliding
convergence criterion is met or its budget runs out; budget exhaustion
without convergence fails the experiment.  Trial caps are hard, step caps
are checked at trial boundaries, and a mid-window failure truncates the
high-level transition with the failure's reinforcement.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from . import cartpole
from .bac import DIRECT, INDIRECT, BacAgent, failed_state_value, td_error
from .cartpole import CartPoleState
from .errors import ConfigError
from .ffnet import forward
from .induction import train_action_step_ri
from .records import PhaseReport, Recorder


@dataclass(frozen=True)
class HierarchyConfig:
    n_ratio: int = 40
    plan_dim: int = 1
    plan_range_ll_training: float = 0.3  # rad, plans during low-level training
    plan_range_hl_model: float = 0.7  # rad, plans during high-level model training

    def __post_init__(self):
        if self.n_ratio < 2:
            raise ConfigError(f"n_ratio must be >= 2, got {self.n_ratio}")
        if self.plan_dim < 1:
            raise ConfigError(f"plan_dim must be >= 1, got {self.plan_dim}")


def hl_schedule(step: int, n_ratio: int) -> bool:
    """True on the steps where the high level acts (0, N, 2N, ...)."""
    return step % n_ratio == 0


def ll_reinforcement_explicit(plan: np.ndarray, theta: float) -> float:
    """Squared tracking error between the held plan (a commanded pole angle,
    rad) and the current pole angle; the predefined low-level role."""
    return float((np.asarray(plan, dtype=float).ravel()[0] - theta) ** 2)


def ll_input(state_norm: np.ndarray, plan: np.ndarray, plan_scale: float = 1.0) -> np.ndarray:
    """Low-level action/critic input: normalized state with the plan appended.

    The plan is divided by ``plan_scale`` so a commanded angle enters the
    networks in the same units as the normalized pole angle.
    """
    return np.concatenate([state_norm, np.asarray(plan, dtype=float) / plan_scale])


@dataclass
class TwoLevelNets:
    ll: BacAgent
    hl: BacAgent


def build_ll_agent(config, rng: np.random.Generator) -> BacAgent:
    # explicit-role reinforcement is a cost, so ascent needs the flipped sign
    sign = -1.0 if config.ll_mode == "ExplicitRole" else config.reward_sign
    return BacAgent.build(
        variant=config.variant,
        rng=rng,
        state_dim=4,
        plan_dim=config.plan_dim,
        action_dim=1,
        n_hidden=config.n_hidden,
        td=config.td(),
        noise=config.noise(),
        reward_sign=sign,
        model_lr=config.model_lr,
        k_m=config.k_m,
        momentum=config.momentum,
        init_scale=config.weight_init,
        plan_in_critic=config.include_plan_in_ll_critic,
        plan_scale=config.theta_r,  # commanded angles in normalized-angle units
    )


def build_hl_agent(config, rng: np.random.Generator) -> BacAgent:
    # the high-level "action" is the plan vector
    return BacAgent.build(
        variant=config.variant,
        rng=rng,
        state_dim=4,
        plan_dim=0,
        action_dim=config.plan_dim,
        n_hidden=config.n_hidden,
        td=config.hl_td(),
        noise=config.hl_noise(),
        reward_sign=config.reward_sign,
        model_lr=config.model_lr,
        k_m=config.k_m,
        momentum=config.momentum,
        init_scale=config.weight_init,
    )


def build_two_level(config, rng: np.random.Generator) -> TwoLevelNets:
    return TwoLevelNets(ll=build_ll_agent(config, rng), hl=build_hl_agent(config, rng))


# --- phase I: model identification (also single-level model pretraining) ----


def run_model_id_phase(
    agent: BacAgent,
    config,
    rngs,
    recorder: Recorder | None,
    max_trials: int,
    max_steps: int,
    converge: float | None,
    window: int,
    phase: str = "I",
    role: str = "ll_model",
) -> PhaseReport:
    """Train the one-step model on uniform random actions in [-1, 1].

    With ``converge`` None the phase is budget-defined and always reported
    converged (the single-level protocol trains for a fixed step count).
    """
    physics, bounds = config.physics(), config.bounds()
    err_window: deque = deque(maxlen=window)
    trials = steps = 0
    converged = False
    while trials < max_trials and steps < max_steps and not converged:
        state = cartpole.random_initial_state(rngs["init"], bounds, config.init_fraction)
        trial_steps = 0
        reason = "budget"
        while trial_steps < config.success_steps and steps < max_steps:
            action = rngs["actions"].uniform(-1.0, 1.0, 1)
            s_norm = cartpole.normalize(state, bounds)
            next_state = cartpole.step(state, float(action[0]), physics)
            delta = cartpole.normalize(next_state, bounds) - s_norm
            err = agent.update_model(s_norm, action, delta)
            err_window.append(float(np.mean(np.abs(err))))
            steps += 1
            trial_steps += 1
            state = next_state
            if cartpole.is_failure(state, bounds):
                reason = cartpole.failure_reason(state, bounds)
                break
        trials += 1
        if recorder is not None:
            recorder.add(trial_steps, reason)
        if converge is not None and len(err_window) == window and float(np.mean(err_window)) < converge:
            converged = True
    metric = float(np.mean(err_window)) if err_window else None
    if converge is None:
        converged = True
    return PhaseReport(phase=phase, role=role, trials=trials, steps=steps, converged=converged, metric=metric)


# --- phase II: low-level action + critic under random plans -----------------


def run_ll_action_phase(
    nets: TwoLevelNets,
    config,
    rngs,
    recorder: Recorder,
    ll_mode: str,
    phase: str = "II",
) -> PhaseReport:
    """Explicit-role tracking or response-induction learning.

    The plan is resampled at every high-level tick; each trial restarts the
    tick clock.  Explicit role: reinforcement is the squared plan/angle
    tracking error, convergence is a sliding mean of per-trial |theta - Y|.
    RI: reinforcement is the environment's, the action update carries the
    induction term, and convergence requires the plan sensitivity to reach
    the target while recent trials stay long enough to count as stable.
    """
    ll = nets.ll
    physics, bounds = config.physics(), config.bounds()
    ri = config.ri()
    plan_range = config.plan_range_ll
    if ll_mode == "RI":
        terminal = config.terminal_for(cost_like=config.reinforcement == cartpole.DISTANCE_COST)
    else:
        terminal = config.terminal_for(cost_like=True)  # tracking error is a cost
    max_trials, max_steps = config.ll_action_max_trials, config.ll_action_max_steps
    track_window: deque = deque(maxlen=config.ll_track_window)
    delta_window: deque = deque(maxlen=config.ll_track_window)
    steps_window: deque = deque(maxlen=config.ll_track_window)

    trials = steps = 0
    converged = False
    while trials < max_trials and steps < max_steps and not converged:
        state = cartpole.random_initial_state(rngs["init"], bounds, config.init_fraction)
        plan = rngs["plans"].uniform(-plan_range, plan_range, config.plan_dim)
        s_norm = cartpole.normalize(state, bounds)
        a_noisy, cache_a = ll.act(s_norm, plan, rngs["noise"])
        trial_steps = 0
        track_sum = 0.0
        delta_sum = 0.0
        reason = "budget"
        for t in range(config.success_steps):
            if ll_mode == "RI":
                delta_plan = train_action_step_ri(ll, cache_a, s_norm, plan, ri)
                delta_sum += float(np.mean(delta_plan))
            else:
                ll.update_action(cache_a, ll.action_gradient(s_norm, plan, cache_a))
            next_state = cartpole.step(state, float(a_noisy[0]), physics)
            steps += 1
            trial_steps += 1
            plan_next = plan
            if hl_schedule(t + 1, config.n_ratio):
                plan_next = rngs["plans"].uniform(-plan_range, plan_range, config.plan_dim)
            failed = cartpole.is_failure(next_state, bounds)
            if ll_mode == "RI":
                raw = cartpole.reinforcement(next_state, bounds, config.reinforcement)
            else:
                raw = ll_reinforcement_explicit(plan_next, next_state.theta)
            r = ll.reward_sign * raw
            track_sum += abs(next_state.theta - float(plan_next[0]))
            p_now, cache_c = ll.value(s_norm, plan, cache_a.output)
            if failed:
                p_fail = failed_state_value(r, ll.td.gamma, terminal)
                ll.update_critic(cache_c, td_error(r, p_fail, p_now, ll.td.gamma))
                reason = cartpole.failure_reason(next_state, bounds)
                break
            next_norm = cartpole.normalize(next_state, bounds)
            a2_noisy, cache_a2 = ll.act(next_norm, plan_next, rngs["noise"])
            p_next, _ = ll.value(next_norm, plan_next, cache_a2.output)
            ll.update_critic(cache_c, td_error(r, p_next, p_now, ll.td.gamma))
            state, s_norm, plan = next_state, next_norm, plan_next
            a_noisy, cache_a = a2_noisy, cache_a2
        trials += 1
        mean_track = track_sum / trial_steps
        mean_delta = delta_sum / trial_steps if ll_mode == "RI" else None
        recorder.add(trial_steps, reason, mean_delta_plan=mean_delta)
        track_window.append(mean_track)
        steps_window.append(trial_steps)
        if ll_mode == "RI":
            delta_window.append(mean_delta)
            if (
                len(delta_window) == config.ll_track_window
                and float(np.mean(np.abs(delta_window))) >= config.ri_delta_target
                and max(steps_window) >= config.ri_stability_steps
            ):
                converged = True
        elif len(track_window) == config.ll_track_window and float(np.mean(track_window)) < config.ll_track_converge:
            converged = True

    if ll_mode == "RI":
        metric = float(np.mean(np.abs(delta_window))) if delta_window else None
    else:
        metric = float(np.mean(track_window)) if track_window else None
    return PhaseReport(phase=phase, role="ll_action", trials=trials, steps=steps, converged=converged, metric=metric)


# --- high-level transitions ---------------------------------------------------


@dataclass
class HLTransition:
    start: CartPoleState
    plan: np.ndarray
    end: CartPoleState
    steps: int
    reward: float  # signed environment reinforcement seen by the high level
    truncated: bool  # failure inside the window


def hl_transition_collect(
    ll: BacAgent,
    state: CartPoleState,
    plan: np.ndarray,
    config,
    max_steps: int | None = None,
) -> HLTransition:
    """Drive the frozen low level for (up to) one high-level window.

    The low level runs noise-free.  The reward is the signed environment
    reinforcement sampled at the window's end ("tick" mode) or averaged
    over the window's steps ("window" mode); a mid-window failure truncates
    the transition and hands the failure's reinforcement to the high level.
    """
    physics, bounds = config.physics(), config.bounds()
    start = state
    steps = min(config.n_ratio, max_steps) if max_steps is not None else config.n_ratio
    taken = 0
    truncated = False
    reward_sum = 0.0
    reward = 0.0
    for _ in range(steps):
        action = forward(ll.action_net, ll_input(cartpole.normalize(state, bounds), plan, ll.plan_scale)).output
        state = cartpole.step(state, float(action[0]), physics)
        taken += 1
        raw = config.reward_sign * cartpole.reinforcement(state, bounds, config.reinforcement)
        reward_sum += raw
        reward = raw
        if cartpole.is_failure(state, bounds):
            truncated = True
            break
    if config.hl_reward == "window" and taken:
        reward = reward_sum / taken
    return HLTransition(start=start, plan=plan, end=state, steps=taken, reward=reward, truncated=truncated)


# --- phase III: high-level model on N-step transitions -----------------------


def run_hl_model_phase(nets: TwoLevelNets, config, rngs, recorder: Recorder, phase: str = "III") -> PhaseReport:
    """Predict the N-step normalized state change for random plans.

    Truncated windows (failures) end the trial and are not used to train
    the model, which learns the fixed-horizon mapping only.
    """
    physics, bounds = config.physics(), config.bounds()
    hl = nets.hl
    err_window: deque = deque(maxlen=config.hl_model_window)
    max_trials, max_steps = config.hl_model_max_trials, config.hl_model_max_steps
    trials = steps = 0
    converged = False
    while trials < max_trials and steps < max_steps and not converged:
        state = cartpole.random_initial_state(rngs["init"], bounds, config.init_fraction)
        trial_steps = 0
        reason = "budget"
        while trial_steps < config.success_steps:
            plan = rngs["plans"].uniform(-config.plan_range_hl, config.plan_range_hl, config.plan_dim)
            start_norm = cartpole.normalize(state, bounds)
            tr = hl_transition_collect(nets.ll, state, plan, config)
            trial_steps += tr.steps
            steps += tr.steps
            state = tr.end
            if tr.truncated:
                reason = cartpole.failure_reason(state, bounds)
                break
            err = hl.update_model(start_norm, plan, cartpole.normalize(state, bounds) - start_norm)
            err_window.append(float(np.mean(np.abs(err))))
            if len(err_window) == config.hl_model_window and float(np.mean(err_window)) < config.hl_model_converge:
                converged = True
                # finish the trial bookkeeping before stopping
                break
        trials += 1
        recorder.add(trial_steps, reason)
    metric = float(np.mean(err_window)) if err_window else None
    return PhaseReport(phase=phase, role="hl_model", trials=trials, steps=steps, converged=converged, metric=metric)


# --- phase IV: high-level action + critic ------------------------------------


def run_hl_action_phase(nets: TwoLevelNets, config, rngs, recorder: Recorder, phase: str = "IV") -> PhaseReport:
    """Learn to center the cart by steering the frozen low level.

    The high level is a BAC over tick-to-tick transitions: exploration
    noise on the plan, zero-noise activities for every update, terminal
    handling on mid-window failures.  Success is a trial that survives
    success_steps low-level steps and ends the experiment's learning.
    """
    hl = nets.hl
    bounds = config.bounds()
    terminal = config.terminal_for(cost_like=config.reinforcement == cartpole.DISTANCE_COST)
    max_trials, max_steps = config.hl_action_max_trials, config.hl_action_max_steps
    trials = steps = 0
    best = 0
    success = False
    while trials < max_trials and steps < max_steps and not success:
        state = cartpole.random_initial_state(rngs["init"], bounds, config.init_fraction)
        s_norm = cartpole.normalize(state, bounds)
        plan_noisy, cache_y = hl.act(s_norm, None, rngs["noise"])
        trial_steps = 0
        reason = "budget"
        while True:
            remaining = config.success_steps - trial_steps
            if remaining <= 0:
                reason = "success"
                success = True
                break
            if remaining >= config.n_ratio:
                hl.update_action(cache_y, hl.action_gradient(s_norm, None, cache_y))
                tr = hl_transition_collect(nets.ll, state, plan_noisy, config)
            else:
                # partial tail window before the success boundary: no update,
                # the transition spans a different horizon than the model's
                tr = hl_transition_collect(nets.ll, state, plan_noisy, config, max_steps=remaining)
            trial_steps += tr.steps
            steps += tr.steps
            p_now, cache_c = hl.value(s_norm, None, cache_y.output)
            if tr.truncated:
                p_fail = failed_state_value(tr.reward, hl.td.gamma, terminal)
                hl.update_critic(cache_c, td_error(tr.reward, p_fail, p_now, hl.td.gamma))
                reason = cartpole.failure_reason(tr.end, bounds)
                break
            next_norm = cartpole.normalize(tr.end, bounds)
            plan2, cache_y2 = hl.act(next_norm, None, rngs["noise"])
            if remaining >= config.n_ratio:
                p_next, _ = hl.value(next_norm, None, cache_y2.output)
                hl.update_critic(cache_c, td_error(tr.reward, p_next, p_now, hl.td.gamma))
            state, s_norm = tr.end, next_norm
            plan_noisy, cache_y = plan2, cache_y2
        trials += 1
        best = max(best, trial_steps)
        recorder.add(trial_steps, reason)
    return PhaseReport(
        phase=phase,
        role="hl_action",
        trials=trials,
        steps=steps,
        converged=success,
        metric=float(best),
        note="success = one trial reaching success_steps",
    )


# --- phase sequencing ---------------------------------------------------------

PHASE_PLAN = {
    INDIRECT: (("I", "ll_model"), ("II", "ll_action"), ("III", "hl_model"), ("IV", "hl_action")),
    DIRECT: (("I", "ll_action"), ("II", "hl_action")),
}


def run_phase(phase: str, nets: TwoLevelNets, config, rngs, recorder: Recorder) -> PhaseReport:
    """Run one two-level phase by its label for the config's variant."""
    plan = dict(PHASE_PLAN[config.variant])
    if phase not in plan:
        raise ConfigError(f"architecture {config.architecture} has no phase {phase}")
    role = plan[phase]
    if role == "ll_model":
        return run_model_id_phase(
            nets.ll,
            config,
            rngs,
            recorder,
            max_trials=config.ll_model_max_trials,
            max_steps=config.ll_model_max_steps,
            converge=config.ll_model_converge,
            window=config.ll_model_window,
            phase=phase,
        )
    if role == "ll_action":
        return run_ll_action_phase(nets, config, rngs, recorder, ll_mode=config.ll_mode, phase=phase)
    if role == "hl_model":
        return run_hl_model_phase(nets, config, rngs, recorder, phase=phase)
    return run_hl_action_phase(nets, config, rngs, recorder, phase=phase)


def evaluate_tracking(
    ll: BacAgent,
    config,
    rng: np.random.Generator,
    n_plans: int = 20,
    horizon: int = 200,
    tail: int = 100,
) -> float:
    """Mean |theta - plan| over the tail of noise-free rollouts, in rad.

    Pure-physics evaluation of the frozen low level: plans are drawn from
    the training range (which exceeds the failure bound), so rollouts are
    not terminated at the bounds; this probes tracking, not survival.
    """
    physics, bounds = config.physics(), config.bounds()
    errors = []
    for _ in range(n_plans):
        plan = rng.uniform(-config.plan_range_ll, config.plan_range_ll, config.plan_dim)
        state = cartpole.random_initial_state(rng, bounds, 0.1)
        tail_err = []
        for t in range(horizon):
            action = forward(ll.action_net, ll_input(cartpole.normalize(state, bounds), plan, ll.plan_scale)).output
            state = cartpole.step(state, float(action[0]), physics)
            if t >= horizon - tail:
                tail_err.append(abs(state.theta - float(plan[0])))
        errors.append(float(np.mean(tail_err)))
    return float(np.mean(errors))
