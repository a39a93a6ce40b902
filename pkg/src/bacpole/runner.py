"""Experiment orchestration: seeds to named RNG streams, trials to summaries.

Each seed expands into independent streams (weight init, initial states,
exploration noise, random actions, random plans) via PCG64 seeded from
``SeedSequence(seed, spawn_key=(stream,))``, so a (config, seed) pair fully
determines a run and seeds can execute in parallel without shared state.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import cartpole
from .bac import INDIRECT, BacAgent, failed_state_value, td_error
from .config import ExperimentConfig, describe
from .errors import NumericFault
from .hierarchy import PHASE_PLAN, build_two_level, run_model_id_phase, run_phase
from .records import (
    ExperimentResult,
    PhaseReport,
    Recorder,
    RunSummary,
    export_series_csv,
    export_summary_csv,
    export_trials_csv,
    smooth_series,
    success_stats,
    summarize,
)

STREAM_IDS = {"weights": 0, "init": 1, "noise": 2, "actions": 3, "plans": 4}


def make_streams(seed: int) -> dict[str, np.random.Generator]:
    return {
        name: np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(k,))))
        for name, k in STREAM_IDS.items()
    }


def build_single_agent(config: ExperimentConfig, rng: np.random.Generator) -> BacAgent:
    return BacAgent.build(
        variant=config.variant,
        rng=rng,
        state_dim=4,
        plan_dim=0,
        action_dim=1,
        n_hidden=config.n_hidden,
        td=config.td(),
        noise=config.noise(),
        reward_sign=config.reward_sign,
        model_lr=config.model_lr,
        k_m=config.k_m,
        momentum=config.momentum,
        init_scale=config.weight_init,
    )


def run_control_trial(agent: BacAgent, config: ExperimentConfig, rngs) -> tuple[int, str]:
    """One learning trial; returns (steps survived, terminal reason).

    Per step: act (noisy for the plant, clean cache for learning), ascend p
    through the action network, integrate the plant, then the TD update on
    the observed transition; a failed next state bootstraps to its
    terminal value (absorbing by default for the distance cost).
    """
    physics, bounds = config.physics(), config.bounds()
    terminal = config.terminal_for(cost_like=config.reinforcement == cartpole.DISTANCE_COST)
    state = cartpole.random_initial_state(rngs["init"], bounds, config.init_fraction)
    s_norm = cartpole.normalize(state, bounds)
    a_noisy, cache_a = agent.act(s_norm, None, rngs["noise"])
    for t in range(config.success_steps):
        agent.update_action(cache_a, agent.action_gradient(s_norm, None, cache_a))
        next_state = cartpole.step(state, float(a_noisy[0]), physics)
        r = agent.reward_sign * cartpole.reinforcement(next_state, bounds, config.reinforcement)
        p_now, cache_c = agent.value(s_norm, None, cache_a.output)
        if cartpole.is_failure(next_state, bounds):
            p_fail = failed_state_value(r, agent.td.gamma, terminal)
            agent.update_critic(cache_c, td_error(r, p_fail, p_now, agent.td.gamma))
            return t + 1, cartpole.failure_reason(next_state, bounds)
        next_norm = cartpole.normalize(next_state, bounds)
        a2_noisy, cache_a2 = agent.act(next_norm, None, rngs["noise"])
        p_next, _ = agent.value(next_norm, None, cache_a2.output)
        agent.update_critic(cache_c, td_error(r, p_next, p_now, agent.td.gamma))
        state, s_norm = next_state, next_norm
        a_noisy, cache_a = a2_noisy, cache_a2
    return config.success_steps, "success"


def _single_control_phase(agent: BacAgent, config: ExperimentConfig, rngs, recorder: Recorder, phase: str) -> PhaseReport:
    trials = steps = 0
    best = 0
    success = False
    while trials < config.trial_limit and not success:
        trial_steps, reason = run_control_trial(agent, config, rngs)
        trials += 1
        steps += trial_steps
        best = max(best, trial_steps)
        success = reason == "success"
        recorder.add(trial_steps, reason)
    return PhaseReport(
        phase=phase,
        role="control",
        trials=trials,
        steps=steps,
        converged=success,
        metric=float(best),
        note="success = one trial reaching success_steps",
    )


def run_experiment(config: ExperimentConfig, seed: int) -> ExperimentResult:
    """Deterministic single-seed experiment; numeric faults mark it failed."""
    rngs = make_streams(seed)
    recorder = Recorder()
    reports: list[PhaseReport] = []
    fail_reason: str | None = None
    try:
        if config.is_two_level:
            nets = build_two_level(config, rngs["weights"])
            for phase, _role in PHASE_PLAN[config.variant]:
                report = run_phase(phase, nets, config, rngs, recorder)
                reports.append(report)
                if not report.converged:
                    fail_reason = f"phase-{phase}-budget"
                    break
        else:
            agent = build_single_agent(config, rngs["weights"])
            if config.variant == INDIRECT:
                # fixed-step system identification on random actions, counted
                # apart from the control trials
                reports.append(
                    run_model_id_phase(
                        agent,
                        config,
                        rngs,
                        recorder=None,
                        max_trials=config.model_train_steps,  # trials are shorter than steps
                        max_steps=config.model_train_steps,
                        converge=None,
                        window=min(200, config.model_train_steps),
                        phase="I",
                        role="model",
                    )
                )
            control_phase = "II" if config.variant == INDIRECT else "I"
            report = _single_control_phase(agent, config, rngs, recorder, control_phase)
            reports.append(report)
            if not report.converged:
                fail_reason = "budget"
    except NumericFault as fault:
        fail_reason = f"numeric-fault: {fault}"

    stats = success_stats(recorder.records)
    return ExperimentResult(
        seed=seed,
        success=stats is not None,
        trials_to_success=stats[0] if stats else None,
        steps_to_success=stats[1] if stats else None,
        fail_reason=fail_reason,
        phase_reports=reports,
        records=recorder.records,
        series=smooth_series(recorder.records, config.bin_size),
    )


def _run_one(args: tuple[ExperimentConfig, int]) -> ExperimentResult:
    return run_experiment(*args)


def run_batch(config: ExperimentConfig, jobs: int = 1) -> tuple[RunSummary, list[ExperimentResult]]:
    """All seeds, optionally in parallel; aggregation after all complete."""
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(config.seeds))) as pool:
            results = list(pool.map(_run_one, [(config, s) for s in config.seeds]))
    else:
        results = [run_experiment(config, s) for s in config.seeds]
    summary = summarize(
        architecture=config.architecture,
        servo_rate_hz=config.servo_rate_hz,
        ll_mode=config.ll_mode,
        records_by_seed={r.seed: r.records for r in results},
        experiments=len(config.seeds),
    )
    return summary, results


def write_outputs(out_dir, config: ExperimentConfig, summary: RunSummary, results: list[ExperimentResult]) -> None:
    """trials.csv, series.csv, summary.csv plus the resolved config and phase log."""
    os.makedirs(out_dir, exist_ok=True)
    export_trials_csv(os.path.join(out_dir, "trials.csv"), results)
    export_series_csv(os.path.join(out_dir, "series.csv"), results)
    export_summary_csv(os.path.join(out_dir, "summary.csv"), summary)
    with open(os.path.join(out_dir, "config.txt"), "w") as fh:
        fh.write(describe(config))
    with open(os.path.join(out_dir, "phases.txt"), "w") as fh:
        for result in results:
            fh.write(format_result(result) + "\n")


def format_result(result: ExperimentResult) -> str:
    lines = [
        f"seed {result.seed}: "
        + ("success" if result.success else f"failed ({result.fail_reason})")
        + (
            f", trial {result.trials_to_success} after {result.steps_to_success} steps"
            if result.success
            else ""
        )
    ]
    for rep in result.phase_reports:
        metric = "n/a" if rep.metric is None else f"{rep.metric:.5g}"
        lines.append(
            f"  phase {rep.phase} [{rep.role}]: trials={rep.trials} steps={rep.steps} "
            f"converged={rep.converged} metric={metric}"
        )
    return "\n".join(lines)


def format_summary(summary: RunSummary) -> str:
    n_ave = "NA" if summary.n_ave is None else f"{summary.n_ave:.1f}"
    m_ave = "NA" if summary.m_ave is None else f"{summary.m_ave:.1f}"
    extras = ""
    if summary.n_std is not None:
        extras = f" (std dev, extension: n={summary.n_std:.1f} m={summary.m_std:.1f})"
    return (
        f"{summary.architecture} @ {summary.servo_rate_hz:g} Hz [{summary.ll_mode}]: "
        f"SR {summary.successes}/{summary.experiments}, N_ave {n_ave}, M_ave {m_ave}{extras}"
    )
