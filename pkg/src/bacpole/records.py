"""Trial bookkeeping, aggregate statistics, and CSV export.

Summaries are a pure function of the trial records plus the experiment
count, so a summary recomputed from an exported trials.csv is exactly the
in-memory one.  Averages (N_ave, M_ave) count trials and time steps prior
to the first successful trial and are taken over successful experiments
only; the standard deviations are an extension beyond the usual reporting
and stay out of summary.csv.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

from .errors import ConfigError

TERMINAL_REASONS = ("failure-x", "failure-theta", "success", "budget")


@dataclass(frozen=True)
class TrialRecord:
    trial: int  # 1-based index within the experiment, across phases
    steps: int
    terminal_reason: str
    mean_delta_plan: float | None = None  # trial-mean plan sensitivity (RI phases)


@dataclass(frozen=True)
class PhaseReport:
    phase: str  # "I".."IV"
    role: str  # model, control, ll_model, ll_action, hl_model, hl_action
    trials: int
    steps: int
    converged: bool
    metric: float | None = None  # final value of the phase's convergence metric
    note: str = ""


@dataclass(frozen=True)
class SeriesBin:
    index: int  # 0-based
    mean_steps: float
    mean_delta: float | None
    partial: bool


@dataclass(frozen=True)
class SmoothedSeries:
    bin_size: int
    bins: tuple[SeriesBin, ...]


@dataclass
class ExperimentResult:
    seed: int
    success: bool
    trials_to_success: int | None
    steps_to_success: int | None
    fail_reason: str | None
    phase_reports: list[PhaseReport] = field(default_factory=list)
    records: list[TrialRecord] = field(default_factory=list)
    series: SmoothedSeries | None = None


@dataclass(frozen=True)
class RunSummary:
    architecture: str
    servo_rate_hz: float
    ll_mode: str
    experiments: int
    successes: int
    n_ave: float | None  # average trials to success, successful runs only
    m_ave: float | None  # average time steps prior to the successful trial
    n_std: float | None = None  # population std-devs; extension, not in summary.csv
    m_std: float | None = None

    @property
    def success_ratio(self) -> float:
        return self.successes / self.experiments if self.experiments else 0.0


class Recorder:
    """Appends trial records with a running 1-based index."""

    def __init__(self):
        self.records: list[TrialRecord] = []

    def add(self, steps: int, terminal_reason: str, mean_delta_plan: float | None = None) -> TrialRecord:
        rec = TrialRecord(
            trial=len(self.records) + 1,
            steps=steps,
            terminal_reason=terminal_reason,
            mean_delta_plan=mean_delta_plan,
        )
        self.records.append(rec)
        return rec


def smooth_series(records: list[TrialRecord], bin_size: int = 50) -> SmoothedSeries:
    """Bin consecutive trials and average steps (and delta, where logged)."""
    if bin_size < 1:
        raise ConfigError(f"bin_size must be >= 1, got {bin_size}")
    bins = []
    for start in range(0, len(records), bin_size):
        group = records[start : start + bin_size]
        deltas = [r.mean_delta_plan for r in group if r.mean_delta_plan is not None]
        bins.append(
            SeriesBin(
                index=start // bin_size,
                mean_steps=sum(r.steps for r in group) / len(group),
                mean_delta=sum(deltas) / len(deltas) if deltas else None,
                partial=len(group) < bin_size,
            )
        )
    return SmoothedSeries(bin_size=bin_size, bins=tuple(bins))


def success_stats(records: list[TrialRecord]) -> tuple[int, int] | None:
    """(trials to success, steps prior to the successful trial), or None.

    The trial count includes the successful trial itself; the step count
    does not include its steps.
    """
    for rec in records:
        if rec.terminal_reason == "success":
            prior = [r.steps for r in records if r.trial < rec.trial]
            return rec.trial, sum(prior)
    return None


def _mean_std(values: list[int]) -> tuple[float, float]:
    mean = sum(values) / len(values)
    var = sum((v - mean) ** 2 for v in values) / len(values)
    return mean, math.sqrt(var)


def summarize(
    architecture: str,
    servo_rate_hz: float,
    ll_mode: str,
    records_by_seed: dict[int, list[TrialRecord]],
    experiments: int,
) -> RunSummary:
    n_list, m_list = [], []
    for seed in sorted(records_by_seed):
        stats = success_stats(records_by_seed[seed])
        if stats is not None:
            n_list.append(stats[0])
            m_list.append(stats[1])
    if n_list:
        n_ave, n_std = _mean_std(n_list)
        m_ave, m_std = _mean_std(m_list)
    else:
        n_ave = n_std = m_ave = m_std = None
    return RunSummary(
        architecture=architecture,
        servo_rate_hz=servo_rate_hz,
        ll_mode=ll_mode,
        experiments=experiments,
        successes=len(n_list),
        n_ave=n_ave,
        m_ave=m_ave,
        n_std=n_std,
        m_std=m_std,
    )


# --- CSV interchange ---------------------------------------------------------
#
# trials.csv : seed,trial,steps,terminal_reason,mean_delta_plan
# series.csv : seed,bin_index,mean_steps,mean_delta,partial
# summary.csv: architecture,servo_rate_hz,ll_mode,experiments,successes,n_ave,m_ave
#
# Floats are written with repr-style round-tripping and a plain decimal
# point; missing scalars are empty fields, missing averages are "NA".

TRIALS_HEADER = ["seed", "trial", "steps", "terminal_reason", "mean_delta_plan"]
SERIES_HEADER = ["seed", "bin_index", "mean_steps", "mean_delta", "partial"]
SUMMARY_HEADER = ["architecture", "servo_rate_hz", "ll_mode", "experiments", "successes", "n_ave", "m_ave"]


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def export_trials_csv(path, results: list[ExperimentResult]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRIALS_HEADER)
        for result in results:
            for rec in result.records:
                writer.writerow(
                    [result.seed, rec.trial, rec.steps, rec.terminal_reason, _fmt(rec.mean_delta_plan)]
                )


def parse_trials_csv(path) -> dict[int, list[TrialRecord]]:
    by_seed: dict[int, list[TrialRecord]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != TRIALS_HEADER:
            raise ConfigError(f"unexpected trials.csv header: {header}")
        for row in reader:
            seed, trial, steps, reason, delta = row
            if reason not in TERMINAL_REASONS:
                raise ConfigError(f"unknown terminal_reason {reason!r}")
            by_seed.setdefault(int(seed), []).append(
                TrialRecord(
                    trial=int(trial),
                    steps=int(steps),
                    terminal_reason=reason,
                    mean_delta_plan=float(delta) if delta else None,
                )
            )
    return by_seed


def export_series_csv(path, results: list[ExperimentResult]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SERIES_HEADER)
        for result in results:
            if result.series is None:
                continue
            for b in result.series.bins:
                writer.writerow([result.seed, b.index, _fmt(b.mean_steps), _fmt(b.mean_delta), _fmt(b.partial)])


def parse_series_csv(path) -> dict[int, list[SeriesBin]]:
    by_seed: dict[int, list[SeriesBin]] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SERIES_HEADER:
            raise ConfigError(f"unexpected series.csv header: {header}")
        for row in reader:
            seed, index, mean_steps, mean_delta, partial = row
            by_seed.setdefault(int(seed), []).append(
                SeriesBin(
                    index=int(index),
                    mean_steps=float(mean_steps),
                    mean_delta=float(mean_delta) if mean_delta else None,
                    partial=partial == "1",
                )
            )
    return by_seed


def export_summary_csv(path, summary: RunSummary) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_HEADER)
        writer.writerow(
            [
                summary.architecture,
                _fmt(summary.servo_rate_hz),
                summary.ll_mode,
                summary.experiments,
                summary.successes,
                "NA" if summary.n_ave is None else _fmt(summary.n_ave),
                "NA" if summary.m_ave is None else _fmt(summary.m_ave),
            ]
        )


def parse_summary_csv(path) -> dict:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != SUMMARY_HEADER:
            raise ConfigError(f"unexpected summary.csv header: {header}")
        row = next(reader)
    return {
        "architecture": row[0],
        "servo_rate_hz": float(row[1]),
        "ll_mode": row[2],
        "experiments": int(row[3]),
        "successes": int(row[4]),
        "n_ave": None if row[5] == "NA" else float(row[5]),
        "m_ave": None if row[6] == "NA" else float(row[6]),
    }


def recompute_summary(trials_path, summary_path) -> RunSummary:
    """Rebuild the run summary from exported CSVs (determinism check)."""
    meta = parse_summary_csv(summary_path)
    return summarize(
        architecture=meta["architecture"],
        servo_rate_hz=meta["servo_rate_hz"],
        ll_mode=meta["ll_mode"],
        records_by_seed=parse_trials_csv(trials_path),
        experiments=meta["experiments"],
    )
