"""Experiment configuration: flat ``key = value`` text with ``#`` comments.

A config plus a seed fully determines a run.  Unknown keys are rejected;
parse errors name the offending key and line.  Profile overrides ("desk"
scales everything to minutes on a workstation, "paper" restores the
published protocol magnitudes) are applied after the file so a profile
means the same thing regardless of the file contents; explicit seed
overrides from the command line win over both.

Budget semantics: trial caps are hard; step caps are checked when a trial
starts, so a running trial is never cut short by a phase budget (its own
ceiling is success_steps).  This mirrors the usual protocol of counting
steps while capping trials.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace

from .bac import DIRECT, INDIRECT, NoiseParams, TDParams
from .cartpole import DISTANCE_COST, REINFORCEMENT_MODES, Bounds, PhysicsParams
from .errors import ConfigError
from .hierarchy import HierarchyConfig
from .induction import RI_VARIANTS, RIParams

SINGLE_INDIRECT = "SingleIndirect"
SINGLE_DIRECT = "SingleDirect"
TWO_LEVEL_INDIRECT = "TwoLevelIndirect"
TWO_LEVEL_DIRECT = "TwoLevelDirect"
ARCHITECTURES = (SINGLE_INDIRECT, SINGLE_DIRECT, TWO_LEVEL_INDIRECT, TWO_LEVEL_DIRECT)

EXPLICIT_ROLE = "ExplicitRole"
RESPONSE_INDUCTION = "RI"
LL_MODES = (EXPLICIT_ROLE, RESPONSE_INDUCTION)

HL_REWARD_MODES = ("tick", "window")

TERMINAL_MODES = ("auto", "absorbing", "cutoff")

PROFILES = ("desk", "paper")


@dataclass(frozen=True)
class ExperimentConfig:
    # experiment shape
    architecture: str = SINGLE_INDIRECT
    servo_rate_hz: float = 50.0
    ll_mode: str = EXPLICIT_ROLE
    seeds: tuple[int, ...] = tuple(range(10))
    trial_limit: int = 1200  # single-level control trials; 3000 for Direct
    success_steps: int = 20000
    init_fraction: float = 0.4
    reinforcement: str = DISTANCE_COST
    reward_sign: float = -1.0  # sign applied to raw reinforcement before learning
    terminal_value: str = "auto"  # value assigned to a failed state (see terminal_for)

    # plant
    m_c: float = 1.0
    m_p: float = 0.1
    pole_len: float = 1.0
    gravity: float = 9.8
    force_scale: float = 10.0
    x_r: float = 2.4
    theta_r_deg: float = 12.0

    # networks and training
    n_hidden: int = 7
    weight_init: float = 0.3
    gamma: float = 0.95
    critic_lr: float = 0.02
    action_lr: float = 0.01
    model_lr: float = 0.05
    momentum: float = 0.1
    k_m: float = 1.0
    noise_sigma: float = 0.05
    model_train_steps: int = 1000  # single-level model identification budget

    # hierarchy
    n_ratio: int = 40
    plan_dim: int = 1
    plan_range_ll: float = 0.3
    plan_range_hl: float = 0.7
    hl_gamma: float = 0.95
    hl_noise_sigma: float = 0.05
    hl_reward: str = "tick"  # or "window": mean per-step reinforcement over the window
    include_plan_in_ll_critic: bool = True

    # response induction
    k1: float = 0.35
    k2: float = 0.14
    ri_variant: str = "printed"
    ri_delta_target: float = 0.175
    ri_stability_steps: int = 500

    # phase budgets (trials are hard caps, steps checked at trial start)
    ll_model_max_trials: int = 1600
    ll_model_max_steps: int = 20000
    ll_action_max_trials: int = 1800
    ll_action_max_steps: int = 260000
    hl_model_max_trials: int = 800
    hl_model_max_steps: int = 300000
    hl_action_max_trials: int = 320
    hl_action_max_steps: int = 20000

    # phase convergence criteria
    ll_model_converge: float = 0.02  # sliding mean |prediction error|, normalized units
    ll_model_window: int = 500  # steps
    ll_track_converge: float = 0.035  # sliding mean |theta - plan|, rad
    ll_track_window: int = 50  # trials
    hl_model_converge: float = 0.08
    hl_model_window: int = 100  # completed windows

    # reporting
    bin_size: int = 50
    profile: str = ""  # informational

    # --- derived views -------------------------------------------------------

    @property
    def dt(self) -> float:
        return 1.0 / self.servo_rate_hz

    @property
    def theta_r(self) -> float:
        return math.radians(self.theta_r_deg)

    def physics(self) -> PhysicsParams:
        return PhysicsParams(
            m_c=self.m_c,
            m_p=self.m_p,
            pole_len=self.pole_len,
            gravity=self.gravity,
            force_scale=self.force_scale,
            dt=self.dt,
        )

    def bounds(self) -> Bounds:
        return Bounds(x_r=self.x_r, theta_r=self.theta_r)

    def td(self) -> TDParams:
        return TDParams(gamma=self.gamma, critic_lr=self.critic_lr, action_lr=self.action_lr)

    def hl_td(self) -> TDParams:
        return TDParams(gamma=self.hl_gamma, critic_lr=self.critic_lr, action_lr=self.action_lr)

    def noise(self) -> NoiseParams:
        return NoiseParams(sigma=self.noise_sigma)

    def hl_noise(self) -> NoiseParams:
        return NoiseParams(sigma=self.hl_noise_sigma)

    def hierarchy(self) -> HierarchyConfig:
        return HierarchyConfig(
            n_ratio=self.n_ratio,
            plan_dim=self.plan_dim,
            plan_range_ll_training=self.plan_range_ll,
            plan_range_hl_model=self.plan_range_hl,
        )

    def ri(self) -> RIParams:
        # plan inputs sit after the four state inputs of the LL action net
        return RIParams(
            k1=self.k1,
            k2=self.k2,
            plan_input_indices=tuple(range(4, 4 + self.plan_dim)),
            variant=self.ri_variant,
        )

    def terminal_for(self, cost_like: bool) -> str:
        """Resolve the terminal-value convention for a reinforcement signal.

        "absorbing" treats the failed configuration as persisting, so its
        cost keeps accruing and failure is always the worst outcome; with a
        pure cost signal and a hard episode cut the cheapest policy would
        otherwise be to end the episode.  "cutoff" is the plain
        no-bootstrap stop, the natural reading for the sparse
        failure-driven signal whose -1 already makes failure worst.
        """
        if self.terminal_value != "auto":
            return self.terminal_value
        return "absorbing" if cost_like else "cutoff"

    @property
    def is_two_level(self) -> bool:
        return self.architecture in (TWO_LEVEL_INDIRECT, TWO_LEVEL_DIRECT)

    @property
    def variant(self) -> str:
        return INDIRECT if self.architecture in (SINGLE_INDIRECT, TWO_LEVEL_INDIRECT) else DIRECT


_INT_KEYS = {
    "trial_limit",
    "success_steps",
    "n_hidden",
    "model_train_steps",
    "n_ratio",
    "plan_dim",
    "ri_stability_steps",
    "ll_model_max_trials",
    "ll_model_max_steps",
    "ll_action_max_trials",
    "ll_action_max_steps",
    "hl_model_max_trials",
    "hl_model_max_steps",
    "hl_action_max_trials",
    "hl_action_max_steps",
    "ll_model_window",
    "ll_track_window",
    "hl_model_window",
    "bin_size",
}

_FLOAT_KEYS = {
    "servo_rate_hz",
    "init_fraction",
    "reward_sign",
    "m_c",
    "m_p",
    "pole_len",
    "gravity",
    "force_scale",
    "x_r",
    "theta_r_deg",
    "weight_init",
    "gamma",
    "critic_lr",
    "action_lr",
    "model_lr",
    "momentum",
    "k_m",
    "noise_sigma",
    "plan_range_ll",
    "plan_range_hl",
    "hl_gamma",
    "hl_noise_sigma",
    "k1",
    "k2",
    "ri_delta_target",
    "ll_model_converge",
    "ll_track_converge",
    "hl_model_converge",
}

_BOOL_KEYS = {"include_plan_in_ll_critic"}

_CHOICE_KEYS = {
    "architecture": ARCHITECTURES,
    "ll_mode": LL_MODES,
    "reinforcement": REINFORCEMENT_MODES,
    "hl_reward": HL_REWARD_MODES,
    "ri_variant": RI_VARIANTS,
    "terminal_value": TERMINAL_MODES,
}

_ALL_KEYS = (
    _INT_KEYS
    | _FLOAT_KEYS
    | _BOOL_KEYS
    | set(_CHOICE_KEYS)
    | {"seeds", "reward_sign"}
)

# keys whose defaults depend on other keys; only applied when left unset
_LINKED_DEFAULTS = ("trial_limit", "reward_sign", "hl_gamma", "hl_noise_sigma",
                    "ll_action_max_trials", "ll_action_max_steps",
                    "hl_action_max_trials", "hl_action_max_steps")

_POSITIVE_KEYS = {
    "servo_rate_hz", "m_c", "m_p", "pole_len", "gravity", "force_scale", "x_r",
    "theta_r_deg", "weight_init", "critic_lr", "action_lr", "model_lr", "k_m",
    "plan_range_ll", "plan_range_hl", "k1", "k2", "ri_delta_target",
    "ll_model_converge", "ll_track_converge", "hl_model_converge",
}

_POSITIVE_INT_KEYS = {
    "trial_limit", "success_steps", "n_hidden", "plan_dim", "bin_size",
    "ll_model_window", "ll_track_window", "hl_model_window", "ri_stability_steps",
}


def _parse_value(key: str, raw: str, lineno: int):
    where = f"line {lineno}: key '{key}'"
    try:
        if key == "seeds":
            return tuple(int(part.strip()) for part in raw.split(",") if part.strip() != "")
        if key in _INT_KEYS:
            return int(raw)
        if key == "reward_sign":
            if raw.strip().lower() == "auto":
                return None
            value = float(raw)
            if value not in (1.0, -1.0):
                raise ConfigError(f"{where}: reward_sign must be auto, +1 or -1")
            return value
        if key in _FLOAT_KEYS:
            return float(raw)
        if key in _BOOL_KEYS:
            lowered = raw.strip().lower()
            if lowered not in ("true", "false"):
                raise ConfigError(f"{where}: expected true or false, got {raw!r}")
            return lowered == "true"
        if key in _CHOICE_KEYS:
            value = raw.strip()
            if value not in _CHOICE_KEYS[key]:
                raise ConfigError(f"{where}: must be one of {_CHOICE_KEYS[key]}, got {value!r}")
            return value
    except ConfigError:
        raise
    except ValueError:
        raise ConfigError(f"{where}: malformed value {raw!r}") from None
    raise ConfigError(f"{where}: unknown key")


def _validate(config: ExperimentConfig) -> None:
    for key in _POSITIVE_KEYS:
        if getattr(config, key) <= 0:
            raise ConfigError(f"key '{key}' must be positive, got {getattr(config, key)}")
    for key in _POSITIVE_INT_KEYS:
        if getattr(config, key) < 1:
            raise ConfigError(f"key '{key}' must be >= 1, got {getattr(config, key)}")
    for key in ("ll_model_max_trials", "ll_model_max_steps", "ll_action_max_trials",
                "ll_action_max_steps", "hl_model_max_trials", "hl_model_max_steps",
                "hl_action_max_trials", "hl_action_max_steps", "model_train_steps"):
        if getattr(config, key) < 0:
            raise ConfigError(f"key '{key}' must be >= 0, got {getattr(config, key)}")
    if not 0.0 < config.gamma < 1.0:
        raise ConfigError(f"key 'gamma' must be in (0, 1), got {config.gamma}")
    if not 0.0 < config.hl_gamma < 1.0:
        raise ConfigError(f"key 'hl_gamma' must be in (0, 1), got {config.hl_gamma}")
    if not 0.0 <= config.momentum < 1.0:
        raise ConfigError(f"key 'momentum' must be in [0, 1), got {config.momentum}")
    if not 0.0 <= config.init_fraction <= 1.0:
        raise ConfigError(f"key 'init_fraction' must be in [0, 1], got {config.init_fraction}")
    if config.noise_sigma < 0 or config.hl_noise_sigma < 0:
        raise ConfigError("noise sigmas must be >= 0")
    if config.n_ratio < 2:
        raise ConfigError(f"key 'n_ratio' must be >= 2, got {config.n_ratio}")
    if not config.seeds:
        raise ConfigError("key 'seeds' must contain at least one seed")
    if len(set(config.seeds)) != len(config.seeds):
        raise ConfigError("key 'seeds' contains duplicates")
    if config.ll_mode == EXPLICIT_ROLE and config.plan_dim != 1:
        raise ConfigError("ExplicitRole requires plan_dim = 1 (the plan is a commanded pole angle)")


def _linked_defaults(values: dict) -> dict:
    """Fill defaults that depend on other keys, without clobbering the file."""
    out = dict(values)
    arch = out.get("architecture", SINGLE_INDIRECT)
    direct = arch in (SINGLE_DIRECT, TWO_LEVEL_DIRECT)
    out.setdefault("trial_limit", 3000 if direct else 1200)
    if out.get("reward_sign") is None:
        out["reward_sign"] = 1.0 if out.get("reinforcement", DISTANCE_COST) == "FailureDriven" else -1.0
    out.setdefault("hl_gamma", out.get("gamma", 0.95))
    out.setdefault("hl_noise_sigma", out.get("noise_sigma", 0.05))
    if direct:
        # published two-level Direct budgets differ from the Indirect ones
        out.setdefault("ll_action_max_trials", 3200)
        out.setdefault("ll_action_max_steps", 1300000)
        out.setdefault("hl_action_max_trials", 900)
        out.setdefault("hl_action_max_steps", 100000)
    return out


# Profile overrides are applied on top of the file so that a profile means
# the same scale everywhere.  The desk profile shrinks the protocol to run
# in minutes; paper restores the published magnitudes (30 single-level
# experiments, 10 two-level, 15 with response induction).
_DESK_OVERRIDES = {
    "success_steps": 5000,
    "trial_limit": 400,
    "seeds": tuple(range(10)),
    "model_train_steps": 3000,  # the short published budget needs long runs to recover
    "ll_model_max_trials": 800,
    "ll_model_max_steps": 10000,
    "ll_action_max_trials": 900,
    "ll_action_max_steps": 130000,
    "hl_model_max_trials": 400,
    "hl_model_max_steps": 75000,
    "hl_action_max_trials": 160,
    "hl_action_max_steps": 10000,
}


def _paper_overrides(values: dict) -> dict:
    arch = values.get("architecture", SINGLE_INDIRECT)
    if arch in (SINGLE_INDIRECT, SINGLE_DIRECT):
        seeds = tuple(range(30))
    elif values.get("ll_mode", EXPLICIT_ROLE) == RESPONSE_INDUCTION:
        seeds = tuple(range(15))
    else:
        seeds = tuple(range(10))
    return {"success_steps": 20000, "seeds": seeds}


def parse_config(text: str, profile: str | None = None, seeds: tuple[int, ...] | None = None) -> ExperimentConfig:
    """Parse config text, then apply the profile and explicit seed override."""
    values: dict = {}
    lines_seen: dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line.rstrip()!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _ALL_KEYS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in lines_seen:
            raise ConfigError(f"line {lineno}: duplicate key '{key}' (first on line {lines_seen[key]})")
        lines_seen[key] = lineno
        values[key] = _parse_value(key, raw, lineno)

    if profile:
        if profile not in PROFILES:
            raise ConfigError(f"unknown profile {profile!r}")
        overrides = dict(_DESK_OVERRIDES) if profile == "desk" else _paper_overrides(values)
        if profile == "paper":
            # paper uses the architecture-linked trial limit even if the file shrank it
            values.pop("trial_limit", None)
        values.update(overrides)
        values["profile"] = profile
    values = _linked_defaults(values)
    if seeds is not None:
        if not seeds:
            raise ConfigError("seed override must contain at least one seed")
        values["seeds"] = tuple(seeds)

    known_fields = {f.name for f in fields(ExperimentConfig)}
    config = ExperimentConfig(**{k: v for k, v in values.items() if k in known_fields})
    _validate(config)
    return config


def load_config(path, profile: str | None = None, seeds: tuple[int, ...] | None = None) -> ExperimentConfig:
    with open(path) as fh:
        return parse_config(fh.read(), profile=profile, seeds=seeds)


def describe(config: ExperimentConfig) -> str:
    """One key = value line per field, parseable by parse_config."""
    out = []
    for f in fields(ExperimentConfig):
        value = getattr(config, f.name)
        if f.name == "seeds":
            value = ",".join(str(s) for s in value)
        elif isinstance(value, bool):
            value = "true" if value else "false"
        if f.name == "profile":
            out.append(f"# profile = {value or '(none)'}")
            continue
        out.append(f"{f.name} = {value}")
    return "\n".join(out) + "\n"
