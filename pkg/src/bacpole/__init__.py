"""Backpropagated adaptive critic controllers on a cart-pole plant.

Single-level Indirect/Direct agents, the two-level hierarchy with explicit
role or response-induction low-level learning, a faithful cart-pole
simulator, and a batch experiment harness with CSV reporting.
"""

from .bac import BacAgent, DIRECT, INDIRECT, NoiseParams, TDParams, td_error
from .cartpole import Bounds, CartPoleState, PhysicsParams
from .config import ExperimentConfig, load_config, parse_config
from .errors import ConfigError, NumericFault
from .records import RunSummary, TrialRecord, smooth_series, summarize
from .runner import run_batch, run_experiment

__version__ = "0.1.0"

__all__ = [
    "BacAgent",
    "Bounds",
    "CartPoleState",
    "ConfigError",
    "DIRECT",
    "ExperimentConfig",
    "INDIRECT",
    "NoiseParams",
    "NumericFault",
    "PhysicsParams",
    "RunSummary",
    "TDParams",
    "TrialRecord",
    "load_config",
    "parse_config",
    "run_batch",
    "run_experiment",
    "smooth_series",
    "summarize",
    "td_error",
    "__version__",
]
