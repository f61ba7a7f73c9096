"""Multi-player bandits with capacity-shareable arms.

Simulation engine, decentralized policies coordinating over collision
signals, baseline heuristics, and a reproducible experiment harness.
"""

from .engine import (
    InvalidActionError,
    Observation,
    Policy,
    PublicEnvInfo,
    RunTrace,
    run,
    step,
)
from .model import (
    AssignmentProfile,
    EnvSpec,
    Feedback,
    InfeasibleAssignmentError,
    OptimalProfile,
    expected_reward,
    expected_reward_for,
    optimal_profile_for,
    oracle,
    per_slot_regret,
)
from .dpe import DpeSdiPolicy, ProtocolCorruptionError, UnsupportedFeedbackError
from .sic import SicSdaPolicy
from .baselines import FixedArmPolicy, HighestRewardPolicy, IdlestArmPolicy
from .scenarios import Scenario, ScenarioError, load_scenario, preset_scenarios
from .harness import AggregateResult, RunResult, emit_outputs, run_experiment

__all__ = [
    "AggregateResult",
    "AssignmentProfile",
    "DpeSdiPolicy",
    "EnvSpec",
    "Feedback",
    "FixedArmPolicy",
    "HighestRewardPolicy",
    "IdlestArmPolicy",
    "InfeasibleAssignmentError",
    "InvalidActionError",
    "Observation",
    "OptimalProfile",
    "Policy",
    "ProtocolCorruptionError",
    "PublicEnvInfo",
    "RunResult",
    "RunTrace",
    "Scenario",
    "ScenarioError",
    "SicSdaPolicy",
    "UnsupportedFeedbackError",
    "emit_outputs",
    "expected_reward",
    "expected_reward_for",
    "load_scenario",
    "optimal_profile_for",
    "oracle",
    "per_slot_regret",
    "preset_scenarios",
    "run",
    "run_experiment",
    "step",
]
