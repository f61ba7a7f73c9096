"""Ground-truth environment model: specs, assignment profiles, and regret.

Arms are indexed 0..K-1 throughout. An assignment profile counts how many
players sit on each arm in one slot; the optimal profile fills arms in
descending-mean order up to each arm's resource capacity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence


class Feedback(str, Enum):
    """What a player learns about competition on the arm it pulled."""

    SDI = "sdi"  # observe the exact number of players on the arm
    SDA = "sda"  # observe only whether the arm was shared (count > 1)


class InfeasibleAssignmentError(ValueError):
    """Total arm capacity cannot absorb the requested number of players."""


@dataclass(frozen=True)
class EnvSpec:
    """Immutable description of one simulated environment."""

    num_arms: int
    num_players: int
    means: tuple[float, ...]
    capacities: tuple[int, ...]
    horizon: int
    feedback: Feedback = Feedback.SDI
    seed: int = 0

    def __post_init__(self) -> None:
        object.__setattr__(self, "means", tuple(float(m) for m in self.means))
        object.__setattr__(self, "capacities", tuple(int(c) for c in self.capacities))
        object.__setattr__(self, "feedback", Feedback(self.feedback))
        if self.num_arms < 1 or self.num_players < 1:
            raise ValueError("need at least one arm and one player")
        if self.num_players >= self.num_arms:
            raise ValueError(
                f"num_players ({self.num_players}) must be < num_arms ({self.num_arms})"
            )
        if len(self.means) != self.num_arms or len(self.capacities) != self.num_arms:
            raise ValueError("means and capacities must have one entry per arm")
        if any(not 0.0 <= m <= 1.0 for m in self.means):
            raise ValueError("per-load reward means must lie in [0, 1]")
        if any(not 1 <= c <= self.num_players for c in self.capacities):
            raise ValueError("capacities must lie in [1, num_players]")
        if self.horizon < 1:
            raise ValueError("horizon must be positive")


@dataclass(frozen=True)
class AssignmentProfile:
    """Per-arm player counts for one slot; counts sum to the player total."""

    counts: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "counts", tuple(int(c) for c in self.counts))
        if any(c < 0 for c in self.counts):
            raise ValueError("assignment counts must be non-negative")

    @property
    def num_players(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class OptimalProfile:
    """Greedy capacity-filling optimum with its least-favored arm and value."""

    profile: AssignmentProfile
    least_favored: int
    value: float


def _counts_of(profile: AssignmentProfile | Sequence[int]) -> Sequence[int]:
    return profile.counts if isinstance(profile, AssignmentProfile) else profile


def expected_reward(
    profile: AssignmentProfile | Sequence[int],
    means: Sequence[float],
    capacities: Sequence[int],
) -> float:
    """Expected one-slot reward of a profile: sum of min(a_k, m_k) * mu_k."""
    counts = _counts_of(profile)
    if len(counts) != len(means) or len(means) != len(capacities):
        raise ValueError("profile, means and capacities must have equal length")
    return sum(
        (a if a <= m else m) * mu for a, mu, m in zip(counts, means, capacities)
    )


def expected_reward_for(
    profile: AssignmentProfile | Sequence[int], spec: EnvSpec
) -> float:
    return expected_reward(profile, spec.means, spec.capacities)


def oracle(
    means: Sequence[float], capacities: Sequence[int], num_players: int
) -> OptimalProfile:
    """Best assignment of ``num_players`` onto arms with capped sharing.

    Fills arms in descending-mean order (ties broken by lower arm index) up
    to each capacity; the last arm touched receives the remainder and is
    reported as the least-favored arm, as an original arm index.
    """
    if len(means) != len(capacities):
        raise ValueError("means and capacities must have equal length")
    if num_players < 1:
        raise ValueError("num_players must be positive")
    if sum(capacities) < num_players:
        raise InfeasibleAssignmentError(
            f"total capacity {sum(capacities)} cannot host {num_players} players"
        )
    order = sorted(range(len(means)), key=lambda k: (-means[k], k))
    counts = [0] * len(means)
    remaining = num_players
    least = order[0]
    for k in order:
        take = min(capacities[k], remaining)
        if take == 0:
            break
        counts[k] = take
        remaining -= take
        least = k
    profile = AssignmentProfile(tuple(counts))
    value = expected_reward(profile, means, capacities)
    return OptimalProfile(profile=profile, least_favored=least, value=value)


def per_slot_regret(
    profile: AssignmentProfile | Sequence[int],
    opt: OptimalProfile,
    means: Sequence[float],
    capacities: Sequence[int],
) -> float:
    """Expected one-slot gap to the optimum; tiny negatives are float noise."""
    gap = opt.value - expected_reward(profile, means, capacities)
    if gap < 0.0:
        if gap < -1e-12:
            raise ValueError(f"profile beats the supposed optimum by {-gap}")
        gap = 0.0
    return gap


def optimal_profile_for(spec: EnvSpec) -> OptimalProfile:
    return oracle(spec.means, spec.capacities, spec.num_players)
