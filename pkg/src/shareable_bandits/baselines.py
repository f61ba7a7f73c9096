"""Heuristic comparison policies and scripted dummies for tests.

Both heuristics are fully decentralized: they see only their own
observations. Each starts with one deterministic round-robin sweep over all
arms so every empirical statistic is defined, then commits to a greedy
choice every slot.
"""

from __future__ import annotations

from .engine import Observation, PublicEnvInfo


def _warmup_arm(player_id: int, t: int, num_arms: int) -> int:
    return (player_id + t + 1) % num_arms


class HighestRewardPolicy:
    """Play the arm with the highest own empirical total-reward mean."""

    def __init__(self, player_id: int, env: PublicEnvInfo) -> None:
        self.player_id = player_id
        self.num_arms = env.num_arms
        self.phase = "explore"
        self._sums = [0.0] * env.num_arms
        self._pulls = [0] * env.num_arms
        self._means = [0.0] * env.num_arms
        self._best = 0

    def _rescan(self) -> None:
        means = self._means
        best = 0
        for k in range(1, self.num_arms):
            if means[k] > means[best]:
                best = k
        self._best = best

    def next_action(self, t: int) -> int:
        if t < self.num_arms:
            return _warmup_arm(self.player_id, t, self.num_arms)
        return self._best

    def observe(self, obs: Observation) -> None:
        k = obs.arm
        self._pulls[k] += 1
        self._sums[k] += obs.reward
        old = self._means[k]
        mean = self._sums[k] / self._pulls[k]
        self._means[k] = mean
        # Full argmax rescans only when the leader arm's mean drops.
        if k == self._best:
            if mean < old:
                self._rescan()
        elif mean > self._means[self._best] or (
            mean == self._means[self._best] and k < self._best
        ):
            self._best = k


class IdlestArmPolicy:
    """Play the arm this player has seen shared least often, by rate."""

    def __init__(self, player_id: int, env: PublicEnvInfo) -> None:
        self.player_id = player_id
        self.num_arms = env.num_arms
        self.phase = "explore"
        self._pulls = [0] * env.num_arms
        self._shared = [0] * env.num_arms

    def next_action(self, t: int) -> int:
        if t < self.num_arms:
            return _warmup_arm(self.player_id, t, self.num_arms)
        best, best_rate = 0, float("inf")
        for k in range(self.num_arms):
            if self._pulls[k] == 0:
                continue
            rate = self._shared[k] / self._pulls[k]
            if rate < best_rate:
                best, best_rate = k, rate
        return best

    def observe(self, obs: Observation) -> None:
        self._pulls[obs.arm] += 1
        if obs.shared:
            self._shared[obs.arm] += 1


class FixedArmPolicy:
    """Test dummy: always play one arm."""

    def __init__(self, player_id: int, env: PublicEnvInfo, arm: int) -> None:
        self.arm = arm
        self.phase = "exploit"

    def next_action(self, t: int) -> int:
        return self.arm

    def observe(self, obs: Observation) -> None:
        pass


def fixed_profile_factory(counts: list[int]):
    """Test dummy factory: realize a fixed assignment profile every slot."""
    slots: list[int] = []
    for arm, c in enumerate(counts):
        slots.extend([arm] * c)

    def factory(player_id: int, env: PublicEnvInfo) -> FixedArmPolicy:
        return FixedArmPolicy(player_id, env, slots[player_id])

    return factory
