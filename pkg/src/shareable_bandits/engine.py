"""Synchronous lockstep simulator.

Each slot the engine polls every player for an arm, draws one Bernoulli
per-load reward per arm (shared by all players on that arm), and hands each
player only its own observation. Players never see anything else: the
observation carries the arm's total reward plus either the sharing count
(SDI) or a 1-bit shared flag (SDA).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np

from .model import (
    EnvSpec,
    Feedback,
    OptimalProfile,
    optimal_profile_for,
)

_CHUNK = 8192  # slots of pre-drawn arm randomness held at a time


class InvalidActionError(RuntimeError):
    """A policy emitted an arm index outside [0, K)."""


@dataclass(slots=True)
class Observation:
    """One player's view of one slot.

    ``reward`` is the arm's total reward (identical for every player on the
    arm). ``count`` is the number of players on the arm under SDI feedback
    and None under SDA; ``shared`` is the 1-bit flag count > 1 and is set in
    both modes.
    """

    arm: int
    reward: float
    count: int | None
    shared: bool


@dataclass(frozen=True)
class PublicEnvInfo:
    """What a player is allowed to know at construction time.

    Deliberately excludes the reward means, the capacities and the player
    count; policies must learn those through feedback.
    """

    num_arms: int
    horizon: int
    feedback: Feedback
    rng: np.random.Generator
    delta: float | None = None


class Policy(Protocol):
    def next_action(self, t: int) -> int: ...

    def observe(self, obs: Observation) -> None: ...


PolicyFactory = Callable[[int, PublicEnvInfo], Policy]
Probe = Callable[[int, Sequence[Policy], dict[int, int]], None]


@dataclass
class RunTrace:
    """Result of one simulated run."""

    horizon: int
    checkpoints: tuple[int, ...]
    checkpoint_regret: tuple[float, ...]
    final_regret: float
    optimal_mask: np.ndarray  # bool per slot: profile equalled the optimum
    phase_events: tuple[tuple[int, str], ...]  # player 0's phase transitions

    def optimal_fraction(self, last_slots: int) -> float:
        """Fraction of the final ``last_slots`` slots played exactly optimally."""
        window = self.optimal_mask[-last_slots:]
        return float(window.mean()) if len(window) else 0.0


def player_rngs(seed: int, num_players: int) -> list[np.random.Generator]:
    """Private per-player generators derived from the master seed.

    Stream 0 of the spawn is reserved for the environment's arm draws.
    """
    children = np.random.SeedSequence(seed).spawn(num_players + 1)
    return [np.random.Generator(np.random.PCG64(c)) for c in children[1:]]


def _env_rng(seed: int) -> np.random.Generator:
    child = np.random.SeedSequence(seed).spawn(1)[0]
    return np.random.Generator(np.random.PCG64(child))


def step(
    actions: Sequence[int], spec: EnvSpec, rng: np.random.Generator
) -> list[Observation]:
    """Advance one slot: draw per-arm rewards and build each player's view.

    Consumes exactly one uniform per arm from ``rng`` regardless of the
    actions, so arm draws are independent of player behaviour.
    """
    if len(actions) != spec.num_players:
        raise ValueError(
            f"expected {spec.num_players} actions, got {len(actions)}"
        )
    draws = rng.random(spec.num_arms)
    counts: dict[int, int] = {}
    for a in actions:
        if not 0 <= a < spec.num_arms:
            raise InvalidActionError(f"arm index {a} out of range [0, {spec.num_arms})")
        counts[a] = counts.get(a, 0) + 1
    sdi = spec.feedback is Feedback.SDI
    out = []
    for a in actions:
        c = counts[a]
        x = 1.0 if draws[a] < spec.means[a] else 0.0
        reward = (c if c <= spec.capacities[a] else spec.capacities[a]) * x
        out.append(Observation(a, reward, c if sdi else None, c > 1))
    return out


def run(
    policy_factory: PolicyFactory,
    spec: EnvSpec,
    *,
    checkpoints: Sequence[int] = (),
    probe: Probe | None = None,
) -> RunTrace:
    """Simulate ``spec.horizon`` slots with M freshly constructed players.

    Deterministic for a fixed spec: the environment and every player draw
    from generators derived from ``spec.seed``. Cumulative pseudo-regret
    (expected-value gap to the optimum) is sampled at ``checkpoints``.
    """
    opt: OptimalProfile = optimal_profile_for(spec)
    fstar = opt.value
    opt_items = {k: c for k, c in enumerate(opt.profile.counts) if c > 0}

    K, M, T = spec.num_arms, spec.num_players, spec.horizon
    means, caps = spec.means, spec.capacities
    sdi = spec.feedback is Feedback.SDI

    seed_children = np.random.SeedSequence(spec.seed).spawn(M + 1)
    env_rng = np.random.Generator(np.random.PCG64(seed_children[0]))
    policies = [
        policy_factory(
            i,
            PublicEnvInfo(
                num_arms=K,
                horizon=T,
                feedback=spec.feedback,
                rng=np.random.Generator(np.random.PCG64(seed_children[i + 1])),
            ),
        )
        for i in range(M)
    ]

    cps = sorted(set(int(c) for c in checkpoints))
    if any(c < 1 or c > T for c in cps):
        raise ValueError("checkpoints must lie in [1, horizon]")
    cp_regret: list[float] = []
    cp_next = cps[0] if cps else None
    cp_idx = 0

    optimal_mask = np.zeros(T, dtype=bool)
    phase_events: list[tuple[int, str]] = []
    last_phase: str | None = None

    regret = 0.0
    draws = np.empty((0, K))
    base = 0
    for t in range(T):
        if t - base >= len(draws):
            base = t
            draws = env_rng.random((min(_CHUNK, T - t), K))
        row = draws[t - base]

        arms = [p.next_action(t) for p in policies]
        counts: dict[int, int] = {}
        for a in arms:
            counts[a] = counts.get(a, 0) + 1

        f_t = 0.0
        for a, c in counts.items():
            if not 0 <= a < K:
                raise InvalidActionError(
                    f"arm index {a} out of range [0, {K}) at slot {t}"
                )
            f_t += (c if c <= caps[a] else caps[a]) * means[a]
        regret += fstar - f_t
        if counts == opt_items:
            optimal_mask[t] = True

        for i, p in enumerate(policies):
            a = arms[i]
            c = counts[a]
            x = 1.0 if row[a] < means[a] else 0.0
            reward = (c if c <= caps[a] else caps[a]) * x
            p.observe(Observation(a, reward, c if sdi else None, c > 1))

        phase = getattr(policies[0], "phase", None)
        if phase is not None and phase != last_phase:
            phase_events.append((t, str(phase)))
            last_phase = phase

        if cp_next is not None and t + 1 == cp_next:
            cp_regret.append(regret)
            cp_idx += 1
            cp_next = cps[cp_idx] if cp_idx < len(cps) else None

        if probe is not None:
            probe(t, policies, counts)

    return RunTrace(
        horizon=T,
        checkpoints=tuple(cps),
        checkpoint_regret=tuple(cp_regret),
        final_regret=regret,
        optimal_mask=optimal_mask,
        phase_events=tuple(phase_events),
    )
