"""Phase-based elimination policy for 1-bit (SDA) feedback.

Players orthogonalize onto K-1 arms, then a fixed 2K-2-slot sweep turns
arm claims into dense ranks and reveals the player count. Afterwards the
active players loop through doubling exploration phases and two scheduled
communication blocks: followers upload their per-arm reward sums to the
leader one bit per slot (joining the leader's arm means 1), and the leader
broadcasts accept/reject/bound updates by joining each follower's sweep.
Accepted arms absorb exactly their capacity in players; everyone else keeps
exploring until the last needed arm is certified.

The same state machine runs unchanged under count (SDI) feedback, where the
shared flag is implied by the count.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .dpe import ProtocolCorruptionError
from .engine import Observation, PublicEnvInfo
from .stats import CapacityBounds, PlayerStats, means_separated, update_capacity_bounds

NUM_FORTH_STEPS = 5  # reject / accept / least-favored / lower+1 / upper-1


def encode_stat(value: int, nbits: int) -> list[int]:
    """MSB-first bit encoding of a non-negative integer reward sum."""
    if value < 0 or value >= 1 << nbits:
        raise ValueError(f"value {value} does not fit in {nbits} bits")
    return [(value >> (nbits - 1 - b)) & 1 for b in range(nbits)]


def decode_bits(bits: list[int]) -> int:
    out = 0
    for b in bits:
        out = (out << 1) | (1 if b else 0)
    return out


def upload_bits(phase: int, num_players: int) -> int:
    """Bits per upload cell: a phase-p per-arm reward sum is at most M * 2^p."""
    return phase + 1 + (math.ceil(math.log2(num_players)) if num_players > 1 else 0)


def rank_assign_arm(ext_rank: int, slot: int, num_arms: int) -> int:
    """Arm played in the rank-assignment sweep (0-based arm index).

    ``ext_rank`` is the 1-based arm claim from orthogonalization and
    ``slot`` is 1-based within the 2K-2-slot sweep. Each player sits on its
    claimed arm except for one hop window, so every pair of players shares
    an arm exactly once (on the higher claim's arm).
    """
    if slot <= 2 * ext_rank or slot >= num_arms + ext_rank:
        return ext_rank - 1
    return slot - ext_rank - 1


@dataclass
class LeaderDecision:
    """Output of one accept/reject evaluation, broadcast to followers."""

    accepted: set[int] = field(default_factory=set)
    rejected: set[int] = field(default_factory=set)
    least_favored: int | None = None


def evaluate_accept_reject(
    mu_hat: dict[int, float],
    pulls: dict[int, int],
    active: list[int],
    active_players: int,
    lower: list[int],
    upper: list[int],
    learned: set[int],
    horizon: int,
) -> LeaderDecision:
    """Classify active arms from merged statistics and capacity bounds.

    An arm is accepted when it is fully learned and the capacity upper
    bounds of every arm it cannot dominate fit within the active players;
    rejected when confidently dominated arms can already absorb everyone;
    the least-favored arm dominates all other active arms and can absorb
    all remaining players by itself.
    """
    sep = {
        (k, j): means_separated(mu_hat[k], pulls[k], mu_hat[j], pulls[j], horizon)
        for k in active
        for j in active
        if k != j
    }
    decision = LeaderDecision()
    for k in active:
        tied_upper = upper[k] + sum(upper[j] for j in active if j != k and not sep[k, j])
        if k in learned and tied_upper <= active_players:
            decision.accepted.add(k)
        dominated_lower = sum(lower[j] for j in active if j != k and sep[j, k])
        if dominated_lower >= active_players:
            decision.rejected.add(k)
        if (
            lower[k] >= active_players
            and all(sep[k, j] for j in active if j != k)
        ):
            if decision.least_favored is not None:
                raise ProtocolCorruptionError("two arms both dominate all others")
            decision.least_favored = k
    overlap = decision.accepted & decision.rejected
    if overlap:
        raise ProtocolCorruptionError(f"arms {overlap} both accepted and rejected")
    return decision


def apply_decision(
    rank: int,
    decision: LeaderDecision,
    active: list[int],
    active_players: int,
    lower: list[int],
) -> tuple[int | None, list[int], int, dict[int, int]]:
    """Shared post-broadcast update: who exploits what, who stays active.

    Returns (exploit_arm or None, new active arms, new active player count,
    allocation per active arm for the next exploration phase). Ranks above
    the new player count exploit the accepted arms, filled in index order
    by capacity; if a least-favored arm exists every active player exploits
    it; the remaining players rebuild the exploration allocation.
    """
    accepted = sorted(decision.accepted)
    players_left = active_players - sum(lower[k] for k in accepted)
    new_active = [
        k
        for k in active
        if k not in decision.accepted
        and k not in decision.rejected
        and k != decision.least_favored
    ]
    if decision.least_favored is not None:
        return decision.least_favored, new_active, players_left, {}
    if rank > players_left:
        target = rank - players_left
        total = 0
        for k in accepted:
            total += lower[k]
            if total >= target:
                return k, new_active, players_left, {}
        raise ProtocolCorruptionError(
            f"rank {rank} has no accepted arm slot (capacity total {total})"
        )
    if players_left > 0 and not new_active:
        raise ProtocolCorruptionError("active players remain but no arms do")
    alloc = {k: 1 for k in new_active}
    surplus = players_left - len(new_active)
    if surplus > 0:
        for k in new_active:
            add = min(lower[k] - 1, surplus)
            alloc[k] += add
            surplus -= add
            if surplus == 0:
                break
        if surplus > 0:
            raise ProtocolCorruptionError(
                f"{surplus} players cannot be packed under the capacity lower bounds"
            )
    return None, new_active, players_left, alloc


def broadcast_signal(
    step: int,
    arm: int,
    decision: LeaderDecision,
    lower_new: list[int],
    lower_view: list[int],
    upper_new: list[int],
    upper_view: list[int],
) -> bool:
    """Leader-side condition: join the sweep on ``arm`` during ``step``?

    One step per field: reject, accept, least-favored, then one capacity
    unit per bound and round (rounds repeat while bound signals remain).
    """
    if step == 0:
        return arm in decision.rejected
    if step == 1:
        return arm in decision.accepted
    if step == 2:
        return arm == decision.least_favored
    if step == 3:
        return lower_new[arm] > lower_view[arm]
    if step == 4:
        return upper_new[arm] < upper_view[arm]
    raise ValueError(f"unknown broadcast step {step}")


def anchored_arm(rank: int, active: list[int], lower: list[int]) -> int:
    """Fixed arm for ranks beyond the rotating set during exploration.

    Rank K_t + r fills the r-th spare capacity unit, walking active arms in
    index order with lower-bound-1 spare units each.
    """
    target = rank - len(active)
    total = 0
    for k in active:
        total += lower[k] - 1
        if total >= target:
            return k
    raise ProtocolCorruptionError(
        f"rank {rank} exceeds spare capacity of active arms {active}"
    )


# Internal mode tags.
_ORTHO = "orthogonalize"
_RANK = "rank-assign"
_IE = "explore-individual"
_UE = "explore-united"
_BACK = "comm-upload"
_FORTH = "comm-broadcast"
_EXPLOIT = "exploit"


class SicSdaPolicy:
    """Per-player state machine; runs under SDA or SDI feedback.

    Only the 1-bit shared flag is consumed, so count feedback degrades
    gracefully to the same behaviour (the SDI adapter is this same class).
    """

    def __init__(
        self, player_id: int, env: PublicEnvInfo, *, delta: float | None = None
    ) -> None:
        self.num_arms = env.num_arms
        if self.num_arms < 2:
            raise ValueError("need at least two arms to orthogonalize")
        self.horizon = env.horizon
        self.rng = env.rng
        if delta is None:
            delta = env.delta if env.delta is not None else 2.0 / env.horizon
        self.delta = delta

        self.phase = "init"
        self._mode = _ORTHO
        self.num_players: int | None = None
        self.rank: int | None = None  # 1-based dense rank, 1 = leader
        self.exploit_arm: int | None = None

        # Orthogonalization over K-1 arms; rounds of K slots.
        self._ortho_slot = 0
        self._saw_sharing = False
        self._claim = 0  # 0-based arm this player tries to hold
        self._claimed = False
        self._rank_slot = 0
        self._rank_flags = 0
        self._total_flags = 0

        # Shared loop state (identical across active players).
        self.active: list[int] = list(range(self.num_arms))
        self.active_players = 0
        self.phase_num = 1
        self.alloc: dict[int, int] = {}
        self.lower: list[int] = []
        self.upper: list[int] = []

        self._slot = 0  # slot counter within the current mode
        self._ue_arms: list[int] = []
        self._anchor: int | None = None
        self._phase_sums: list[int] = [0] * self.num_arms

        self._senders: list[int] = []
        self._nbits = 0
        self._send_bits: list[int] = []
        self._recv_acc = 0
        self._received: list[list[int]] = []

        self._seen = LeaderDecision()
        self._bound_up: set[int] = set()
        self._bound_down: set[int] = set()
        self._repeat = False

        # Leader-only state.
        self.stats: PlayerStats | None = None
        self.bounds: CapacityBounds | None = None
        self.decision: LeaderDecision | None = None

    @property
    def is_leader(self) -> bool:
        return self.rank == 1

    # -- phase-length helpers (computable by every player) ------------------

    def _num_rotating(self) -> int:
        return min(self.active_players, len(self.active))

    def _begin_explore(self) -> None:
        self._mode = _IE
        self.phase = "explore"
        self._slot = 0
        self._phase_sums = [0] * self.num_arms
        k_t = len(self.active)
        if self.rank > k_t:
            self._anchor = anchored_arm(self.rank, self.active, self.lower)
        else:
            self._anchor = None
        self._ue_arms = [k for k in self.active if self.lower[k] != self.upper[k]]

    def _begin_upload(self) -> None:
        self._senders = list(range(2, self._num_rotating() + 1))
        if not self._senders:
            if self.is_leader:
                self._leader_merge()
            self._phase_sums = [0] * self.num_arms
            self._begin_broadcast()
            return
        self._mode = _BACK
        self.phase = "comm"
        self._slot = 0
        self._nbits = upload_bits(self.phase_num, self.num_players)
        self._recv_acc = 0
        self._received = [[0] * len(self.active) for _ in self._senders]

    def _begin_broadcast(self) -> None:
        if self.is_leader:
            self._run_accept_reject()
        if self.active_players == 1:
            # No follower to inform; the leader adopts its decision directly.
            self._sync_bounds_directly()
            self._finish_comm()
            return
        self._mode = _FORTH
        self.phase = "comm"
        self._slot = 0
        self._seen = LeaderDecision()
        self._bound_up = set()
        self._bound_down = set()
        self._repeat = False

    # -- leader statistics --------------------------------------------------

    def _leader_merge(self) -> None:
        """Fold own and uploaded per-phase sums into the leader statistics."""
        stats = self.stats
        share = 1 << self.phase_num
        for idx, arm in enumerate(self.active):
            total = self._phase_sums[arm]
            for row in self._received:
                total += row[idx]
            stats.ie_sum[arm] += total / self.alloc.get(arm, 1)
            stats.ie_count[arm] += share * (1 + len(self._received))
        self._received = []

    def _run_accept_reject(self) -> None:
        stats, bounds = self.stats, self.bounds
        for k in self._ue_arms:
            if stats.ue_count[k] > 0:
                # United samples only witness capacity up to the rally size.
                update_capacity_bounds(
                    stats,
                    k,
                    bounds,
                    self.delta,
                    allow_upper=self.active_players >= bounds.upper[k],
                )
        mu = {k: stats.mu_hat(k) for k in self.active}
        pulls = {k: stats.ie_count[k] for k in self.active}
        learned = {k for k in self.active if bounds.learned(k)}
        self.decision = evaluate_accept_reject(
            mu,
            pulls,
            self.active,
            self.active_players,
            bounds.lower,
            bounds.upper,
            learned,
            self.horizon,
        )

    def _sync_bounds_directly(self) -> None:
        self.lower = list(self.bounds.lower)
        self.upper = list(self.bounds.upper)
        self._seen = self.decision

    # -- shared post-communication update ------------------------------------

    def _finish_comm(self) -> None:
        decision = self._seen
        exploit, new_active, players_left, alloc = apply_decision(
            self.rank, decision, self.active, self.active_players, self.lower
        )
        self.active = new_active
        self.active_players = players_left
        self.phase_num += 1
        if exploit is not None:
            self.exploit_arm = exploit
            self._mode = _EXPLOIT
            self.phase = "exploit"
            return
        if len(self.active) == 1:
            # Bit signalling needs two arms; with one arm left all active
            # players sit on it for good, which is already optimal play.
            self.exploit_arm = self.active[0]
            self._mode = _EXPLOIT
            self.phase = "exploit"
            return
        self.alloc = alloc
        self._begin_explore()

    # -- engine interface -----------------------------------------------------

    def next_action(self, t: int) -> int:
        mode = self._mode
        if mode == _EXPLOIT:
            return self.exploit_arm
        if mode == _IE:
            if self._anchor is not None:
                return self._anchor
            k_t = len(self.active)
            return self.active[(self.rank - 1 + t) % k_t]
        if mode == _UE:
            return self._ue_arms[self._slot % len(self._ue_arms)]
        if mode == _BACK:
            cell, bit = divmod(self._slot, self._nbits)
            sender_idx, k_idx = divmod(cell, len(self.active))
            if self.is_leader:
                return self.active[0]
            if self.rank == self._senders[sender_idx]:
                if bit == 0:
                    value = self._phase_sums[self.active[k_idx]]
                    self._send_bits = encode_stat(value, self._nbits)
                return self.active[0] if self._send_bits[bit] else self.active[1]
            return self.active[1]
        if mode == _FORTH:
            k_t = len(self.active)
            step, rem = divmod(self._slot, k_t * self.active_players)
            k_idx, j = divmod(rem, self.active_players)
            arm = self.active[k_idx]
            if self.is_leader:
                if self._forth_condition(step, arm):
                    return arm
                return self.active[(k_idx + 1) % k_t]
            if self.rank == j + 1:
                return arm
            return self.active[(k_idx + 1) % k_t]
        if mode == _ORTHO:
            s = self._ortho_slot
            spare = self.num_arms - 1
            if s == 0:
                if not self._claimed:
                    self._claim = int(self.rng.integers(self.num_arms - 1))
                return self._claim
            if not self._claimed:
                return spare
            if s == self._claim + 1:
                return spare
            return self._claim
        if mode == _RANK:
            return rank_assign_arm(self._claim + 1, self._rank_slot + 1, self.num_arms)
        raise RuntimeError(f"unknown mode {mode!r}")

    def _forth_condition(self, step: int, arm: int) -> bool:
        return broadcast_signal(
            step,
            arm,
            self.decision,
            self.bounds.lower,
            self.lower,
            self.bounds.upper,
            self.upper,
        )

    def observe(self, obs: Observation) -> None:
        mode = self._mode
        if mode == _EXPLOIT:
            return
        if mode == _IE:
            self._observe_ie(obs)
        elif mode == _UE:
            self._observe_ue(obs)
        elif mode == _BACK:
            self._observe_upload(obs)
        elif mode == _FORTH:
            self._observe_broadcast(obs)
        elif mode == _ORTHO:
            self._observe_ortho(obs)
        else:
            self._observe_rank(obs)

    # -- per-mode observation handlers ----------------------------------------

    def _observe_ie(self, obs: Observation) -> None:
        if self._anchor is None:
            self._phase_sums[obs.arm] += int(obs.reward + 0.5)
        self._slot += 1
        if self._slot == len(self.active) << self.phase_num:
            if self._ue_arms:
                self._mode = _UE
                self._slot = 0
            else:
                self._begin_upload()

    def _observe_ue(self, obs: Observation) -> None:
        if self.is_leader:
            self.stats.add_united(obs.arm, obs.reward)
        self._slot += 1
        if self._slot == len(self._ue_arms) << self.phase_num:
            self._begin_upload()

    def _observe_upload(self, obs: Observation) -> None:
        cell, bit = divmod(self._slot, self._nbits)
        sender_idx, k_idx = divmod(cell, len(self.active))
        if self.is_leader:
            self._recv_acc = (self._recv_acc << 1) | (1 if obs.shared else 0)
            if bit == self._nbits - 1:
                self._received[sender_idx][k_idx] = self._recv_acc
                self._recv_acc = 0
        self._slot += 1
        if self._slot == len(self._senders) * len(self.active) * self._nbits:
            if self.is_leader:
                self._leader_merge()
            self._phase_sums = [0] * self.num_arms
            self._begin_broadcast()

    def _observe_broadcast(self, obs: Observation) -> None:
        k_t = len(self.active)
        step, rem = divmod(self._slot, k_t * self.active_players)
        k_idx, j = divmod(rem, self.active_players)
        if not self.is_leader and self.rank == j + 1 and obs.shared:
            self._record_signal(step, self.active[k_idx])
        self._slot += 1
        if self._slot == NUM_FORTH_STEPS * k_t * self.active_players:
            self._end_broadcast_round()

    def _record_signal(self, step: int, arm: int) -> None:
        seen = self._seen
        if step == 0:
            seen.rejected.add(arm)
        elif step == 1:
            seen.accepted.add(arm)
        elif step == 2:
            if seen.least_favored is not None and seen.least_favored != arm:
                raise ProtocolCorruptionError("two different least-favored signals")
            seen.least_favored = arm
        elif step == 3:
            self._bound_up.add(arm)
            self._repeat = True
        else:
            self._bound_down.add(arm)
            self._repeat = True

    def _end_broadcast_round(self) -> None:
        if self.is_leader:
            # We know what we signalled; mirror the followers' bookkeeping.
            d = self.decision
            self._seen.accepted |= d.accepted
            self._seen.rejected |= d.rejected
            self._seen.least_favored = d.least_favored
            self._bound_up = {
                k for k in self.active if self.bounds.lower[k] > self.lower[k]
            }
            self._bound_down = {
                k for k in self.active if self.bounds.upper[k] < self.upper[k]
            }
            self._repeat = bool(self._bound_up or self._bound_down)
        for k in self._bound_up:
            self.lower[k] += 1
        for k in self._bound_down:
            self.upper[k] -= 1
        repeat = self._repeat
        self._bound_up = set()
        self._bound_down = set()
        self._repeat = False
        self._slot = 0
        if not repeat:
            self._finish_comm()

    def _observe_ortho(self, obs: Observation) -> None:
        s = self._ortho_slot
        if s == 0:
            if not self._claimed and not obs.shared:
                self._claimed = True  # alone on the arm: claim holds
        else:
            if obs.shared:
                self._saw_sharing = True
        self._ortho_slot = s + 1
        if self._ortho_slot == self.num_arms:
            if not self._saw_sharing:
                if not self._claimed:
                    raise ProtocolCorruptionError(
                        "orthogonalization ended while a player is unclaimed"
                    )
                self._mode = _RANK
                self._rank_slot = 0
                self._rank_flags = 0
                self._total_flags = 0
            else:
                self._ortho_slot = 0
                self._saw_sharing = False

    def _observe_rank(self, obs: Observation) -> None:
        slot = self._rank_slot + 1  # 1-based sweep slot just played
        if obs.shared:
            self._total_flags += 1
            if slot <= 2 * (self._claim + 1):
                self._rank_flags += 1
        self._rank_slot += 1
        if self._rank_slot == 2 * self.num_arms - 2:
            self.rank = 1 + self._rank_flags
            self.num_players = 1 + self._total_flags
            self._start_loop()

    def _start_loop(self) -> None:
        self.active = list(range(self.num_arms))
        self.active_players = self.num_players
        self.phase_num = 1
        self.lower = [1] * self.num_arms
        self.upper = [self.num_players] * self.num_arms
        self.alloc = {k: 1 for k in self.active}
        if self.active_players > len(self.active):
            raise ProtocolCorruptionError("more active players than arms at start")
        if self.is_leader:
            self.stats = PlayerStats(self.num_arms)
            self.bounds = CapacityBounds(self.num_arms, self.num_players)
        self._begin_explore()
