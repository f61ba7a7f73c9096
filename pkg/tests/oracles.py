"""Independent brute-force references for the test suite.

Everything here re-derives expected values from first principles and shares
no code with the library under test (arithmetic duplicated on purpose).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BruteForceResult:
    best_profile: tuple[int, ...]
    best_value: float
    enumeration_count: int


def weak_compositions(total: int, parts: int):
    """All ways to write ``total`` as an ordered sum of ``parts`` >= 0 terms."""
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for rest in weak_compositions(total - head, parts - 1):
            yield (head,) + rest


def brute_force_optimal(
    means: list[float], capacities: list[int], num_players: int
) -> BruteForceResult:
    """Exhaustive maximizer of the capped one-slot reward."""
    if len(means) > 6 or num_players > 8:
        raise ValueError("instance too large for exhaustive enumeration")
    best_profile: tuple[int, ...] | None = None
    best_value = -1.0
    count = 0
    for profile in weak_compositions(num_players, len(means)):
        count += 1
        value = sum(
            min(a, m) * mu for a, mu, m in zip(profile, means, capacities)
        )
        if value > best_value + 1e-15:
            best_value = value
            best_profile = profile
    assert best_profile is not None
    return BruteForceResult(best_profile, best_value, count)


def _kl(p: float, q: float) -> float:
    if p <= 0.0:
        return -math.log(1.0 - q)
    if p >= 1.0:
        return -math.log(q)
    return p * math.log(p / q) + (1.0 - p) * math.log((1.0 - p) / (1.0 - q))


def klucb_grid(mu_hat: float, pulls: int, t: int, resolution: float = 1e-6) -> float:
    """Largest grid point q with pulls * kl(mu_hat, q) within the budget.

    The divergence is increasing in q above mu_hat, so a coarse pass
    locates the threshold and a fine pass pins it to ``resolution``.
    """
    tt = max(t, 3)
    budget = (math.log(tt) + 4.0 * math.log(math.log(tt))) / pulls
    if mu_hat >= 1.0:
        return 1.0

    def ok(q: float) -> bool:
        return _kl(mu_hat, q) <= budget

    lo, hi = mu_hat, 1.0 - 1e-12
    if ok(hi):
        return 1.0
    coarse = 1e-3
    q = lo
    while q + coarse <= hi and ok(q + coarse):
        q += coarse
    best = q
    while best + resolution <= hi and ok(best + resolution):
        best += resolution
    return best


def simulate_rank_assignment(num_arms: int, ext_ranks: list[int]):
    """Hand simulation of the 2K-2-slot rank sweep.

    ``ext_ranks`` holds each player's 1-based arm claim from the preceding
    orthogonalization. Returns per-player (rank, player count) plus the
    slot-by-slot arm transcript, derived straight from the published rule:
    stay on your claimed arm except during the hop window, count sharing
    flags in the first 2k slots for the rank and everywhere for the total.
    """
    num_slots = 2 * num_arms - 2
    transcript = []
    rank_flags = [0] * len(ext_ranks)
    total_flags = [0] * len(ext_ranks)
    for s in range(1, num_slots + 1):
        arms = []
        for k in ext_ranks:
            if s <= 2 * k or s >= num_arms + k:
                arms.append(k)
            else:
                arms.append(s - k)
        counts = {a: arms.count(a) for a in arms}
        transcript.append(tuple(arms))
        for i, a in enumerate(arms):
            if counts[a] > 1:
                total_flags[i] += 1
                if s <= 2 * ext_ranks[i]:
                    rank_flags[i] += 1
    ranks = [1 + f for f in rank_flags]
    totals = [1 + f for f in total_flags]
    return ranks, totals, transcript


def simulate_leader_broadcast(
    num_arms: int,
    num_players: int,
    view: dict,
    target: dict,
):
    """Hand simulation of the five-step leader broadcast under SDI counts.

    ``view``/``target`` are dicts with keys ``optimal`` (set), ``least``
    (int), ``lower``/``upper`` (lists). Followers sweep arms 0..K-1 in each
    step while the leader joins exactly where the step condition holds;
    a sharing count of ``num_players`` applies the step's update. Returns
    the follower state after the round and the signal transcript.
    """
    state = {
        "optimal": set(view["optimal"]),
        "least": view["least"],
        "lower": list(view["lower"]),
        "upper": list(view["upper"]),
    }
    signals = []
    for step in range(5):
        for k in range(num_arms):
            if step == 0:
                on = k in view["optimal"] and k not in target["optimal"]
            elif step == 1:
                on = k in target["optimal"] and k not in view["optimal"]
            elif step == 2:
                on = k == target["least"]
            elif step == 3:
                on = target["lower"][k] > view["lower"][k]
            else:
                on = target["upper"][k] < view["upper"][k]
            leader_arm = k if on else (k + 1) % num_players
            count = (num_players - 1) + (1 if leader_arm == k else 0)
            if count == num_players:
                signals.append((step, k))
                if step == 0:
                    state["optimal"].discard(k)
                elif step == 1:
                    state["optimal"].add(k)
                elif step == 2:
                    state["least"] = k
                elif step == 3:
                    state["lower"][k] += 1
                else:
                    state["upper"][k] -= 1
    return state, signals


def simulate_bit_upload(value: int, nbits: int):
    """Bit cell transcript: the sender's arm sequence and the decoded value.

    Arm 0 is the leader's listening arm (bit 1), arm 1 means bit 0. The
    leader reconstructs MSB-first from the sharing flags it sees.
    """
    arms = []
    for b in range(nbits):
        bit = (value >> (nbits - 1 - b)) & 1
        arms.append(0 if bit else 1)
    decoded = 0
    for a in arms:
        decoded = (decoded << 1) | (1 if a == 0 else 0)
    return arms, decoded
