"""Monte Carlo ground truth for the analytic rate expressions.

Drop-based simulation: each drop redraws the large-scale state (shadowing,
association), then runs block-fading slots in which every user feeds back
its best-M resource blocks and the base station schedules one user per
block.  Per-drop RNG substreams are derived from a counter-based generator
keyed by (master_seed, drop_index), so results are bit-identical for a
fixed master seed no matter how the drops are distributed across threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .channel import LinkProfile, Scenario, build_link_profile, sinr_cdf
from .errors import DomainError
from .feedback import BestMPoly

POLICIES = ("cdf", "greedy", "round_robin")

#: batches per drop used for standard-error estimation
_STAT_BATCHES = 8


@dataclass(frozen=True)
class SimConfig:
    num_drops: int
    slots_per_drop: int
    policy: str
    M: int
    master_seed: int
    threads_hint: int = 1

    def __post_init__(self):
        if self.num_drops < 1 or self.slots_per_drop < 1:
            raise DomainError("num_drops and slots_per_drop must be >= 1")
        if self.policy not in POLICIES:
            raise DomainError(f"policy must be one of {POLICIES}")
        if self.M < 1:
            raise DomainError("M must be >= 1")
        if self.threads_hint < 1:
            raise DomainError("threads_hint must be >= 1")


@dataclass
class DropStats:
    per_user_rate_sum: np.ndarray   # (K0,) bits/s/Hz summed over slot-RBs
    assignment_counts: np.ndarray   # (K0,) integer
    outage_rb_count: int
    # per-batch views for standard errors, shape (_STAT_BATCHES, ...)
    batch_rate_sum: np.ndarray
    batch_counts: np.ndarray
    batch_outage: np.ndarray
    batch_slots: np.ndarray


@dataclass(frozen=True)
class RateReport:
    per_user_rate: tuple[float, ...]
    sum_rate: float
    fairness_theta: float
    outage_fraction: float
    per_user_rate_stderr: tuple[float, ...]
    sum_rate_stderr: float
    fairness_theta_stderr: float
    outage_fraction_stderr: float


def drop_rng(master_seed: int, drop_index: int) -> np.random.Generator:
    """Counter-based substream for one drop; independent of thread layout."""
    return np.random.Generator(np.random.Philox(key=[master_seed, drop_index]))


def draw_small_scale(rng: np.random.Generator) -> complex:
    """One zero-mean unit-variance complex Gaussian channel gain."""
    re, im = rng.normal(0.0, math.sqrt(0.5), size=2)
    return complex(re, im)


def slot_sinr(p: LinkProfile, N: int, rng: np.random.Generator) -> np.ndarray:
    """Per-resource-block SINR values for one slot of block fading."""
    h0 = rng.normal(0.0, math.sqrt(0.5), size=(N, 2))
    sig = p.rho0 * (h0**2).sum(axis=1)
    # interference_limited profiles neglect noise by definition
    denom = np.zeros(N) if p.kind == "interference_limited" else np.ones(N)
    for rho_b in p.rho_int:
        hb = rng.normal(0.0, math.sqrt(0.5), size=(N, 2))
        denom += rho_b * (hb**2).sum(axis=1)
    return sig / denom


def best_m_select(cqi, M: int):
    """Indices and values of the M largest entries, ties to the lower index."""
    cqi = np.asarray(cqi, dtype=float)
    if not 1 <= M <= cqi.size:
        raise DomainError(f"need 1 <= M <= {cqi.size}, got M={M}")
    order = np.argsort(-cqi, kind="stable")[:M]
    return [(int(i), float(cqi[i])) for i in order]


def schedule_slot(feedback, policy: str, profiles, N: int,
                  genie_sinr=None, rng: np.random.Generator | None = None,
                  rr_offset: int = 0):
    """Assign one user per resource block for a single slot.

    feedback: per-user list of (rb_index, cqi) pairs as produced by
    best_m_select.  Returns (assignment, rates): assignment[rb] is the
    winning user index or -1 for an outage block; rates[rb] is
    log2(1 + CQI) of the winner's raw fed-back value (round_robin uses the
    assigned user's actual slot SINR from genie_sinr).
    """
    if policy not in POLICIES:
        raise DomainError(f"policy must be one of {POLICIES}")
    K0 = len(profiles)
    assignment = np.full(N, -1, dtype=int)
    rates = np.zeros(N)
    if policy == "round_robin":
        if genie_sinr is None:
            raise DomainError("round_robin scheduling needs genie_sinr")
        for rb in range(N):
            k = (rr_offset + rb) % K0
            assignment[rb] = k
            rates[rb] = math.log2(1.0 + genie_sinr[k][rb])
        return assignment, rates

    M = max(len(fb) for fb in feedback) if feedback else 0
    polys = BestMPoly.build(N, M) if M else None
    for rb in range(N):
        best_score = -1.0
        winners: list[tuple[int, float]] = []
        for k, fb in enumerate(feedback):
            for idx, val in fb:
                if idx != rb:
                    continue
                if policy == "cdf":
                    score = float(polys.eval_in_f(sinr_cdf(profiles[k], val)))
                else:
                    score = val
                if score > best_score:
                    best_score = score
                    winners = [(k, val)]
                elif score == best_score:
                    winners.append((k, val))
        if not winners:
            continue  # outage block
        if len(winners) > 1 and rng is not None:
            k, val = winners[rng.integers(len(winners))]
        else:
            k, val = winners[0]
        assignment[rb] = k
        rates[rb] = math.log2(1.0 + val)
    return assignment, rates


def fairness_theta(assignment_counts) -> float:
    """Entropy-based fairness of assignment proportions, normalized to [0, 1]."""
    counts = np.asarray(assignment_counts, dtype=float)
    K = counts.size
    if K < 2:
        raise DomainError("fairness is undefined for fewer than 2 users")
    total = counts.sum()
    if total <= 0:
        raise DomainError("assignment counts must sum to a positive value")
    if np.all(counts == counts[0]):
        return 1.0  # uniform split, exact by definition
    p = counts / total
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0, p * np.log(p), 0.0)
    return float(-terms.sum() / math.log(K))


def _run_drop(profiles, N: int, config: SimConfig,
              rng: np.random.Generator) -> DropStats:
    """Simulate one drop's slots; single stream, deterministic order."""
    K0 = len(profiles)
    M = config.M
    if M > N:
        raise DomainError(f"M={M} exceeds N={N}")
    polys = BestMPoly.build(N, M)
    slots = config.slots_per_drop
    n_batches = min(_STAT_BATCHES, slots)

    batch_rate = np.zeros((n_batches, K0))
    batch_counts = np.zeros((n_batches, K0), dtype=np.int64)
    batch_outage = np.zeros(n_batches, dtype=np.int64)
    batch_slots = np.zeros(n_batches, dtype=np.int64)

    chunk_cap = max(1, 65536 // K0)
    slot_cursor = 0
    for b in range(n_batches):
        b_slots = slots // n_batches + (1 if b < slots % n_batches else 0)
        batch_slots[b] = b_slots
        done = 0
        while done < b_slots:
            n = min(chunk_cap, b_slots - done)
            # draw SINR for every (slot, user, rb)
            cqi = np.empty((n, K0, N))
            for k, p in enumerate(profiles):
                sig = p.rho0 * rng.exponential(size=(n, N))
                if p.kind == "interference_limited":
                    denom = np.zeros((n, N))  # noise neglected by definition
                else:
                    denom = np.ones((n, N))
                for rho_b in p.rho_int:
                    denom += rho_b * rng.exponential(size=(n, N))
                cqi[:, k, :] = sig / denom

            if config.policy == "round_robin":
                rb_index = (slot_cursor + np.arange(n))[:, None] * N \
                    + np.arange(N)[None, :]
                winner = rb_index % K0
                rates = np.log2(
                    1.0 + np.take_along_axis(
                        cqi, winner[:, None, :], axis=1
                    )[:, 0, :]
                )
                outage = np.zeros((n, N), dtype=bool)
            else:
                # best-M feedback mask: keep each user's M largest blocks
                kth = np.partition(cqi, N - M, axis=2)[:, :, N - M]
                mask = cqi >= kth[:, :, None]
                if config.policy == "cdf":
                    score = np.empty_like(cqi)
                    for k, p in enumerate(profiles):
                        score[:, k, :] = polys.eval_in_f(
                            sinr_cdf(p, cqi[:, k, :])
                        )
                else:
                    score = cqi.copy()
                score[~mask] = -1.0
                winner = score.argmax(axis=1)
                top = np.take_along_axis(score, winner[:, None, :],
                                         axis=1)[:, 0, :]
                outage = top < 0.0
                won_cqi = np.take_along_axis(cqi, winner[:, None, :],
                                             axis=1)[:, 0, :]
                rates = np.where(outage, 0.0, np.log2(1.0 + won_cqi))

            flat_winner = np.where(outage, -1, winner)
            for k in range(K0):
                sel = flat_winner == k
                batch_rate[b, k] += rates[sel].sum()
                batch_counts[b, k] += int(sel.sum())
            batch_outage[b] += int(outage.sum())
            slot_cursor += n
            done += n

    return DropStats(
        per_user_rate_sum=batch_rate.sum(axis=0),
        assignment_counts=batch_counts.sum(axis=0),
        outage_rb_count=int(batch_outage.sum()),
        batch_rate_sum=batch_rate,
        batch_counts=batch_counts,
        batch_outage=batch_outage,
        batch_slots=batch_slots,
    )


def _aggregate(drops: list[DropStats], K0: int, N: int,
               slots_total: int) -> RateReport:
    rb_total = slots_total * N
    rate_sum = np.sum([d.per_user_rate_sum for d in drops], axis=0)
    counts = np.sum([d.assignment_counts for d in drops], axis=0)
    outage = sum(d.outage_rb_count for d in drops)

    per_user = rate_sum / rb_total
    if K0 >= 2 and counts.sum() > 0:
        theta = fairness_theta(counts)
    else:
        theta = 1.0

    # batch-level statistics across all drops for standard errors
    b_rate = np.concatenate([d.batch_rate_sum for d in drops], axis=0)
    b_counts = np.concatenate([d.batch_counts for d in drops], axis=0)
    b_outage = np.concatenate([d.batch_outage for d in drops], axis=0)
    b_slots = np.concatenate([d.batch_slots for d in drops], axis=0)
    keep = b_slots > 0
    b_rate, b_counts = b_rate[keep], b_counts[keep]
    b_outage, b_slots = b_outage[keep], b_slots[keep]
    B = int(b_slots.size)

    b_rb = (b_slots * N).astype(float)
    b_user_rate = b_rate / b_rb[:, None]
    b_sum_rate = b_user_rate.sum(axis=1)
    b_out_frac = b_outage / b_rb
    b_theta = np.array([
        fairness_theta(c) if (K0 >= 2 and c.sum() > 0) else 1.0
        for c in b_counts
    ])

    def stderr(samples):
        samples = np.asarray(samples, dtype=float)
        if B < 2:
            return np.zeros(samples.shape[1:]) if samples.ndim > 1 else 0.0
        return samples.std(axis=0, ddof=1) / math.sqrt(B)

    per_user_se = np.atleast_1d(stderr(b_user_rate))
    return RateReport(
        per_user_rate=tuple(float(r) for r in per_user),
        sum_rate=float(per_user.sum()),
        fairness_theta=float(theta),
        outage_fraction=float(outage / rb_total),
        per_user_rate_stderr=tuple(float(s) for s in per_user_se),
        sum_rate_stderr=float(stderr(b_sum_rate)),
        fairness_theta_stderr=float(stderr(b_theta)),
        outage_fraction_stderr=float(stderr(b_out_frac)),
    )


def simulate_profiles(profiles, N: int, config: SimConfig) -> RateReport:
    """Simulate fixed link profiles (no large-scale redraw between drops)."""
    profiles = list(profiles)
    if not profiles:
        raise DomainError("need at least one profile")
    if config.M > N:
        raise DomainError(f"M={config.M} exceeds N={N}")

    def one(drop: int) -> DropStats:
        return _run_drop(profiles, N, config,
                         drop_rng(config.master_seed, drop))

    drops = _map_drops(one, config)
    return _aggregate(drops, len(profiles), N,
                      config.num_drops * config.slots_per_drop)


def simulate(scenario: Scenario, config: SimConfig) -> RateReport:
    """Full drop-based simulation: each drop redraws shadowing, re-associates
    users, rebuilds link profiles, then runs the slot loop."""
    K0 = len(scenario.users)
    if K0 < 1:
        raise DomainError("scenario needs at least one user")
    if config.M > scenario.num_rb:
        raise DomainError(
            f"M={config.M} exceeds num_rb={scenario.num_rb}"
        )

    def one(drop: int) -> DropStats:
        rng = drop_rng(config.master_seed, drop)
        shadow = rng.normal(0.0, scenario.shadowing_sigma_db,
                            size=(K0, len(scenario.cells)))
        profiles = [
            build_link_profile(scenario, k, shadow[k]) for k in range(K0)
        ]
        return _run_drop(profiles, scenario.num_rb, config, rng)

    drops = _map_drops(one, config)
    return _aggregate(drops, K0, scenario.num_rb,
                      config.num_drops * config.slots_per_drop)


def _map_drops(fn, config: SimConfig) -> list[DropStats]:
    """Run drops possibly concurrently; reduce in drop-index order."""
    indices = range(config.num_drops)
    if config.threads_hint > 1 and config.num_drops > 1:
        with ThreadPoolExecutor(max_workers=config.threads_hint) as pool:
            return list(pool.map(fn, indices))
    return [fn(i) for i in indices]
