"""Government side: action decoding, per-period credit allocation, welfare
metrics (productivity, equality, social welfare), and the episode-end penalty.

The government action is a discrete vector of n_enterprises + 2 components,
each with 101 levels: [proportion of remaining budget, per-enterprise
weights..., punishment severity]. Ten percent of each period's credits fund
a randomly placed certified project; the rest is split by weight.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .config import SimConfig
from .enterprise import EnterpriseState

PROJECT_SHARE = 0.10
ENTERPRISE_SHARE = 0.90
ACTION_LEVELS = 101


class GovernmentActionError(ValueError):
    pass


@dataclass(frozen=True)
class GovernmentAction:
    raw: tuple[int, ...]  # length n_enterprises + 2, each in [0, 100]

    def validate(self, n_enterprises: int) -> None:
        if len(self.raw) != n_enterprises + 2:
            raise GovernmentActionError(
                f"action length {len(self.raw)} != {n_enterprises + 2}")
        for v in self.raw:
            if not 0 <= v <= ACTION_LEVELS - 1:
                raise GovernmentActionError(f"action component {v} out of [0,100]")


@dataclass
class AllocationOutcome:
    period_total: float
    project_share: float
    per_enterprise: dict[int, float]
    punishment: float
    remaining_budget: float


@dataclass(frozen=True)
class WelfareMetrics:
    prod: float
    eq: float
    ee: float
    swf: float


def decode_action(action: GovernmentAction, remaining_budget: float,
                  cfg: SimConfig) -> AllocationOutcome:
    """Map the raw 101-level vector onto a concrete allocation."""
    n = cfg.n_enterprises
    action.validate(n)
    raw = action.raw
    period_total = (raw[0] / 100.0) * remaining_budget
    weights = list(raw[1:1 + n])
    total_weight = sum(weights)
    if total_weight == 0:
        shares = [1.0 / n] * n
    else:
        shares = [w / total_weight for w in weights]
    enterprise_pool = ENTERPRISE_SHARE * period_total
    per_enterprise = {i: enterprise_pool * shares[i] for i in range(n)}
    punishment = (raw[n + 1] / 100.0) * cfg.punishment_max
    return AllocationOutcome(
        period_total=period_total,
        project_share=PROJECT_SHARE * period_total,
        per_enterprise=per_enterprise,
        punishment=punishment,
        remaining_budget=remaining_budget - period_total,
    )


def productivity(states: list[EnterpriseState]) -> float:
    return sum(s.coins for s in states)


def equality(coins: list[float]) -> float:
    """1 - normalized Gini over coin holdings; 1 for the all-zero vector."""
    n = len(coins)
    total = sum(coins)
    if n <= 1 or total <= 0.0:
        return 1.0
    pairwise = 0.0
    ordered = sorted(coins)
    # sum_{i,j} |x_i - x_j| via the sorted prefix identity
    prefix = 0.0
    for k, x in enumerate(ordered):
        pairwise += x * k - prefix
        prefix += x
    pairwise *= 2.0
    return 1.0 - pairwise / (2.0 * (n - 1) * total)


def social_welfare(prod: float, eq: float, ee: float, c_e: float) -> float:
    return prod * eq * math.exp(-c_e * ee)


def welfare_metrics(states: list[EnterpriseState], cfg: SimConfig) -> WelfareMetrics:
    prod = productivity(states)
    eq = equality([max(0.0, s.coins) for s in states])
    ee = sum(s.excess_record for s in states)
    return WelfareMetrics(prod, eq, ee, social_welfare(prod, eq, ee, cfg.climate_coeff))


def apply_penalty(states: list[EnterpriseState], punishment: float) -> dict[int, float]:
    """Episode end: each enterprise pays ee_i * p coins (may go negative)."""
    penalties = {}
    for s in states:
        amount = s.excess_record * punishment
        s.coins -= amount
        penalties[s.agent] = amount
    return penalties


def government_reward(swf_now: float, swf_prev: float) -> float:
    return swf_now - swf_prev
