"""Enterprise agents: state, utility, emission dynamics, and action effects.

An enterprise earns coins by producing (which burns carbon credits at its
current emission level), lowers that level through delayed and failure-prone
emission-reduction investments, completes government-certified projects for
credit rewards, and trades credits on the market. Reward is the per-step
increment of an isoelastic utility of coin income net of labor disutility.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .config import RngStream, SimConfig
from .grid import Grid


@dataclass(frozen=True)
class Skills:
    size: float  # manufacturing scale S
    research: float  # R&D capability Rc


@dataclass
class EnterpriseState:
    agent: int
    skills: Skills
    position: tuple[int, int]
    coins: float = 0.0
    credits: float = 0.0
    emission_level: float = 1.0
    labor: float = 0.0
    invest_count: float = 0.0  # effective investments n_r
    pending_invests: list[int] = field(default_factory=list)  # apply_at timesteps
    excess_record: float = 0.0  # cumulative credit shortfall ee_i
    utility_prev: float = 0.0
    # per-period counters, reset at each allocation
    produces_this_period: int = 0
    excess_produces_this_period: int = 0
    emissions_this_period: float = 0.0
    coins_earned_this_period: float = 0.0
    # episode totals for reporting
    total_emissions: float = 0.0
    total_invest_actions: int = 0
    total_properties: int = 0
    total_projects_built: int = 0


def labor_coefficient(t: float, alpha: float, beta: float) -> float:
    """Labor-income coefficient: rises from 0 toward the asymptote alpha."""
    return alpha * (1.0 - math.exp(-t / beta))


def utility(z: float, labor: float, c_l: float, eta: float) -> float:
    """Isoelastic utility of income minus linear labor disutility."""
    return (z ** (1.0 - eta) - 1.0) / (1.0 - eta) - c_l * labor


def step_reward(state: EnterpriseState, u_now: float) -> float:
    """Utility increment since the previous step (u_0 itself at t=0)."""
    return u_now - state.utility_prev


def power_consumption(research: float, n_r: float, delta: float) -> float:
    """Energy per unit of production: exp(-delta * Rc * n_r), in (0, 1]."""
    return math.exp(-delta * research * n_r)


def green_rate(power_sizes: float, n_p: int) -> float:
    """Share of green energy: n_p / (sum_j Pc_j*S_j + n_p); 0 when n_p == 0."""
    if n_p <= 0:
        return 0.0
    return n_p / (power_sizes + n_p)


def emission_level(pc: float, gr: float, floor: float) -> float:
    return max(floor, pc * (1.0 - gr))


def recompute_emission_levels(states: list[EnterpriseState], n_p: int, cfg: SimConfig) -> None:
    """Refresh every x^l from current effective investments and completed projects."""
    if not states:
        raise ValueError("no enterprises")
    pcs = [power_consumption(s.skills.research, s.invest_count, cfg.delta) for s in states]
    total = sum(pc * s.skills.size for pc, s in zip(pcs, states))
    gr = green_rate(total, n_p)
    for pc, s in zip(pcs, states):
        s.emission_level = emission_level(pc, gr, cfg.emission_floor)


def enterprise_utility(state: EnterpriseState, t: int, cfg: SimConfig) -> float:
    z = max(0.0, state.coins)  # income undefined below zero (post-penalty clamp)
    c_l = labor_coefficient(t, cfg.alpha, cfg.beta)
    return utility(z, state.labor, c_l, cfg.eta)


def apply_produce(state: EnterpriseState, grid: Grid, cfg: SimConfig,
                  rng_pollution: RngStream) -> dict:
    """Build a property underfoot: earn pollution-discounted coins, burn x^l
    credits (shortfall accrues to the excess record), maybe pollute neighbors."""
    pos = state.position
    if grid.cell(*pos).kind != 0:
        raise ValueError(f"produce on non-empty cell {pos} (masking bug)")
    multiplier = grid.production_multiplier(pos, cfg.pollution_discount)
    income = cfg.produce_coin_rate * state.skills.size * multiplier
    state.coins += income
    state.labor += cfg.labor_costs["produce"]
    burn = state.emission_level
    shortfall = 0.0
    if state.credits >= burn:
        state.credits -= burn
    else:
        shortfall = burn - state.credits
        state.credits = 0.0
        state.excess_record += shortfall
        state.excess_produces_this_period += 1
    state.emissions_this_period += burn
    state.total_emissions += burn
    state.coins_earned_this_period += income
    state.produces_this_period += 1
    state.total_properties += 1
    grid.place_property(pos, state.agent)
    polluted: list[tuple[int, int]] = []
    if burn > cfg.pollution_threshold:
        polluted = grid.apply_pollution(pos, rng_pollution, cfg.pollution_radius,
                                        cfg.pollution_discount, cfg.pollution_prob)
    return {"income": income, "burn": burn, "shortfall": shortfall, "polluted": polluted}


def apply_invest(state: EnterpriseState, t: int, cfg: SimConfig,
                 rng_invest: RngStream) -> dict:
    """Pay 5/Rc coins and one labor; on success the investment matures after
    the configured delay."""
    if state.coins <= 0.0:
        raise ValueError("invest requires positive coins (masking bug)")
    cost = cfg.invest_coin_cost_numerator / state.skills.research
    state.coins -= cost
    state.labor += cfg.labor_costs["invest"]
    state.total_invest_actions += 1
    success = rng_invest.random() >= cfg.invest_fail_prob
    if success:
        state.pending_invests.append(t + cfg.invest_delay)
    return {"cost": cost, "success": success}


def mature_invests(state: EnterpriseState, t: int) -> int:
    """Count pending investments due at or before t and drop them from the queue."""
    due = [a for a in state.pending_invests if a <= t]
    if due:
        state.pending_invests = [a for a in state.pending_invests if a > t]
        state.invest_count += len(due)
    return len(due)


def apply_enter_project(state: EnterpriseState, cfg: SimConfig) -> dict:
    """Complete an adjacent certified project: high coin/labor cost, credit reward."""
    if state.coins < cfg.project_coin_cost:
        raise ValueError("insufficient coins for project entry (masking bug)")
    state.coins -= cfg.project_coin_cost
    state.labor += cfg.project_labor_cost
    state.credits += cfg.project_credit_reward
    state.total_projects_built += 1
    return {"cost": cfg.project_coin_cost, "reward": cfg.project_credit_reward}
