"""Baseline government allocation policies (schedule x indicator) and the
scripted enterprise heuristic standing in for learned agents.

Schedules shape the per-period credit release (Flat, Decreasing, Convex);
indicators shape the per-enterprise split (grandfathering GF, benchmarking
BM, size SI). The scripted enterprise paces its production against its
period quota, tolerates a punishment-dependent amount of beyond-credit
production, invests while its emission level is high, trades credits toward
its shortfall or surplus, and completes affordable certified projects.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import actions as act
from .config import SimConfig
from .government import GovernmentAction

SCHEDULES = ("flat", "decreasing", "convex")
INDICATORS = ("gf", "bm", "si")


class PolicyError(ValueError):
    pass


def schedule_weights(kind: str, n_periods: int, cfg: SimConfig) -> list[float]:
    """Relative absolute-grant weights per period (1-based periods)."""
    n = n_periods
    if kind == "flat":
        return [1.0] * n
    if kind == "decreasing":
        # geometric decay: strongly front-loaded
        return [cfg.decreasing_ratio ** k for k in range(n)]
    if kind == "convex":
        peak = max(1, round(n * cfg.convex_peak_fraction))
        return [
            max(cfg.convex_floor, 1.0 - cfg.convex_curvature * ((k - peak) / n) ** 2)
            for k in range(1, n + 1)
        ]
    raise PolicyError(f"unknown schedule {kind!r} (valid: {', '.join(SCHEDULES)})")


def schedule_fraction(kind: str, period: int, n_periods: int, cfg: SimConfig) -> float:
    """Fraction of the remaining budget to release in `period` (1-based).

    The final period always returns 1 so every schedule exhausts the budget.
    """
    if not 1 <= period <= n_periods:
        raise PolicyError(f"period {period} out of range [1, {n_periods}]")
    if period == n_periods:
        return 1.0
    weights = schedule_weights(kind, n_periods, cfg)
    tail = sum(weights[period - 1:])
    return weights[period - 1] / tail


def indicator_weights(kind: str, sizes: list[float],
                      prev_emissions: list[float] | None,
                      prev_coins: list[float] | None) -> list[float]:
    """Normalized per-enterprise allocation weights.

    GF and BM need a completed period of history; both fall back to SI for
    the first period (or when the history is degenerate).
    """
    if not sizes:
        raise PolicyError("empty enterprise list")
    if kind not in INDICATORS:
        raise PolicyError(f"unknown indicator {kind!r} (valid: {', '.join(INDICATORS)})")
    raw: list[float] | None = None
    if kind == "gf" and prev_emissions is not None:
        raw = list(prev_emissions)
    elif kind == "bm" and prev_emissions is not None and prev_coins is not None:
        intensities = []
        for e, c in zip(prev_emissions, prev_coins):
            intensities.append(e / c if c > 0.0 else None)
        observed = [v for v in intensities if v is not None]
        ceiling = max(observed) if observed else 0.0
        # zero-production enterprises inherit the worst observed intensity
        raw = [v if v is not None else ceiling for v in intensities]
    if raw is None or sum(raw) <= 0.0:
        raw = list(sizes)  # SI, also the fallback
    total = sum(raw)
    return [w / total for w in raw]


def baseline_government(schedule: str, indicator: str, punishment: float,
                        cfg: SimConfig):
    """Compose a schedule and an indicator into a government policy callable,
    quantized onto the 101-level action grid with the punishment pinned."""
    if schedule not in SCHEDULES:
        raise PolicyError(f"unknown schedule {schedule!r} (valid: {', '.join(SCHEDULES)})")
    if indicator not in INDICATORS:
        raise PolicyError(f"unknown indicator {indicator!r} (valid: {', '.join(INDICATORS)})")
    if not 0.0 <= punishment <= cfg.punishment_max:
        raise PolicyError(f"punishment {punishment} out of [0, {cfg.punishment_max}]")
    punish_level = round(punishment / cfg.punishment_max * 100.0)

    def policy(obs) -> GovernmentAction:
        period = obs.period + 1  # 1-based
        frac = schedule_fraction(schedule, period, obs.n_periods, cfg)
        level = min(100, max(0, round(frac * 100.0)))
        if frac > 0.0 and level == 0:
            level = 1
        sizes = [e["size"] for e in obs.enterprises]
        weights = indicator_weights(indicator, sizes, obs.prev_period_emissions,
                                    obs.prev_period_coins)
        weight_levels = [min(100, max(0, round(w * 100.0))) for w in weights]
        if sum(weight_levels) == 0:
            weight_levels[weights.index(max(weights))] = 1
        return GovernmentAction(tuple([level] + weight_levels + [punish_level]))

    return policy


@dataclass(frozen=True)
class ScriptedEnterprisePolicy:
    """Heuristic stand-in for a learned enterprise agent.

    produce_bias: target produce actions per period (paced over the period).
    invest_threshold: keep investing while own emission level exceeds this.
    trade_margin: scales the price level quoted around the recent mean.
    project_appetite: coin multiple of the project cost required before
        seeking out certified projects.
    excess_quota: beyond-credit produces tolerated per period at zero
        punishment; scaled down linearly as punishment rises.
    invest_rate: per-step probability of investing when conditions hold.
    """

    produce_bias: float = 20.0
    invest_threshold: float = 0.8
    trade_margin: float = 1.0
    project_appetite: float = 1.5
    excess_quota: float = 4.0
    invest_rate: float = 0.05

    def act(self, obs, rng) -> int:
        mask = obs.action_mask
        levels = (len(mask) - 7) // 2
        if not any(mask[1:]):
            return act.NOOP

        quota_now = self.produce_bias * (obs.step_in_period + 1) / obs.steps_per_period
        tolerance = 1.0 - obs.punishment / obs.punishment_max
        excess_allow = int(self.excess_quota * max(0.0, tolerance))
        can_cover = obs.credits >= obs.emission_level
        # overshoot is only worth the penalty risk as a marginal top-up on a
        # normally supplied period, never as a business model of its own
        covered = obs.produces_this_period - obs.excess_produces_this_period
        may_exceed = (obs.excess_produces_this_period < excess_allow
                      and covered >= 0.25 * self.produce_bias)

        # building underfoot removes this cell as an exit; keep an escape
        # route that is not itself a dead end (unless already boxed in)
        open_dirs = sum(1 for n in obs.neighbors if n[0])
        viable_exit = any(n[0] and n[5] > 0 for n in obs.neighbors)
        if (mask[act.PRODUCE] and obs.produces_this_period < quota_now
                and (can_cover or may_exceed)
                and (viable_exit or open_dirs == 0)):
            return act.PRODUCE

        if (mask[act.INVEST] and obs.emission_level > self.invest_threshold
                and obs.coins > 20.0 and rng.random() < self.invest_rate):
            return act.INVEST

        base = 0.0
        for i in range(0, len(obs.market_summary), 2):
            if obs.market_summary[i] > 0.0:
                base = obs.market_summary[i]
                break
        level = min(levels, max(1, round((base if base else 3.0) * self.trade_margin)))

        if not can_cover and obs.produces_this_period < self.produce_bias:
            bid = act.BID_BASE + level - 1
            if mask[bid] and obs.coins >= 2.0 * level and rng.random() < 0.5:
                return bid
        period_need = obs.emission_level * max(
            0.0, self.produce_bias - obs.produces_this_period)
        if obs.credits > period_need + 1.0:
            ask = act.BID_BASE + levels + level - 1
            if mask[ask] and rng.random() < 0.5:
                return ask

        # head toward (or into) a nearby certified project when flush with
        # coins and not needed at the production front
        if (obs.nearest_project is not None
                and obs.coins >= obs.project_coin_cost * self.project_appetite
                and abs(obs.nearest_project[0]) + abs(obs.nearest_project[1]) <= 10
                and obs.produces_this_period >= quota_now):
            dx, dy = obs.nearest_project
            preferred = []
            if dy > 0:
                preferred.append(0)  # N
            if dy < 0:
                preferred.append(1)  # S
            if dx > 0:
                preferred.append(2)  # E
            if dx < 0:
                preferred.append(3)  # W
            for d in preferred:
                if mask[act.MOVE_BASE + d] and (
                        obs.neighbors[d][4] or obs.neighbors[d][0]):
                    return act.MOVE_BASE + d

        # Each agent works its own horizontal band of the grid and clears it
        # boustrophedon-style (east on even rows, west on odd, stepping to
        # the next band row when a row is exhausted). Bands keep the agents'
        # property trails apart so they cannot wall each other in, and the
        # sweep front always faces fresh ground. Only move with a reason to.
        if obs.underfoot_kind == 0 and obs.produces_this_period >= quota_now:
            return act.NOOP  # on a clean cell, ahead of pace: wait
        x, y = obs.position
        band = obs.grid_height // obs.n_enterprises
        y0 = obs.agent * band
        y1 = obs.grid_height if obs.agent == obs.n_enterprises - 1 else y0 + band
        if y < y0:
            order = [0, 2, 3, 1]  # head north into the band
        elif y >= y1:
            order = [1, 2, 3, 0]  # head south into the band
        else:
            horiz = [2, 3] if (y - y0) % 2 == 0 else [3, 2]
            vert = [0, 1] if y + 1 < y1 else [1, 0]  # next band row first
            order = [horiz[0], vert[0], horiz[1], vert[1]]
        for d in order:
            if mask[act.MOVE_BASE + d] and obs.neighbors[d][0]:
                return act.MOVE_BASE + d
        return act.NOOP


def resolve_enterprise(name: str):
    if name == "scripted":
        policy = ScriptedEnterprisePolicy()
        return policy.act
    if name == "noop":
        return lambda obs, rng: act.NOOP
    raise PolicyError(f"unknown enterprise policy {name!r} (valid: scripted, noop)")


def government_policy_names() -> list[str]:
    return [f"{s}x{i}" for s in SCHEDULES for i in INDICATORS]


def resolve_government(name: str, cfg: SimConfig, punishment: float | None = None):
    key = name.lower().replace("×", "x")
    for sep in ("x", "_", "-"):
        for schedule in SCHEDULES:
            if key == f"{schedule}{sep}gf" or key == f"{schedule}{sep}bm" or key == f"{schedule}{sep}si":
                indicator = key[len(schedule) + len(sep):]
                p = cfg.default_punishment if punishment is None else punishment
                return baseline_government(schedule, indicator, p, cfg)
    raise PolicyError(
        f"unknown government policy {name!r} (valid: {', '.join(government_policy_names())})")
