"""Simulation configuration and the deterministic RNG contract.

Every tunable constant of the simulator lives in :class:`SimConfig`; nothing
numeric is hard-coded elsewhere. Configs serialize to a canonical JSON form
with an explicit ``format_version``; unknown keys are rejected rather than
silently ignored so stale config files fail loudly.

Randomness is drawn from labeled, counter-based streams
(:class:`RngStream`): the value of draw ``k`` on stream ``(seed, label)`` is
a pure function of ``(seed, label, k)``, so adding draws in one subsystem
never perturbs another and replay is bit-exact across platforms.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, fields, replace

FORMAT_VERSION = 1

ACTION_KINDS = ("move", "produce", "invest", "trade", "noop")


class ConfigError(ValueError):
    """Raised on malformed config text or an invariant violation."""


def _default_labor_costs() -> dict[str, float]:
    return {"move": 1.0, "produce": 1.0, "invest": 1.0, "trade": 0.05, "noop": 0.0}


@dataclass(frozen=True)
class SimConfig:
    # episode shape
    n_enterprises: int = 5
    n_periods: int = 10
    steps_per_period: int = 100
    grid_width: int = 40
    grid_height: int = 40

    # utility / emission constants
    eta: float = 0.23
    alpha: float = 0.2
    beta: float = 500.0
    delta: float = 0.1
    climate_coeff: float = 0.002
    emission_floor: float = 0.1

    # credits and costs
    total_credit_budget: float = 600.0
    produce_coin_rate: float = 10.0
    invest_coin_cost_numerator: float = 5.0
    labor_costs: dict[str, float] = field(default_factory=_default_labor_costs)

    # market
    trade_price_levels: int = 10
    order_lifetime: int = 50
    max_open_orders: int = 5

    # government-certified projects
    project_coin_cost: float = 50.0
    project_labor_cost: float = 2.0
    project_credit_reward: float = 1.0

    # pollution
    pollution_radius: int = 1
    pollution_discount: float = 0.3
    pollution_prob: float = 0.5
    pollution_threshold: float = 0.5

    # investment frictions
    invest_delay: int = 10
    invest_forget_rate: float = 0.02
    invest_fail_prob: float = 0.1

    # punishment
    default_punishment: float = 20.0
    punishment_max: float = 40.0

    # skills sampled per enterprise at episode start
    skill_size_min: float = 1.0
    skill_size_max: float = 3.0
    skill_research_min: float = 1.0
    skill_research_max: float = 3.0

    # observations
    obs_window: int = 11
    price_history_periods: int = 3

    # Convex schedule shape (quadratic peaking early in the horizon)
    decreasing_ratio: float = 0.52
    convex_peak_fraction: float = 1.0 / 3.0
    convex_curvature: float = 4.0
    convex_floor: float = 0.1

    seed: int = 0
    format_version: int = FORMAT_VERSION

    def validate(self) -> None:
        def req(ok: bool, name: str, why: str) -> None:
            if not ok:
                raise ConfigError(f"{name} {why}")

        req(0.0 < self.eta < 1.0, "eta", "out of range (0,1)")
        req(0.0 < self.emission_floor < 1.0, "emission_floor", "out of range (0,1)")
        req(0.0 < self.pollution_discount < 1.0, "pollution_discount", "out of range (0,1)")
        req(0.0 <= self.pollution_prob <= 1.0, "pollution_prob", "out of range [0,1]")
        req(0.0 <= self.invest_fail_prob <= 1.0, "invest_fail_prob", "out of range [0,1]")
        req(0.0 <= self.invest_forget_rate <= 1.0, "invest_forget_rate", "out of range [0,1]")
        req(self.steps_per_period >= 2, "steps_per_period", "must be >= 2")
        req(self.n_periods >= 1, "n_periods", "must be >= 1")
        req(self.n_enterprises >= 1, "n_enterprises", "must be >= 1")
        req(
            self.order_lifetime < self.n_periods * self.steps_per_period,
            "order_lifetime",
            "must be shorter than the episode",
        )
        req(self.order_lifetime >= 1, "order_lifetime", "must be >= 1")
        req(self.grid_width >= 1 and self.grid_height >= 1, "grid_width/grid_height", "must be >= 1")
        req(self.trade_price_levels >= 1, "trade_price_levels", "must be >= 1")
        req(self.max_open_orders >= 1, "max_open_orders", "must be >= 1")
        req(self.beta > 0.0, "beta", "must be > 0")
        req(self.delta >= 0.0, "delta", "must be >= 0")
        req(self.alpha >= 0.0, "alpha", "must be >= 0")
        req(self.produce_coin_rate > 0.0, "produce_coin_rate", "must be > 0")
        req(self.invest_coin_cost_numerator > 0.0, "invest_coin_cost_numerator", "must be > 0")
        req(self.total_credit_budget >= 0.0, "total_credit_budget", "must be >= 0")
        req(self.default_punishment >= 0.0, "default_punishment", "must be >= 0")
        req(self.punishment_max > 0.0, "punishment_max", "must be > 0")
        req(
            self.default_punishment <= self.punishment_max,
            "default_punishment",
            "must not exceed punishment_max",
        )
        req(self.invest_delay >= 0, "invest_delay", "must be >= 0")
        req(self.pollution_radius >= 0, "pollution_radius", "must be >= 0")
        req(self.obs_window >= 1 and self.obs_window % 2 == 1, "obs_window", "must be odd and >= 1")
        req(self.price_history_periods >= 1, "price_history_periods", "must be >= 1")
        req(
            0.0 < self.skill_size_min <= self.skill_size_max,
            "skill_size_min/skill_size_max",
            "must satisfy 0 < min <= max",
        )
        req(
            0.0 < self.skill_research_min <= self.skill_research_max,
            "skill_research_min/skill_research_max",
            "must satisfy 0 < min <= max",
        )
        req(self.seed >= 0, "seed", "must be a non-negative integer")
        req(
            self.format_version == FORMAT_VERSION,
            "format_version",
            f"unsupported (expected {FORMAT_VERSION})",
        )
        req(
            set(self.labor_costs) == set(ACTION_KINDS),
            "labor_costs",
            f"must map exactly the action kinds {sorted(ACTION_KINDS)}",
        )
        req(all(v >= 0 for v in self.labor_costs.values()), "labor_costs", "must be non-negative")
        req(0.0 < self.decreasing_ratio < 1.0, "decreasing_ratio", "out of range (0,1)")
        req(0.0 < self.convex_peak_fraction < 1.0, "convex_peak_fraction", "out of range (0,1)")
        req(self.convex_curvature >= 0.0, "convex_curvature", "must be >= 0")
        req(0.0 < self.convex_floor <= 1.0, "convex_floor", "out of range (0,1]")

    @property
    def horizon(self) -> int:
        return self.n_periods * self.steps_per_period

    def with_overrides(self, **kwargs) -> "SimConfig":
        cfg = replace(self, **kwargs)
        cfg.validate()
        return cfg


_FIELD_NAMES = {f.name for f in fields(SimConfig)}
_INT_FIELDS = {f.name for f in fields(SimConfig) if f.type == "int"}


def load_config(text: str) -> SimConfig:
    """Parse config JSON; unspecified fields take defaults, unknown keys fail."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config parse failure: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(data) - _FIELD_NAMES)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key == "labor_costs":
            if not isinstance(value, dict):
                raise ConfigError("labor_costs must be an object")
            kwargs[key] = {k: float(v) for k, v in value.items()}
        elif key in _INT_FIELDS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise ConfigError(f"{key} must be an integer")
            kwargs[key] = value
        else:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{key} must be a number")
            kwargs[key] = float(value)
    cfg = SimConfig(**kwargs)
    cfg.validate()
    return cfg


def save_config(cfg: SimConfig) -> str:
    """Canonical JSON form: sorted keys, compact separators."""
    data = {}
    for f in fields(SimConfig):
        value = getattr(cfg, f.name)
        data[f.name] = dict(sorted(value.items())) if isinstance(value, dict) else value
    return json.dumps(data, sort_keys=True, separators=(",", ":"))


def config_hash(cfg: SimConfig) -> str:
    return hashlib.sha256(save_config(cfg).encode()).hexdigest()


class RngStream:
    """Counter-based deterministic random stream keyed by (seed, label).

    Draw k is sha256(seed || label || k) reduced to a uniform double, so the
    sequence is reproducible across platforms and independent of any other
    stream's draw count.
    """

    __slots__ = ("seed", "stream_label", "counter", "_prefix")

    def __init__(self, seed: int, stream_label: str, counter: int = 0):
        if not stream_label:
            raise ValueError("stream label must be nonempty")
        if seed < 0:
            raise ValueError("seed must be non-negative")
        self.seed = seed
        self.stream_label = stream_label
        self.counter = counter
        self._prefix = seed.to_bytes(8, "little") + stream_label.encode()

    def random(self) -> float:
        """Uniform draw in [0, 1)."""
        digest = hashlib.sha256(self._prefix + self.counter.to_bytes(8, "little")).digest()
        self.counter += 1
        return int.from_bytes(digest[:8], "little") / 2.0**64

    def randrange(self, n: int) -> int:
        """Uniform integer in [0, n)."""
        if n <= 0:
            raise ValueError("randrange bound must be positive")
        return int(self.random() * n)

    def choice(self, seq):
        return seq[self.randrange(len(seq))]


def derive_stream(seed: int, label: str) -> RngStream:
    return RngStream(seed, label)
