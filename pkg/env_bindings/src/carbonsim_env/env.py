"""Gym-style multi-agent environment over the carbonsim engine.

API: make_env / reset / step / spaces / close. One handle drives one episode
stream; all dynamics live in the native engine and the handle only holds the
opaque state plus which agents are externally controlled. The turn structure
is flattened: at period-start timesteps only the government's action is
consumed (enterprise entries are ignored), at every other timestep only the
enterprises'. The observation map returned by reset/step therefore contains
exactly the controlled agents whose actions the next step will consume.

Observations are maps of named numeric arrays:
  enterprises: local_map (window, window, 3: cell kind / pollution /
               project-complete), features (flat vector, layout below),
               action_mask (bool, one per discrete action)
  government:  features (flat vector)

A reward-discount factor is a trainer-side concern; the engine never uses
one (see GAMMA_METADATA).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from carbonsim import actions as act
from carbonsim.config import SimConfig, load_config
from carbonsim.engine import (
    SimState,
    local_map,
    new_episode,
    observe_enterprise,
    observe_government,
    step as engine_step,
    _shared_obs,
    _summarize,
)
from carbonsim.government import GovernmentAction
from carbonsim.policies import resolve_enterprise, resolve_government
from carbonsim.trace import EpisodeTrace, make_header

GOV = "gov"
LOCAL_MAP_CHANNELS = 3
ENT_SCALAR_FEATURES = 25  # see _enterprise_features
NEIGHBOR_FEATURES = 24  # 4 directions x 6 facts
GOV_SCALAR_FEATURES = 8
GOV_PER_ENTERPRISE = 10
GAMMA_METADATA = {"note": "discounting is trainer-side; the engine never discounts"}


class EnvError(RuntimeError):
    pass


@dataclass(frozen=True)
class SpaceDescriptor:
    """Per-agent observation array shapes and action schema."""

    observation: dict  # name -> shape tuple
    action: dict  # discrete: {kind, n}; multi_discrete: {kind, dims, levels}


@dataclass
class EnvHandle:
    cfg: SimConfig
    controlled: tuple
    gov_policy_name: str
    ent_policy_name: str
    gov_policy: object
    ent_policy: object
    state: SimState | None = None
    trace: EpisodeTrace | None = None
    terminated: bool = False
    closed: bool = False
    last_rewards: dict = field(default_factory=dict)


def make_env(config_text: str | None = None, controlled: list | None = None,
             gov_policy: str = "flatxsi", ent_policy: str = "scripted") -> EnvHandle:
    """Create a handle. `controlled` lists externally driven agents: the
    string "gov" and/or enterprise indices. Uncontrolled agents fall back to
    the named policies (which also label the trace header)."""
    cfg = SimConfig() if config_text is None else load_config(config_text)
    controlled = tuple(controlled or [])
    for agent in controlled:
        if agent != GOV and not (isinstance(agent, int) and 0 <= agent < cfg.n_enterprises):
            raise EnvError(f"unknown agent {agent!r} in controlled list")
    return EnvHandle(
        cfg=cfg,
        controlled=controlled,
        gov_policy_name=gov_policy,
        ent_policy_name=ent_policy,
        gov_policy=resolve_government(gov_policy, cfg),
        ent_policy=resolve_enterprise(ent_policy),
    )


def spaces(handle: EnvHandle) -> dict:
    """SpaceDescriptor per possible agent; constant for a fixed config and
    queryable before reset."""
    _check_open(handle)
    cfg = handle.cfg
    n_actions = act.action_space_size(cfg)
    w = cfg.obs_window
    ent = SpaceDescriptor(
        observation={
            "local_map": (w, w, LOCAL_MAP_CHANNELS),
            "features": (ENT_SCALAR_FEATURES + NEIGHBOR_FEATURES
                         + 2 * cfg.price_history_periods,),
            "action_mask": (n_actions,),
        },
        action={"kind": "discrete", "n": n_actions},
    )
    gov = SpaceDescriptor(
        observation={
            "features": (GOV_SCALAR_FEATURES
                         + GOV_PER_ENTERPRISE * cfg.n_enterprises
                         + 2 * cfg.price_history_periods,),
        },
        action={"kind": "multi_discrete",
                "dims": cfg.n_enterprises + 2, "levels": 101},
    )
    return {GOV: gov, **{i: ent for i in range(cfg.n_enterprises)}}


def reset(handle: EnvHandle, seed: int) -> dict:
    """Start a fresh episode; returns observations for the controlled agents
    whose actions the next step will consume (the government at t=0)."""
    _check_open(handle)
    handle.state = new_episode(handle.cfg, seed)
    handle.trace = EpisodeTrace(header=make_header(
        handle.cfg, seed, handle.gov_policy_name, handle.ent_policy_name))
    handle.terminated = False
    handle.last_rewards = {}
    return _observations(handle)


def step(handle: EnvHandle, actions: dict | None = None) -> tuple[dict, dict, dict, dict]:
    """Advance one native timestep.

    `actions` maps controlled agent -> action (enterprise: int index;
    government: sequence of n_enterprises + 2 levels in [0, 100]). Entries
    for agents that are not due this step are ignored; missing enterprise
    entries default to no-op, a missing government entry is an error.
    Returns (observations, rewards, terminated flags, info).
    """
    _check_open(handle)
    state = handle.state
    if state is None:
        raise EnvError("reset() must be called before step()")
    if handle.terminated:
        raise EnvError("episode already terminated; call reset()")
    actions = actions or {}
    cfg = handle.cfg
    is_gov_turn = state.t % cfg.steps_per_period == 0

    if is_gov_turn:
        if GOV in handle.controlled:
            if GOV not in actions:
                raise EnvError("government action required at a period-start step")
            gov_action = GovernmentAction(tuple(int(v) for v in actions[GOV]))
        else:
            gov_action = handle.gov_policy(observe_government(state))
        events = engine_step(state, gov_action, {})
    else:
        shared = _shared_obs(state)
        ent_actions = {}
        for i in range(cfg.n_enterprises):
            if i in handle.controlled:
                ent_actions[i] = int(actions.get(i, act.NOOP))
            else:
                obs = observe_enterprise(state, i, shared)
                ent_actions[i] = handle.ent_policy(obs, state.rng_policy[i])
        events = engine_step(state, None, ent_actions)

    handle.trace.events.extend(events)
    rewards = _rewards(handle, events)
    handle.terminated = state.t >= cfg.horizon
    info = {"t": state.t, "period": state.period, "gamma": GAMMA_METADATA}
    if handle.terminated:
        handle.trace.summary = _summarize(state)
        info["summary"] = handle.trace.summary
        info["trace_digest"] = handle.trace.digest()
    terminated = {agent: handle.terminated for agent in handle.controlled}
    terminated["__all__"] = handle.terminated
    return _observations(handle), rewards, terminated, info


def close(handle: EnvHandle) -> None:
    handle.closed = True
    handle.state = None


def _check_open(handle: EnvHandle) -> None:
    if handle.closed:
        raise EnvError("handle is closed")


def _rewards(handle: EnvHandle, events: list) -> dict:
    ent_rewards = next(ev[2] for ev in events if ev[0] == "rewards")
    gov_reward = next((ev[6] for ev in events if ev[0] == "metrics"), 0.0)
    out = {}
    for agent in handle.controlled:
        out[agent] = gov_reward if agent == GOV else ent_rewards[agent]
    return out


def _observations(handle: EnvHandle) -> dict:
    state = handle.state
    if handle.terminated or state.t >= handle.cfg.horizon:
        return {}
    is_gov_turn = state.t % handle.cfg.steps_per_period == 0
    obs: dict = {}
    if is_gov_turn:
        if GOV in handle.controlled:
            obs[GOV] = _government_arrays(state)
    else:
        shared = _shared_obs(state)
        for i in range(handle.cfg.n_enterprises):
            if i in handle.controlled:
                obs[i] = _enterprise_arrays(state, i, shared)
    return obs


def _enterprise_arrays(state: SimState, agent: int, shared: dict) -> dict:
    o = observe_enterprise(state, agent, shared)
    window = np.asarray(local_map(state, agent), dtype=np.float64)
    nearest = o.nearest_project or (0, 0)
    scalars = [
        float(o.t), float(o.period), float(o.step_in_period),
        float(o.position[0]), float(o.position[1]),
        o.size, o.research, o.coins, o.credits, o.emission_level, o.labor,
        o.invest_count, float(o.produces_this_period),
        float(o.excess_produces_this_period), o.period_grant,
        o.avg_emission_level, o.punishment, o.punishment_max,
        o.project_coin_cost, float(o.underfoot_kind), o.underfoot_pollution,
        float(o.own_open_orders),
        float(nearest[0]), float(nearest[1]),
        1.0 if o.nearest_project is not None else 0.0,
    ]
    assert len(scalars) == ENT_SCALAR_FEATURES
    for nb in o.neighbors:
        scalars.extend([float(nb[0]), float(nb[1]), float(nb[2]),
                        float(nb[3]), float(nb[4]), float(nb[5])])
    scalars.extend(float(v) for v in o.market_summary)
    return {
        "local_map": window,
        "features": np.asarray(scalars, dtype=np.float64),
        "action_mask": np.asarray(o.action_mask, dtype=bool),
    }


def _government_arrays(state: SimState) -> dict:
    o = observe_government(state)
    scalars = [
        float(o.t), float(o.period), float(o.n_periods),
        o.remaining_budget, o.total_budget, o.punishment,
        float(o.n_projects_total), float(o.n_projects_complete),
    ]
    assert len(scalars) == GOV_SCALAR_FEATURES
    for e in o.enterprises:
        scalars.extend([
            float(e["id"]), e["size"], e["research"], e["coins"], e["credits"],
            e["emission_level"], e["labor"], e["excess_record"],
            float(e["position"][0]), float(e["position"][1]),
        ])
    scalars.extend(float(v) for v in o.market_summary)
    return {"features": np.asarray(scalars, dtype=np.float64)}
